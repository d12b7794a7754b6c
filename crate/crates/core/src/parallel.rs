//! Order-independent parallel reductions.
//!
//! Work is split into fixed-size chunks; each chunk is reduced sequentially
//! and the chunk results are combined in index order, so the floating-point
//! result does not depend on the number of threads.

use rayon::prelude::*;

pub const CHUNK: usize = 512;

/// Deterministic parallel sum of `f(i)` for `i in 0..n`.
pub fn sum_by<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let partials: Vec<f64> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n);
            (lo..hi).map(&f).sum::<f64>()
        })
        .collect();
    partials.into_iter().sum()
}

/// Deterministic parallel accumulation into a vector of length `len`.
///
/// `acc(i, buf)` adds the contribution of item `i` into `buf`. Also returns a
/// scalar accumulated the same way through `acc`'s return value.
pub fn accumulate<F>(n: usize, len: usize, acc: F) -> (f64, Vec<f64>)
where
    F: Fn(usize, &mut [f64]) -> f64 + Sync,
{
    let partials: Vec<(f64, Vec<f64>)> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n);
            let mut buf = vec![0.0; len];
            let mut s = 0.0;
            for i in lo..hi {
                s += acc(i, &mut buf);
            }
            (s, buf)
        })
        .collect();
    let mut total = 0.0;
    let mut out = vec![0.0; len];
    for (s, buf) in partials {
        total += s;
        for (o, b) in out.iter_mut().zip(buf) {
            *o += b;
        }
    }
    (total, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_matches_sequential_chunks() {
        let f = |i: usize| 1.0 / (1.0 + i as f64);
        let n = 5 * CHUNK + 17;
        let expect: f64 = (0..n.div_ceil(CHUNK))
            .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(n)).map(f).sum::<f64>())
            .sum();
        assert_eq!(sum_by(n, f), expect);
    }

    #[test]
    fn accumulate_vector() {
        let (s, v) = accumulate(1000, 2, |i, buf| {
            buf[i % 2] += 1.0;
            0.5
        });
        assert_eq!(s, 500.0);
        assert_eq!(v, vec![500.0, 500.0]);
    }
}
