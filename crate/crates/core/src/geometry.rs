//! Convex polygon primitives for two-dimensional value supports.

pub type Point = [f64; 2];

/// Vertices closer than this are merged after clipping.
pub const VERTEX_EPS: f64 = 1e-12;

/// Closed half-plane `{v : a·v >= b}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfPlane {
    pub a: [f64; 2],
    pub b: f64,
}

impl HalfPlane {
    pub fn new(a: [f64; 2], b: f64) -> Self {
        Self { a, b }
    }

    #[inline]
    pub fn eval(&self, p: Point) -> f64 {
        self.a[0] * p[0] + self.a[1] * p[1] - self.b
    }
}

/// Signed area (positive for counter-clockwise vertex order).
pub fn signed_area(poly: &[Point]) -> f64 {
    if poly.len() < 3 {
        return 0.0;
    }
    let n = poly.len();
    let mut acc = 0.0;
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        acc += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * acc
}

pub fn area(poly: &[Point]) -> f64 {
    signed_area(poly).abs()
}

/// Area centroid; falls back to the vertex mean for degenerate polygons.
pub fn centroid(poly: &[Point]) -> Point {
    let a = signed_area(poly);
    if a.abs() < 1e-300 {
        let n = poly.len().max(1) as f64;
        let sx: f64 = poly.iter().map(|p| p[0]).sum();
        let sy: f64 = poly.iter().map(|p| p[1]).sum();
        return [sx / n, sy / n];
    }
    let n = poly.len();
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        let cross = p[0] * q[1] - q[0] * p[1];
        cx += (p[0] + q[0]) * cross;
        cy += (p[1] + q[1]) * cross;
    }
    [cx / (6.0 * a), cy / (6.0 * a)]
}

/// Sutherland–Hodgman clip of a convex polygon against one half-plane.
pub fn clip(poly: &[Point], hp: &HalfPlane) -> Vec<Point> {
    if poly.is_empty() {
        return Vec::new();
    }
    if hp.a == [0.0, 0.0] {
        return if hp.b <= 0.0 { poly.to_vec() } else { Vec::new() };
    }
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let s = poly[i];
        let e = poly[(i + 1) % n];
        let ds = hp.eval(s);
        let de = hp.eval(e);
        let s_in = ds >= 0.0;
        let e_in = de >= 0.0;
        if s_in != e_in {
            let t = ds / (ds - de);
            out.push([s[0] + (e[0] - s[0]) * t, s[1] + (e[1] - s[1]) * t]);
        }
        if e_in {
            out.push(e);
        }
    }
    dedup(out)
}

pub fn clip_all(poly: &[Point], planes: &[HalfPlane]) -> Vec<Point> {
    let mut cur = poly.to_vec();
    for hp in planes {
        if cur.is_empty() {
            break;
        }
        cur = clip(&cur, hp);
    }
    cur
}

fn dedup(mut pts: Vec<Point>) -> Vec<Point> {
    let close = |a: Point, b: Point| (a[0] - b[0]).abs() <= VERTEX_EPS && (a[1] - b[1]).abs() <= VERTEX_EPS;
    let mut out: Vec<Point> = Vec::with_capacity(pts.len());
    for p in pts.drain(..) {
        if out.last().is_none_or(|&q| !close(p, q)) {
            out.push(p);
        }
    }
    while out.len() > 1 && close(out[0], *out.last().unwrap()) {
        out.pop();
    }
    out
}

/// Parameter interval `[t0, t1] ⊆ [0, 1]` of the segment `p + t·(q − p)` lying
/// in every half-plane, or `None` when the intersection is empty.
pub fn clip_segment(p: Point, q: Point, planes: &[HalfPlane]) -> Option<(f64, f64)> {
    let (mut t0, mut t1) = (0.0f64, 1.0f64);
    for hp in planes {
        let fp = hp.eval(p);
        let fq = hp.eval(q);
        let df = fq - fp;
        if df == 0.0 {
            if fp < 0.0 {
                return None;
            }
            continue;
        }
        // fp + t·df >= 0
        let t = -fp / df;
        if df > 0.0 {
            t0 = t0.max(t);
        } else {
            t1 = t1.min(t);
        }
        if t0 > t1 {
            return None;
        }
    }
    Some((t0, t1))
}

pub fn rectangle(w: f64, h: f64) -> Vec<Point> {
    vec![[0.0, 0.0], [w, 0.0], [w, h], [0.0, h]]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_area_and_centroid() {
        let sq = rectangle(1.0, 1.0);
        assert_eq!(area(&sq), 1.0);
        assert_eq!(centroid(&sq), [0.5, 0.5]);
    }

    #[test]
    fn clip_square_by_diagonal() {
        // keep v1 + v2 >= 0.8
        let hp = HalfPlane::new([1.0, 1.0], 0.8);
        let poly = clip(&rectangle(1.0, 1.0), &hp);
        assert!((area(&poly) - (1.0 - 0.32)).abs() < 1e-15);
        assert!(signed_area(&poly) > 0.0);
    }

    #[test]
    fn clip_through_vertex_dedups() {
        let hp = HalfPlane::new([1.0, 1.0], 1.0);
        let poly = clip(&rectangle(1.0, 1.0), &hp);
        assert_eq!(poly.len(), 3);
        assert!((area(&poly) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn degenerate_half_plane() {
        let sq = rectangle(1.0, 1.0);
        assert_eq!(clip(&sq, &HalfPlane::new([0.0, 0.0], -1.0)).len(), 4);
        assert!(clip(&sq, &HalfPlane::new([0.0, 0.0], 1e-9)).is_empty());
    }

    #[test]
    fn segment_clip() {
        let hp = HalfPlane::new([1.0, 0.0], 0.25);
        let (t0, t1) = clip_segment([0.0, 0.0], [1.0, 0.0], &[hp]).unwrap();
        assert!((t0 - 0.25).abs() < 1e-15 && t1 == 1.0);
        assert!(clip_segment([0.0, 0.0], [0.1, 0.0], &[hp]).is_none());
    }
}
