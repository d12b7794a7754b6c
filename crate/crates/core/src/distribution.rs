//! Value distributions and their discretization into weighted grids.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geometry::{self, HalfPlane, Point};

/// Tolerance on the total probability of a grid or density table.
pub const MASS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    /// Uniform on `[0, c1] × [0, c2]`.
    UniformRect { c1: f64, c2: f64 },
    /// Uniform on `{v ≥ 0 : v1/c + v2 ≤ 1}`.
    UniformTriangle { c: f64 },
    /// Piecewise-constant density on the box `[0, upper_1] × … × [0, upper_m]`,
    /// split into `shape[d]` equal cells along each axis. `density` is row-major
    /// with the last axis varying fastest.
    Custom {
        upper: Vec<f64>,
        shape: Vec<usize>,
        density: Vec<f64>,
    },
}

impl DistributionSpec {
    pub fn uniform_rect(c1: f64, c2: f64) -> Self {
        Self::UniformRect { c1, c2 }
    }

    pub fn uniform_triangle(c: f64) -> Self {
        Self::UniformTriangle { c }
    }

    pub fn unit_square() -> Self {
        Self::uniform_rect(1.0, 1.0)
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::UniformRect { .. } | Self::UniformTriangle { .. } => 2,
            Self::Custom { upper, .. } => upper.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::UniformRect { c1, c2 } => {
                if !(c1.is_finite() && *c1 > 0.0) {
                    return Err(invalid("c1", "must be positive"));
                }
                if !(c2.is_finite() && *c2 > 0.0) {
                    return Err(invalid("c2", "must be positive"));
                }
            }
            Self::UniformTriangle { c } => {
                if !(c.is_finite() && *c >= 1.0) {
                    return Err(invalid("c", "triangle requires c >= 1"));
                }
            }
            Self::Custom {
                upper,
                shape,
                density,
            } => {
                if upper.is_empty() || upper.len() != shape.len() {
                    return Err(invalid("shape", "upper and shape must have equal nonzero length"));
                }
                if upper.iter().any(|u| !(u.is_finite() && *u > 0.0)) {
                    return Err(invalid("upper", "bounds must be positive"));
                }
                if shape.iter().any(|&s| s == 0) {
                    return Err(invalid("shape", "every axis needs at least one cell"));
                }
                let cells: usize = shape.iter().product();
                if density.len() != cells {
                    return Err(invalid(
                        "density",
                        format!("expected {cells} entries, got {}", density.len()),
                    ));
                }
                if density.iter().any(|d| !d.is_finite() || *d < 0.0) {
                    return Err(invalid("density", "entries must be finite and nonnegative"));
                }
                let vol = self.custom_cell_volume();
                let total: f64 = density.iter().sum::<f64>() * vol;
                if (total - 1.0).abs() > MASS_TOL {
                    return Err(invalid("density", format!("integrates to {total}, not 1")));
                }
            }
        }
        Ok(())
    }

    fn custom_cell_volume(&self) -> f64 {
        match self {
            Self::Custom { upper, shape, .. } => upper
                .iter()
                .zip(shape)
                .map(|(u, &s)| u / s as f64)
                .product(),
            _ => unreachable!(),
        }
    }

    /// Support polygon (counter-clockwise) for the analytic two-item variants.
    pub fn support_polygon(&self) -> Option<Vec<Point>> {
        match *self {
            Self::UniformRect { c1, c2 } => Some(geometry::rectangle(c1, c2)),
            Self::UniformTriangle { c } => Some(vec![[0.0, 0.0], [c, 0.0], [0.0, 1.0]]),
            Self::Custom { .. } => None,
        }
    }

    /// Constant density of the analytic variants.
    pub fn uniform_density(&self) -> Option<f64> {
        match *self {
            Self::UniformRect { c1, c2 } => Some(1.0 / (c1 * c2)),
            Self::UniformTriangle { c } => Some(2.0 / c),
            Self::Custom { .. } => None,
        }
    }

    /// Componentwise upper bound of the support.
    pub fn upper_bounds(&self) -> Vec<f64> {
        match self {
            Self::UniformRect { c1, c2 } => vec![*c1, *c2],
            Self::UniformTriangle { c } => vec![*c, 1.0],
            Self::Custom { upper, .. } => upper.clone(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Self::UniformRect { c1, c2 } => format!("U[0,{c1}]x[0,{c2}]"),
            Self::UniformTriangle { c } => format!("U{{v1/{c} + v2 <= 1}}"),
            Self::Custom { shape, .. } => format!("custom{shape:?}"),
        }
    }
}

/// Discretized distribution: weighted value points.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueGrid {
    m: usize,
    n: usize,
    points: Vec<f64>,
    mass: Vec<f64>,
}

impl ValueGrid {
    /// Builds a grid from flat `points` (row-major, `m` coordinates each) and
    /// masses; masses must be nonnegative and sum to one.
    pub fn from_parts(m: usize, n: usize, points: Vec<f64>, mass: Vec<f64>) -> Result<Self> {
        if m == 0 || points.len() != m * mass.len() {
            return Err(invalid("points", "length must be m × number of masses"));
        }
        if mass.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(invalid("mass", "entries must be finite and nonnegative"));
        }
        if points.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("grid points"));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(invalid("mass", format!("sums to {total}, not 1")));
        }
        Ok(Self { m, n, points, mass })
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    /// Discretization parameter (intervals per unit length).
    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.m..(i + 1) * self.m]
    }

    pub fn points_flat(&self) -> &[f64] {
        &self.points
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.points.chunks_exact(self.m).zip(self.mass.iter().copied())
    }

    /// Largest total value `Σ v_d` over grid points.
    pub fn max_total_value(&self) -> f64 {
        self.points
            .chunks_exact(self.m)
            .map(|v| v.iter().sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Expected total value `Σ Pr[v] Σ v_d`.
    pub fn mean_total_value(&self) -> f64 {
        self.iter().map(|(v, w)| w * v.iter().sum::<f64>()).sum()
    }

    /// Returns a copy with every value coordinate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            m: self.m,
            n: self.n,
            points: self.points.iter().map(|x| x * factor).collect(),
            mass: self.mass.clone(),
        }
    }

    /// CSV with header `v1,…,vm,mass`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for d in 1..=self.m {
            let _ = write!(out, "v{d},");
        }
        out.push_str("mass\n");
        for (v, w) in self.iter() {
            for x in v {
                let _ = write!(out, "{x},");
            }
            let _ = writeln!(out, "{w}");
        }
        out
    }

    pub fn from_csv(s: &str, n: usize) -> Result<Self> {
        let mut lines = s.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| invalid("csv", "empty input"))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        if cols.len() < 2 || cols.last() != Some(&"mass") {
            return Err(invalid("csv", "header must be v1,…,vm,mass"));
        }
        let m = cols.len() - 1;
        let (mut points, mut mass) = (Vec::new(), Vec::new());
        for (lineno, line) in lines.enumerate() {
            let vals: Vec<f64> = line
                .split(',')
                .map(|t| t.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| invalid("csv", format!("row {}: {e}", lineno + 1)))?;
            if vals.len() != m + 1 {
                return Err(invalid("csv", format!("row {} has {} columns", lineno + 1, vals.len())));
            }
            points.extend_from_slice(&vals[..m]);
            mass.push(vals[m]);
        }
        Self::from_parts(m, n, points, mass)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Discretizes `spec` into cells of side `1/n`.
///
/// Each point sits at the centroid of its cell clipped to the support (the
/// cell center for interior cells) and carries density × clipped area,
/// renormalized to sum to one. `Custom` tables carry their own cells, so `n`
/// is only recorded.
pub fn make_grid(spec: &DistributionSpec, n: usize) -> Result<ValueGrid> {
    if n == 0 {
        return Err(invalid("n", "discretization parameter must be at least 1"));
    }
    spec.validate()?;
    match spec {
        DistributionSpec::Custom {
            upper,
            shape,
            density,
        } => {
            let m = upper.len();
            let vol = spec.custom_cell_volume();
            let mut points = Vec::with_capacity(density.len() * m);
            let mut mass = Vec::with_capacity(density.len());
            let mut idx = vec![0usize; m];
            for &d in density {
                for k in 0..m {
                    let w = upper[k] / shape[k] as f64;
                    points.push((idx[k] as f64 + 0.5) * w);
                }
                mass.push(d * vol);
                for k in (0..m).rev() {
                    idx[k] += 1;
                    if idx[k] < shape[k] {
                        break;
                    }
                    idx[k] = 0;
                }
            }
            normalize(&mut mass);
            ValueGrid::from_parts(m, n, points, mass)
        }
        _ => {
            let support = spec.support_polygon().expect("analytic spec");
            let density = spec.uniform_density().expect("analytic spec");
            let upper = spec.upper_bounds();
            let nf = n as f64;
            let cells = |u: f64| (u * nf - 1e-9).ceil().max(1.0) as usize;
            let edges = |u: f64| -> Vec<f64> {
                let k = cells(u);
                (0..=k).map(|i| (i as f64 / nf).min(u)).collect()
            };
            let (ex, ey) = (edges(upper[0]), edges(upper[1]));
            let is_rect = matches!(spec, DistributionSpec::UniformRect { .. });
            let mut points = Vec::new();
            let mut mass = Vec::new();
            for i in 0..ex.len() - 1 {
                for j in 0..ey.len() - 1 {
                    let (x0, x1, y0, y1) = (ex[i], ex[i + 1], ey[j], ey[j + 1]);
                    let (a, c) = if is_rect {
                        ((x1 - x0) * (y1 - y0), [0.5 * (x0 + x1), 0.5 * (y0 + y1)])
                    } else {
                        let cell = vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]];
                        let clipped = clip_to_convex(&cell, &support);
                        let a = geometry::area(&clipped);
                        if a <= 0.0 {
                            continue;
                        }
                        let c = if a == (x1 - x0) * (y1 - y0) {
                            [0.5 * (x0 + x1), 0.5 * (y0 + y1)]
                        } else {
                            geometry::centroid(&clipped)
                        };
                        (a, c)
                    };
                    if a <= 0.0 {
                        continue;
                    }
                    points.extend_from_slice(&c);
                    mass.push(a * density);
                }
            }
            normalize(&mut mass);
            ValueGrid::from_parts(2, n, points, mass)
        }
    }
}

fn normalize(mass: &mut [f64]) {
    let total: f64 = mass.iter().sum();
    for w in mass.iter_mut() {
        *w /= total;
    }
}

/// Clips `poly` to a counter-clockwise convex polygon.
pub(crate) fn clip_to_convex(poly: &[Point], convex: &[Point]) -> Vec<Point> {
    let planes: Vec<HalfPlane> = (0..convex.len())
        .map(|i| {
            let p = convex[i];
            let q = convex[(i + 1) % convex.len()];
            // left of p→q: (q−p) × (v−p) >= 0
            let a = [-(q[1] - p[1]), q[0] - p[0]];
            HalfPlane::new(a, a[0] * p[0] + a[1] * p[1])
        })
        .collect();
    geometry::clip_all(poly, &planes)
}

pub fn write_grid_csv(grid: &ValueGrid, path: &Path) -> Result<()> {
    grid.write_csv(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_cell_square() {
        let g = make_grid(&DistributionSpec::unit_square(), 1).unwrap();
        assert_eq!(g.len(), 1);
        assert_eq!(g.point(0), &[0.5, 0.5]);
        assert!((g.masses()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fine_square_masses() {
        let g = make_grid(&DistributionSpec::unit_square(), 100).unwrap();
        assert_eq!(g.len(), 10_000);
        assert!(g.masses().iter().all(|w| (w - 1e-4).abs() < 1e-15));
        let total: f64 = g.masses().iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn square_masses_are_symmetric() {
        let g = make_grid(&DistributionSpec::unit_square(), 7).unwrap();
        for i in 0..7 {
            for j in 0..7 {
                assert_eq!(g.masses()[i * 7 + j], g.masses()[j * 7 + i]);
            }
        }
    }

    #[test]
    fn rectangle_with_fractional_side() {
        let g = make_grid(&DistributionSpec::uniform_rect(1.0, 1.5), 4).unwrap();
        assert_eq!(g.len(), 4 * 6);
        let g = make_grid(&DistributionSpec::uniform_rect(1.0, 1.9), 10).unwrap();
        assert_eq!(g.len(), 10 * 19);
        let g = make_grid(&DistributionSpec::uniform_rect(1.0, 1.05), 10).unwrap();
        assert_eq!(g.len(), 10 * 11);
        // last row of cells is half as tall
        assert!((g.masses()[10] / g.masses()[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn triangle_points_inside_support() {
        let c = 2.0;
        let g = make_grid(&DistributionSpec::uniform_triangle(c), 10).unwrap();
        for (v, w) in g.iter() {
            assert!(w > 0.0);
            assert!(v[0] / c + v[1] <= 1.0 + 1e-12, "{v:?}");
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(make_grid(&DistributionSpec::unit_square(), 0).is_err());
        assert!(make_grid(&DistributionSpec::uniform_triangle(0.5), 4).is_err());
        let neg = DistributionSpec::Custom {
            upper: vec![1.0, 1.0],
            shape: vec![1, 2],
            density: vec![3.0, -1.0],
        };
        assert!(matches!(make_grid(&neg, 2), Err(Error::InvalidArgument { field: "density", .. })));
    }

    #[test]
    fn custom_table_grid() {
        let spec = DistributionSpec::Custom {
            upper: vec![1.0, 2.0],
            shape: vec![2, 2],
            density: vec![0.5, 0.5, 1.0, 0.0],
        };
        let g = make_grid(&spec, 1).unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(g.point(1), &[0.25, 1.5]);
        assert!((g.masses()[2] - 0.5).abs() < 1e-15);
        assert_eq!(g.masses()[3], 0.0);
    }

    #[test]
    fn csv_round_trip() {
        let g = make_grid(&DistributionSpec::uniform_triangle(2.0), 3).unwrap();
        let s = g.to_csv();
        assert!(s.starts_with("v1,v2,mass\n"));
        let back = ValueGrid::from_csv(&s, 3).unwrap();
        assert_eq!(back, g);
    }
}
