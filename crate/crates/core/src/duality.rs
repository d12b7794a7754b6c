//! Optimal-transport duality certificates for the uniform triangle
//! `T = {v ≥ 0 : v₁/c + v₂ ≤ 1}` with density `f = 2/c`.
//!
//! The transformed measure splits into a unit point mass at the origin, a
//! line density on the hypotenuse and a (negative) area density on `T`. A
//! menu is certified optimal when inside every best-response region the
//! positive part `μ₊ = μ₀ + μ∂` balances the negative part `μ₋ = μₛ` and the
//! resulting dual objective equals the menu's revenue.

use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::buyer::{hard_choice, ValuationKind};
use crate::distribution::DistributionSpec;
use crate::error::{invalid, Error, Result};
use crate::evaluator::{self, dominance_planes};
use crate::geometry::{self, Point};
use crate::menu::Menu;

/// Default number of hypotenuse segments.
pub const DEFAULT_QUAD_N: usize = 10_000;
/// Default tolerance on balances and on the duality gap.
pub const DEFAULT_TOL: f64 = 1e-6;

/// The three components of the transformed measure on `T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualityMeasures {
    pub c: f64,
    /// Point mass at the origin.
    pub origin_mass: f64,
    /// Density per unit length along the hypotenuse.
    pub boundary_density: f64,
    /// Density per unit area over `T`.
    pub interior_density: f64,
}

impl DualityMeasures {
    pub fn hypotenuse(&self) -> (Point, Point) {
        ([self.c, 0.0], [0.0, 1.0])
    }

    pub fn hypotenuse_length(&self) -> f64 {
        (1.0 + self.c * self.c).sqrt()
    }

    pub fn boundary_total(&self) -> f64 {
        self.boundary_density * self.hypotenuse_length()
    }

    pub fn interior_total(&self) -> f64 {
        self.interior_density * self.c / 2.0
    }

    /// `μ₀(T) + μ∂(T) − μₛ(T)`; zero for a valid construction.
    pub fn total_balance(&self) -> f64 {
        self.origin_mass + self.boundary_total() - self.interior_total()
    }
}

pub fn build_measures(c: f64) -> Result<DualityMeasures> {
    if !(c.is_finite() && c >= 1.0) {
        return Err(invalid("c", "duality measures need c >= 1"));
    }
    let f = 2.0 / c;
    Ok(DualityMeasures {
        c,
        origin_mass: 1.0,
        // f(v)·(v·η) with η the unit outward normal (1/c, 1)/‖(1/c, 1)‖.
        boundary_density: f * c / (1.0 + c * c).sqrt(),
        // ∇f·v + (n+1)f with ∇f = 0 and n = 2.
        interior_density: 3.0 * f,
    })
}

/// Masses and first moments (`∫‖v‖₁`) of `μ₊` and `μ₋` on one region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionMoments {
    pub item: usize,
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub moment_plus: f64,
    pub moment_minus: f64,
}

/// Per-region masses and moments by quadrature.
///
/// Line integrals use the composite midpoint rule with `quad_n` segments over
/// the whole hypotenuse; area integrals split each region into a fan of
/// triangles, each refined into `(quad_n/10)²` congruent pieces evaluated at
/// their centroids.
pub fn region_moments(menu: &Menu, c: f64, quad_n: usize) -> Result<Vec<RegionMoments>> {
    let measures = build_measures(c)?;
    if quad_n < 2 {
        return Err(invalid("quad_n", "need at least 2 quadrature subdivisions"));
    }
    let spec = DistributionSpec::uniform_triangle(c);
    let regions = evaluator::regions(menu, &spec)?;
    let origin_item = hard_choice(menu.items(), &[0.0, 0.0], ValuationKind::Additive);
    let (a, b) = measures.hypotenuse();
    let len = measures.hypotenuse_length();
    let area_level = (quad_n / 10).max(1);
    let l1 = |v: Point| v[0].abs() + v[1].abs();

    let out = regions
        .par_iter()
        .map(|region| {
            let i = region.item;
            let planes = dominance_planes(menu.items(), i);
            let (mut mu_plus, mut moment_plus) = (0.0, 0.0);
            if let Some((t0, t1)) = geometry::clip_segment(a, b, &planes) {
                // Whole-hypotenuse segments of width 1/quad_n, clipped to [t0, t1].
                let first = (t0 * quad_n as f64).floor() as usize;
                let last = ((t1 * quad_n as f64).ceil() as usize).min(quad_n);
                for s in first..last {
                    let lo = (s as f64 / quad_n as f64).max(t0);
                    let hi = ((s + 1) as f64 / quad_n as f64).min(t1);
                    if hi <= lo {
                        continue;
                    }
                    let t = 0.5 * (lo + hi);
                    let v = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
                    let w = measures.boundary_density * len * (hi - lo);
                    mu_plus += w;
                    moment_plus += w * l1(v);
                }
            }
            if i == origin_item {
                mu_plus += measures.origin_mass;
            }
            let (mass, moment) = area_quadrature(&region.polygon, area_level, l1);
            RegionMoments {
                item: i,
                mu_plus,
                mu_minus: measures.interior_density * mass,
                moment_plus,
                moment_minus: measures.interior_density * moment,
            }
        })
        .collect();
    Ok(out)
}

/// `(∫_P 1, ∫_P g)` over a convex polygon by refined centroid rule.
fn area_quadrature(poly: &[Point], level: usize, g: impl Fn(Point) -> f64) -> (f64, f64) {
    if poly.len() < 3 {
        return (0.0, 0.0);
    }
    let (mut mass, mut moment) = (0.0, 0.0);
    let p0 = poly[0];
    let h = 1.0 / level as f64;
    for w in poly[1..].windows(2) {
        let (p1, p2) = (w[0], w[1]);
        let e1 = [p1[0] - p0[0], p1[1] - p0[1]];
        let e2 = [p2[0] - p0[0], p2[1] - p0[1]];
        let piece = 0.5 * (e1[0] * e2[1] - e1[1] * e2[0]).abs() * h * h;
        let at = |u: f64, v: f64| [p0[0] + u * e1[0] + v * e2[0], p0[1] + u * e1[1] + v * e2[1]];
        let mut acc = 0.0;
        for r in 0..level {
            for s in 0..level - r {
                let (u, v) = (r as f64 * h, s as f64 * h);
                // Upright piece.
                acc += g(at(u + h / 3.0, v + h / 3.0));
                // Inverted piece, present when it fits.
                if s + 1 < level - r {
                    acc += g(at(u + 2.0 * h / 3.0, v + 2.0 * h / 3.0));
                }
            }
        }
        mass += piece * (level * level) as f64;
        moment += piece * acc;
    }
    (mass, moment)
}

/// Balance of one region in a certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionBalance {
    pub i: usize,
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub gap: f64,
}

/// `(μ₊(Rᵢ), μ₋(Rᵢ), |difference|)` for every menu item.
pub fn region_balance(menu: &Menu, c: f64, quad_n: usize) -> Result<Vec<RegionBalance>> {
    Ok(region_moments(menu, c, quad_n)?
        .into_iter()
        .map(|r| RegionBalance {
            i: r.item,
            mu_plus: r.mu_plus,
            mu_minus: r.mu_minus,
            gap: (r.mu_plus - r.mu_minus).abs(),
        })
        .collect())
}

fn dual_from(moments: &[RegionMoments], menu: &Menu) -> f64 {
    moments
        .iter()
        .filter(|r| !menu.items()[r.item].is_exit())
        .map(|r| r.moment_plus - r.moment_minus)
        .sum()
}

/// Dual objective `Σ_{i ≠ exit} [∫_{Rᵢ}‖v‖₁dμ₊ − ∫_{Rᵢ}‖v‖₁dμ₋]`.
///
/// Repeats the quadrature at `quad_n / 2` and fails when the two results
/// differ by more than [`DEFAULT_TOL`].
pub fn dual_objective(menu: &Menu, c: f64, quad_n: usize) -> Result<f64> {
    let fine = dual_from(&region_moments(menu, c, quad_n)?, menu);
    let coarse = dual_from(&region_moments(menu, c, (quad_n / 2).max(2))?, menu);
    if (fine - coarse).abs() > DEFAULT_TOL {
        return Err(Error::Quadrature((fine - coarse).abs()));
    }
    Ok(fine)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DualityCertificate {
    pub c: f64,
    pub regions: Vec<RegionBalance>,
    pub dual_objective: f64,
    pub revenue: f64,
    pub verdict: Verdict,
}

impl DualityCertificate {
    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

/// Checks every region balance and the duality gap against `tol`.
pub fn certify(menu: &Menu, c: f64, quad_n: usize, tol: f64) -> Result<DualityCertificate> {
    let moments = region_moments(menu, c, quad_n)?;
    let dual = dual_objective(menu, c, quad_n)?;
    let revenue = evaluator::exact_revenue(menu, &DistributionSpec::uniform_triangle(c))?;
    let regions: Vec<RegionBalance> = moments
        .iter()
        .map(|r| RegionBalance {
            i: r.item,
            mu_plus: r.mu_plus,
            mu_minus: r.mu_minus,
            gap: (r.mu_plus - r.mu_minus).abs(),
        })
        .collect();
    let ok = regions.iter().all(|r| r.gap < tol) && (dual - revenue).abs() < tol;
    Ok(DualityCertificate {
        c,
        regions,
        dual_objective: dual,
        revenue,
        verdict: if ok { Verdict::Pass } else { Verdict::Fail },
    })
}
