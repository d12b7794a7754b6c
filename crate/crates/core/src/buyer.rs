//! Buyer response models.
//!
//! The soft buyer picks item `i` with probability `softmax(λ·u)_i`; the hard
//! buyer takes the exact argmax, breaking ties toward the highest price and
//! then the lowest index.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distribution::ValueGrid;
use crate::error::{invalid, Error, Result};
use crate::menu::{Menu, MenuItem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ValuationKind {
    /// `u = Σ v_i x_i − p`.
    #[default]
    Additive,
    /// `u = x₁v₁ + x₂v₂ + v₁v₂ − p` for every item that allocates something.
    Combinatorial,
    /// Additive utility; feasibility `Σ x_i ≤ 1` is enforced by the trainer.
    UnitDemand,
}

/// Anything that maps (menu, value, temperature) to a choice distribution.
pub trait BuyerBehavior: Sync {
    fn respond(&self, menu: &Menu, v: &[f64], lambda: f64) -> Result<Vec<f64>>;
}

/// Utility-maximizing buyer with a softmax relaxation.
#[derive(Debug, Clone, Copy, Default)]
pub struct RationalBuyer {
    pub kind: ValuationKind,
}

impl BuyerBehavior for RationalBuyer {
    fn respond(&self, menu: &Menu, v: &[f64], lambda: f64) -> Result<Vec<f64>> {
        let u = crate::menu::menu_utility(menu, v, self.kind)?;
        let mut out = vec![0.0; u.len()];
        softmax_into(&u, lambda, &mut out)?;
        Ok(out)
    }
}

/// Writes `softmax(λ·u)` into `out` using max-subtraction.
pub fn softmax_into(u: &[f64], lambda: f64, out: &mut [f64]) -> Result<()> {
    let mut max = f64::NEG_INFINITY;
    for &x in u {
        if !x.is_finite() {
            return Err(Error::NonFinite("utility"));
        }
        max = max.max(x);
    }
    let mut z = 0.0;
    for (o, &x) in out.iter_mut().zip(u) {
        *o = (lambda * (x - max)).exp();
        z += *o;
    }
    for o in out.iter_mut() {
        *o /= z;
    }
    Ok(())
}

/// Per-point choice probabilities over menu items, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BuyerResponse {
    k: usize,
    probs: Vec<f64>,
}

impl BuyerResponse {
    pub fn items(&self) -> usize {
        self.k
    }

    pub fn rows(&self) -> usize {
        self.probs.len() / self.k
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.probs[i * self.k..(i + 1) * self.k]
    }

    /// Expected payment `Σ_v Pr[v] pᵀ s(v)`.
    pub fn revenue(&self, menu: &Menu, grid: &ValueGrid) -> f64 {
        let prices: Vec<f64> = menu.items().iter().map(|it| it.price).collect();
        grid.masses()
            .iter()
            .enumerate()
            .map(|(i, w)| w * dot(&prices, self.row(i)))
            .sum()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Soft (softmax) response of the rational buyer at every grid point.
pub fn soft_response(
    menu: &Menu,
    grid: &ValueGrid,
    kind: ValuationKind,
    lambda: f64,
) -> Result<BuyerResponse> {
    soft_response_with(&RationalBuyer { kind }, menu, grid, lambda)
}

/// Soft response of an arbitrary buyer model.
pub fn soft_response_with<B: BuyerBehavior>(
    buyer: &B,
    menu: &Menu,
    grid: &ValueGrid,
    lambda: f64,
) -> Result<BuyerResponse> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(invalid("lambda", "temperature must be positive"));
    }
    if grid.dim() != menu.dim() {
        return Err(Error::DimensionMismatch {
            expected: menu.dim(),
            got: grid.dim(),
        });
    }
    let k = menu.len();
    let rows: Vec<Vec<f64>> = (0..grid.len())
        .into_par_iter()
        .map(|i| buyer.respond(menu, grid.point(i), lambda))
        .collect::<Result<_>>()?;
    let mut probs = Vec::with_capacity(k * rows.len());
    for r in rows {
        probs.extend(r);
    }
    Ok(BuyerResponse { k, probs })
}

/// Index of the item a rational buyer picks at `v`.
pub fn hard_response(menu: &Menu, v: &[f64], kind: ValuationKind) -> usize {
    hard_choice(menu.items(), v, kind)
}

pub(crate) fn hard_choice(items: &[MenuItem], v: &[f64], kind: ValuationKind) -> usize {
    let mut best = 0;
    let mut best_u = items[0].utility(v, kind);
    for (i, it) in items.iter().enumerate().skip(1) {
        let u = it.utility(v, kind);
        if u > best_u || (u == best_u && it.price > items[best].price) {
            best = i;
            best_u = u;
        }
    }
    best
}
