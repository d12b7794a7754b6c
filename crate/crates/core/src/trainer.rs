//! Menu learning by gradient descent against the soft buyer.
//!
//! A menu of `k` items (exit item included) is parameterized by unconstrained
//! reals: allocation logits squashed into `[0, 1]` and price pre-activations
//! passed through softplus. The loss is the negative expected payment when the
//! buyer chooses item `i` with probability `softmax(λ·u)_i`; its gradient is
//! computed in closed form.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::buyer::{hard_choice, ValuationKind};
use crate::distribution::{make_grid, DistributionSpec, ValueGrid};
use crate::error::{invalid, Error, Result};
use crate::evaluator;
use crate::menu::{Menu, MenuItem};
use crate::optim::{Optimizer, OptimizerKind};
use crate::parallel::CHUNK;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MechanismMode {
    /// Sigmoid allocations, softplus prices.
    #[default]
    Free,
    /// Each allocation column is a softmax over `m` goods plus a dummy entry.
    UnitDemand,
    /// Allocations fixed to the nonzero vertices of `{0,1}^m`; prices only.
    DeterministicPricesOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MechanismParams {
    m: usize,
    mode: MechanismMode,
    /// Row-major `(k−1) × m`: allocation logits of each trainable item.
    /// Empty in `DeterministicPricesOnly` mode.
    pub alloc_raw: Vec<f64>,
    /// Price pre-activations, one per trainable item.
    pub price_raw: Vec<f64>,
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

/// Inverse of [`softplus`] for `y > 0`.
pub fn softplus_inv(y: f64) -> f64 {
    if y > 30.0 {
        y + (-(-y).exp()).ln_1p()
    } else {
        y.exp_m1().ln()
    }
}

/// The `2^m − 1` nonzero deterministic allocations, ordered by binary value
/// with the first good as the most significant bit.
pub fn deterministic_allocations(m: usize) -> Vec<Vec<f64>> {
    (1..(1usize << m))
        .map(|mask| {
            (0..m)
                .map(|d| if mask >> (m - 1 - d) & 1 == 1 { 1.0 } else { 0.0 })
                .collect()
        })
        .collect()
}

impl MechanismParams {
    pub fn new(m: usize, mode: MechanismMode, alloc_raw: Vec<f64>, price_raw: Vec<f64>) -> Result<Self> {
        if m == 0 {
            return Err(invalid("m", "must be positive"));
        }
        let items = price_raw.len();
        if items == 0 {
            return Err(invalid("k", "need at least one trainable item (k >= 2)"));
        }
        match mode {
            MechanismMode::DeterministicPricesOnly => {
                if m >= usize::BITS as usize || items != (1usize << m) - 1 {
                    return Err(invalid(
                        "price_raw",
                        format!("deterministic mode needs 2^m - 1 = {} prices", (1usize << m) - 1),
                    ));
                }
                if !alloc_raw.is_empty() {
                    return Err(invalid("alloc_raw", "deterministic mode has no allocation parameters"));
                }
            }
            _ => {
                if alloc_raw.len() != items * m {
                    return Err(invalid(
                        "alloc_raw",
                        format!("expected {} entries, got {}", items * m, alloc_raw.len()),
                    ));
                }
            }
        }
        Ok(Self {
            m,
            mode,
            alloc_raw,
            price_raw,
        })
    }

    /// Random initialization: logits uniform in `(−logit_scale, logit_scale)`,
    /// prices uniform in `(0.1, 0.9) × price_scale`.
    pub fn random(
        m: usize,
        k: usize,
        mode: MechanismMode,
        logit_scale: f64,
        price_scale: f64,
        rng: &mut impl Rng,
    ) -> Result<Self> {
        let items = match mode {
            MechanismMode::DeterministicPricesOnly => (1usize << m) - 1,
            _ => {
                if k < 2 {
                    return Err(invalid("k", "menu size must be at least 2"));
                }
                k - 1
            }
        };
        let alloc_raw = match mode {
            MechanismMode::DeterministicPricesOnly => Vec::new(),
            _ => (0..items * m).map(|_| logit_scale * rng.gen_range(-1.0..1.0)).collect(),
        };
        let price_raw = (0..items)
            .map(|_| softplus_inv(rng.gen_range(0.1..0.9) * price_scale))
            .collect();
        Self::new(m, mode, alloc_raw, price_raw)
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn mode(&self) -> MechanismMode {
        self.mode
    }

    /// Number of trainable (non-exit) items.
    pub fn trainable_items(&self) -> usize {
        self.price_raw.len()
    }

    pub fn len(&self) -> usize {
        self.alloc_raw.len() + self.price_raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat parameter vector: allocation logits then price pre-activations.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = self.alloc_raw.clone();
        v.extend_from_slice(&self.price_raw);
        v
    }

    pub fn set_flat(&mut self, flat: &[f64]) {
        let a = self.alloc_raw.len();
        self.alloc_raw.copy_from_slice(&flat[..a]);
        self.price_raw.copy_from_slice(&flat[a..]);
    }

    /// Squashed allocations (row-major `(k−1) × m`) and prices.
    fn squash(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        if self.alloc_raw.iter().chain(&self.price_raw).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("mechanism parameters"));
        }
        let (m, n) = (self.m, self.trainable_items());
        let alloc = match self.mode {
            MechanismMode::Free => self.alloc_raw.iter().map(|&a| sigmoid(a)).collect(),
            MechanismMode::UnitDemand => {
                let mut out = vec![0.0; n * m];
                for j in 0..n {
                    let logits = &self.alloc_raw[j * m..(j + 1) * m];
                    let mx = logits.iter().copied().fold(0.0f64, f64::max);
                    let dummy = (-mx).exp();
                    let z: f64 = dummy + logits.iter().map(|a| (a - mx).exp()).sum::<f64>();
                    for d in 0..m {
                        out[j * m + d] = (logits[d] - mx).exp() / z;
                    }
                }
                out
            }
            MechanismMode::DeterministicPricesOnly => deterministic_allocations(m).concat(),
        };
        let price = self.price_raw.iter().map(|&b| softplus(b)).collect();
        Ok((alloc, price))
    }

    /// Chain rule from gradients w.r.t. squashed values to raw parameters.
    fn pull_back(&self, alloc: &[f64], g_alloc: &[f64], g_price: &[f64]) -> Vec<f64> {
        let m = self.m;
        let mut out = Vec::with_capacity(self.len());
        match self.mode {
            MechanismMode::Free => {
                out.extend(alloc.iter().zip(g_alloc).map(|(x, g)| g * x * (1.0 - x)));
            }
            MechanismMode::UnitDemand => {
                for j in 0..self.trainable_items() {
                    let x = &alloc[j * m..(j + 1) * m];
                    let g = &g_alloc[j * m..(j + 1) * m];
                    let gx: f64 = x.iter().zip(g).map(|(a, b)| a * b).sum();
                    out.extend((0..m).map(|e| x[e] * (g[e] - gx)));
                }
            }
            MechanismMode::DeterministicPricesOnly => {}
        }
        out.extend(self.price_raw.iter().zip(g_price).map(|(&b, g)| g * sigmoid(b)));
        out
    }
}

/// Menu described by `params`: exit item followed by the squashed items.
pub fn materialize(params: &MechanismParams) -> Result<Menu> {
    let (alloc, price) = params.squash()?;
    let m = params.dim();
    let items = price
        .iter()
        .enumerate()
        .map(|(j, &p)| MenuItem::new(alloc[j * m..(j + 1) * m].to_vec(), p))
        .collect();
    Menu::with_exit(m, items)
}

/// Soft revenue and the gradient of the loss `−revenue` w.r.t. the squashed
/// allocations and prices.
fn soft_revenue_core(
    m: usize,
    alloc: &[f64],
    price: &[f64],
    grid: &ValueGrid,
    kind: ValuationKind,
    lambda: f64,
    want_grad: bool,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(invalid("lambda", "temperature must be positive"));
    }
    if grid.dim() != m {
        return Err(Error::DimensionMismatch {
            expected: m,
            got: grid.dim(),
        });
    }
    let n_items = price.len();
    let glen = if want_grad { n_items * (m + 1) } else { 0 };
    let pts = grid.points_flat();
    let mass = grid.masses();
    let n = grid.len();
    let combinatorial = kind == ValuationKind::Combinatorial;

    let partials: Vec<Result<(f64, Vec<f64>)>> = (0..n.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut buf = vec![0.0; glen];
            let mut u = vec![0.0; n_items];
            let mut s = vec![0.0; n_items];
            let mut rev = 0.0;
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                let v = &pts[i * m..(i + 1) * m];
                let bonus = if combinatorial { v.iter().product::<f64>() } else { 0.0 };
                let mut umax = 0.0f64;
                for j in 0..n_items {
                    let x = &alloc[j * m..(j + 1) * m];
                    let uj = x.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() + bonus - price[j];
                    if !uj.is_finite() {
                        return Err(Error::NonFinite("utility"));
                    }
                    u[j] = uj;
                    umax = umax.max(uj);
                }
                // exit item has utility 0
                let mut z = (-lambda * umax).exp();
                for j in 0..n_items {
                    s[j] = (lambda * (u[j] - umax)).exp();
                    z += s[j];
                }
                let mut r = 0.0;
                for j in 0..n_items {
                    s[j] /= z;
                    r += price[j] * s[j];
                }
                let w = mass[i];
                rev += w * r;
                if want_grad {
                    let (gx, gp) = buf.split_at_mut(n_items * m);
                    for j in 0..n_items {
                        let t = lambda * s[j] * (price[j] - r);
                        // ∂r/∂p_j = s_j − t, ∂r/∂x_jd = t·v_d; loss = −r
                        gp[j] -= w * (s[j] - t);
                        for d in 0..m {
                            gx[j * m + d] -= w * t * v[d];
                        }
                    }
                }
            }
            Ok((rev, buf))
        })
        .collect();

    let mut rev = 0.0;
    let mut grad = vec![0.0; glen];
    for p in partials {
        let (r, b) = p?;
        rev += r;
        for (g, x) in grad.iter_mut().zip(b) {
            *g += x;
        }
    }
    if !rev.is_finite() {
        return Err(Error::NonFinite("soft revenue"));
    }
    let g_price = if want_grad { grad.split_off(n_items * m) } else { Vec::new() };
    Ok((rev, grad, g_price))
}

/// Expected payment `Σ_v Pr[v] pᵀ s(v)` under the soft buyer. The loss is its negation.
pub fn soft_revenue(params: &MechanismParams, grid: &ValueGrid, kind: ValuationKind, lambda: f64) -> Result<f64> {
    let (alloc, price) = params.squash()?;
    Ok(soft_revenue_core(params.dim(), &alloc, &price, grid, kind, lambda, false)?.0)
}

/// Analytic gradient of the loss (negative soft revenue) w.r.t. the flat raw
/// parameter vector; also returns the soft revenue.
pub fn loss_gradient(
    params: &MechanismParams,
    grid: &ValueGrid,
    kind: ValuationKind,
    lambda: f64,
) -> Result<(f64, Vec<f64>)> {
    let (alloc, price) = params.squash()?;
    let (rev, g_alloc, g_price) = soft_revenue_core(params.dim(), &alloc, &price, grid, kind, lambda, true)?;
    let grad = params.pull_back(&alloc, &g_alloc, &g_price);
    if grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("gradient"));
    }
    Ok((rev, grad))
}

pub fn gradient(params: &MechanismParams, grid: &ValueGrid, kind: ValuationKind, lambda: f64) -> Result<Vec<f64>> {
    Ok(loss_gradient(params, grid, kind, lambda)?.1)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Ramp {
    #[default]
    Geometric,
    Linear,
    Constant,
}

fn default_k() -> usize {
    10
}
fn default_iterations() -> usize {
    5000
}
fn default_lr() -> f64 {
    0.01
}
fn default_lambda_start() -> f64 {
    50.0
}
fn default_lambda_final() -> f64 {
    500.0
}
fn default_init_scale() -> f64 {
    3.0
}
fn default_ramp_fraction() -> f64 {
    0.8
}
fn default_seed() -> u64 {
    42
}
fn default_restarts() -> usize {
    5
}
fn default_grid_n() -> usize {
    100
}
fn default_lr_floor() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    /// Menu size including the exit item.
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default)]
    pub mode: MechanismMode,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    /// Learning rate at the last iteration as a fraction of `learning_rate`;
    /// the rate decays geometrically after the temperature ramp ends.
    #[serde(default = "default_lr_floor")]
    pub lr_floor: f64,
    #[serde(default = "default_lambda_start")]
    pub lambda_start: f64,
    /// Should stay within a few multiples of `grid_n`: once the softmax is
    /// sharper than the grid spacing the soft revenue becomes a staircase
    /// with a local optimum at every row of grid points.
    #[serde(default = "default_lambda_final")]
    pub lambda_final: f64,
    #[serde(default)]
    pub ramp: Ramp,
    /// Fraction of the iterations over which λ ramps up.
    #[serde(default = "default_ramp_fraction")]
    pub ramp_fraction: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_restarts")]
    pub restarts: usize,
    #[serde(default = "default_grid_n")]
    pub grid_n: usize,
    #[serde(default)]
    pub optimizer: OptimizerKind,
    /// Allocation logits start uniform in `(−init_scale, init_scale)`.
    #[serde(default = "default_init_scale")]
    pub init_scale: f64,
    /// Revenue used for traces and for picking the best restart.
    #[serde(default)]
    pub selection: Selection,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            k: default_k(),
            mode: MechanismMode::default(),
            iterations: default_iterations(),
            learning_rate: default_lr(),
            lr_floor: default_lr_floor(),
            lambda_start: default_lambda_start(),
            lambda_final: default_lambda_final(),
            ramp: Ramp::default(),
            ramp_fraction: default_ramp_fraction(),
            seed: default_seed(),
            restarts: default_restarts(),
            grid_n: default_grid_n(),
            optimizer: OptimizerKind::default(),
            init_scale: default_init_scale(),
            selection: Selection::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.mode != MechanismMode::DeterministicPricesOnly && self.k < 2 {
            return Err(invalid("k", "menu size must be at least 2"));
        }
        if self.iterations == 0 {
            return Err(invalid("iterations", "must be at least 1"));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(invalid("learning_rate", "must be positive"));
        }
        if !(self.lr_floor > 0.0 && self.lr_floor <= 1.0) {
            return Err(invalid("lr_floor", "must lie in (0, 1]"));
        }
        if !(self.lambda_start.is_finite() && self.lambda_start > 0.0) {
            return Err(invalid("lambda_start", "must be positive"));
        }
        if !(self.lambda_final.is_finite() && self.lambda_final >= self.lambda_start) {
            return Err(invalid("lambda_final", "must be finite and >= lambda_start"));
        }
        if !(self.ramp_fraction > 0.0 && self.ramp_fraction <= 1.0) {
            return Err(invalid("ramp_fraction", "must lie in (0, 1]"));
        }
        if self.restarts == 0 {
            return Err(invalid("restarts", "must be at least 1"));
        }
        if !(self.init_scale.is_finite() && self.init_scale >= 0.0) {
            return Err(invalid("init_scale", "must be finite and nonnegative"));
        }
        if self.grid_n == 0 {
            return Err(invalid("grid_n", "must be at least 1"));
        }
        Ok(())
    }

    fn ramp_end(&self) -> f64 {
        (self.ramp_fraction * (self.iterations.saturating_sub(1)) as f64).max(1.0)
    }

    /// Temperature at iteration `t` (nondecreasing in `t`).
    pub fn lambda_at(&self, t: usize) -> f64 {
        let frac = (t as f64 / self.ramp_end()).min(1.0);
        match self.ramp {
            Ramp::Geometric => self.lambda_start * (self.lambda_final / self.lambda_start).powf(frac),
            Ramp::Linear => self.lambda_start + (self.lambda_final - self.lambda_start) * frac,
            Ramp::Constant => self.lambda_final,
        }
    }

    /// Step size at iteration `t`: constant during the ramp, then geometric
    /// decay down to `lr_floor × learning_rate`.
    pub fn lr_at(&self, t: usize) -> f64 {
        let start = self.ramp_end();
        let last = self.iterations.saturating_sub(1) as f64;
        if (t as f64) <= start || last <= start {
            return self.learning_rate;
        }
        let frac = (t as f64 - start) / (last - start);
        self.learning_rate * self.lr_floor.powf(frac)
    }
}

/// How a trained menu is scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Exact continuous revenue where the evaluator supports it, otherwise
    /// hard-buyer revenue on the training grid.
    #[default]
    Exact,
    /// Hard-buyer revenue on the training grid.
    Grid,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub lambda: f64,
    pub soft_rev: f64,
    pub exact_rev: f64,
}

pub fn trace_csv(trace: &[TraceRow]) -> String {
    let mut out = String::from("iteration,lambda,soft_rev,exact_rev\n");
    for r in trace {
        out.push_str(&format!("{},{},{},{}\n", r.iteration, r.lambda, r.soft_rev, r.exact_rev));
    }
    out
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub menu: Menu,
    pub params: MechanismParams,
    pub trace: Vec<TraceRow>,
    /// Exact (or hard-buyer grid) revenue of `menu`.
    pub revenue: f64,
    /// Index of the restart that produced `menu`.
    pub restart: usize,
    /// Final revenue of every restart.
    pub restart_revenues: Vec<f64>,
}

/// Trains a menu on `make_grid(spec, config.grid_n)`.
pub fn train(spec: &DistributionSpec, kind: ValuationKind, config: &TrainConfig) -> Result<TrainOutcome> {
    let grid = make_grid(spec, config.grid_n)?;
    train_on_grid(spec, &grid, kind, config, |_, _, _| {})
}

/// Trains on a prepared grid; `observe(iteration, λ, menu)` runs after every update.
pub fn train_on_grid<F>(
    spec: &DistributionSpec,
    grid: &ValueGrid,
    kind: ValuationKind,
    config: &TrainConfig,
    mut observe: F,
) -> Result<TrainOutcome>
where
    F: FnMut(usize, f64, &Menu),
{
    config.validate()?;
    if kind == ValuationKind::UnitDemand && config.mode == MechanismMode::Free {
        return Err(invalid("mode", "unit-demand valuations need the unit_demand mode"));
    }
    let mut best: Option<TrainOutcome> = None;
    let mut revenues = Vec::with_capacity(config.restarts);
    for r in 0..config.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(r as u64));
        let scale = grid.mean_total_value().max(1e-6);
        let init = MechanismParams::random(grid.dim(), config.k, config.mode, config.init_scale, scale, &mut rng)?;
        let run = train_single(spec, grid, kind, config, init, r, &mut observe)?;
        revenues.push(run.revenue);
        if best.as_ref().is_none_or(|b| run.revenue > b.revenue) {
            best = Some(run);
        }
    }
    let mut best = best.expect("at least one restart");
    best.restart_revenues = revenues;
    Ok(best)
}

/// Continues training from `init` for one run of `config` (restarts and
/// seed are ignored). Useful for refining a menu on a different grid.
pub fn train_from<F>(
    spec: &DistributionSpec,
    grid: &ValueGrid,
    kind: ValuationKind,
    config: &TrainConfig,
    init: MechanismParams,
    mut observe: F,
) -> Result<TrainOutcome>
where
    F: FnMut(usize, f64, &Menu),
{
    config.validate()?;
    if init.dim() != grid.dim() {
        return Err(Error::DimensionMismatch {
            expected: grid.dim(),
            got: init.dim(),
        });
    }
    let mut run = train_single(spec, grid, kind, config, init, 0, &mut observe)?;
    run.restart_revenues = vec![run.revenue];
    Ok(run)
}

fn train_single<F>(
    spec: &DistributionSpec,
    grid: &ValueGrid,
    kind: ValuationKind,
    config: &TrainConfig,
    mut params: MechanismParams,
    restart: usize,
    observe: &mut F,
) -> Result<TrainOutcome>
where
    F: FnMut(usize, f64, &Menu),
{
    let mut flat = params.to_flat();
    let mut opt = Optimizer::new(config.optimizer, flat.len());
    let exact = config.selection == Selection::Exact && evaluator::supports_exact(spec, kind, grid.dim());
    let evaluate = |menu: &Menu| -> Result<f64> {
        if exact {
            evaluator::exact_revenue(menu, spec)
        } else {
            evaluator::grid_revenue(menu, grid, kind)
        }
    };
    let mut trace = Vec::with_capacity(config.iterations);
    for t in 0..config.iterations {
        let lambda = config.lambda_at(t);
        let (soft, grad) = match loss_gradient(&params, grid, kind, lambda) {
            Ok(x) => x,
            Err(Error::NonFinite(_)) => {
                return Err(Error::Divergence {
                    iteration: t,
                    loss: f64::NAN,
                })
            }
            Err(e) => return Err(e),
        };
        opt.step(&mut flat, &grad, config.lr_at(t));
        if flat.iter().any(|x| !x.is_finite()) {
            return Err(Error::Divergence {
                iteration: t,
                loss: -soft,
            });
        }
        params.set_flat(&flat);
        let menu = materialize(&params)?;
        observe(t, lambda, &menu);
        trace.push(TraceRow {
            iteration: t,
            lambda,
            soft_rev: soft,
            exact_rev: evaluate(&menu)?,
        });
    }
    let menu = materialize(&params)?;
    let revenue = evaluate(&menu)?;
    Ok(TrainOutcome {
        menu,
        params,
        trace,
        revenue,
        restart,
        restart_revenues: Vec::new(),
    })
}

/// Resolution used by [`extract_clean_menu`] for merging and snapping.
pub const CLEAN_TOL: f64 = 1e-3;

/// Drops items the hard buyer never picks on `grid`, merges near-duplicates
/// and snaps allocations within [`CLEAN_TOL`] of 0 or 1.
pub fn extract_clean_menu(menu: &Menu, grid: &ValueGrid, kind: ValuationKind) -> Result<Menu> {
    if grid.dim() != menu.dim() {
        return Err(Error::DimensionMismatch {
            expected: menu.dim(),
            got: grid.dim(),
        });
    }
    let items = menu.items();
    let mut chosen = vec![false; items.len()];
    chosen[0] = true;
    for (v, _) in grid.iter() {
        chosen[hard_choice(items, v, kind)] = true;
    }
    let close = |a: &MenuItem, b: &MenuItem| {
        (a.price - b.price).abs() < CLEAN_TOL
            && a.allocation.iter().zip(&b.allocation).all(|(x, y)| (x - y).abs() < CLEAN_TOL)
    };
    let mut kept: Vec<MenuItem> = Vec::new();
    for (it, _) in items.iter().zip(&chosen).skip(1).filter(|(_, &c)| c) {
        if kept.iter().any(|k| close(k, it)) || close(&items[0], it) {
            continue;
        }
        kept.push(it.clone());
    }
    for it in &mut kept {
        for x in &mut it.allocation {
            if x.abs() < CLEAN_TOL {
                *x = 0.0;
            } else if (*x - 1.0).abs() < CLEAN_TOL {
                *x = 1.0;
            }
        }
    }
    Menu::with_exit(menu.dim(), kept)
}
