//! Direct-mechanism linear program over a value grid.
//!
//! Variables per grid point `v` are the allocation `x(v) ∈ [0,1]^m` and a free
//! payment `p(v)`. Every row has the form `Σ a·z ≥ rhs`: one individual
//! rationality row per point followed by one incentive row per ordered pair.
//! The full instance is kept as sorted triplets so it can be exported or handed
//! to another solver; [`solve_lp`] solves it by row generation, adding the
//! most violated rows until the full system holds.

use std::fmt::Write as _;
use std::path::Path;

use microlp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem, SolveOutcome, Variable};
use rayon::prelude::*;

use crate::distribution::ValueGrid;
use crate::error::{invalid, Error, Result};
use crate::menu::{Menu, MenuItem};

/// Hard cap on the number of LP rows.
pub const MAX_ROWS: u64 = 100_000_000;
/// Feasibility tolerance used when deciding whether a row is violated.
pub const ROW_TOL: f64 = 1e-9;
/// Tolerance of the independent IC/IR audit.
pub const AUDIT_TOL: f64 = 1e-6;
/// Allocation/price resolution used when extracting a menu.
pub const EXTRACT_RES: f64 = 1e-4;

const SEED_NEIGHBORS: usize = 8;
const MAX_ROUNDS: usize = 10_000;

/// One nonzero of the constraint matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triplet {
    pub row: u32,
    pub col: u32,
    pub value: f64,
}

/// A maximization LP `max cᵀz  s.t.  A z ≥ b,  lo ≤ z ≤ hi`.
#[derive(Debug, Clone)]
pub struct LpInstance {
    m: usize,
    points: usize,
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Nonzeros sorted by row, then column.
    pub triplets: Vec<Triplet>,
    /// Start of each row in `triplets`; length `rows + 1`.
    pub row_start: Vec<usize>,
    pub rhs: Vec<f64>,
    /// Rows the row-generation solver starts from.
    pub seed_rows: Vec<u32>,
    values: Vec<f64>,
}

impl LpInstance {
    pub fn rows(&self) -> usize {
        self.rhs.len()
    }

    pub fn vars(&self) -> usize {
        self.objective.len()
    }

    pub fn dim(&self) -> usize {
        self.m
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn ir_rows(&self) -> usize {
        self.points
    }

    pub fn ic_rows(&self) -> usize {
        self.rows() - self.points
    }

    /// Variable index of `x_d(v_i)`.
    pub fn alloc_var(&self, i: usize, d: usize) -> usize {
        i * (self.m + 1) + d
    }

    /// Variable index of `p(v_i)`.
    pub fn price_var(&self, i: usize) -> usize {
        i * (self.m + 1) + self.m
    }

    pub fn row(&self, r: usize) -> &[Triplet] {
        &self.triplets[self.row_start[r]..self.row_start[r + 1]]
    }

    /// `b_r − a_rᵀz`; positive means the row is violated.
    pub fn violation(&self, r: usize, z: &[f64]) -> f64 {
        let lhs: f64 = self.row(r).iter().map(|t| t.value * z[t.col as usize]).sum();
        self.rhs[r] - lhs
    }

    /// Write the instance in free MPS format.
    pub fn to_mps(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "NAME menunet");
        let _ = writeln!(out, "OBJSENSE\n    MAX");
        let _ = writeln!(out, "ROWS\n N obj");
        for r in 0..self.rows() {
            let _ = writeln!(out, " G r{r}");
        }
        let mut by_col: Vec<Vec<(u32, f64)>> = vec![Vec::new(); self.vars()];
        for t in &self.triplets {
            by_col[t.col as usize].push((t.row, t.value));
        }
        let _ = writeln!(out, "COLUMNS");
        for (c, entries) in by_col.iter().enumerate() {
            if self.objective[c] != 0.0 {
                let _ = writeln!(out, " z{c} obj {}", self.objective[c]);
            }
            for &(r, a) in entries {
                let _ = writeln!(out, " z{c} r{r} {a}");
            }
        }
        let _ = writeln!(out, "RHS");
        for (r, &b) in self.rhs.iter().enumerate() {
            if b != 0.0 {
                let _ = writeln!(out, " rhs r{r} {b}");
            }
        }
        let _ = writeln!(out, "BOUNDS");
        for c in 0..self.vars() {
            let (lo, hi) = (self.lower[c], self.upper[c]);
            if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
                let _ = writeln!(out, " FR bnd z{c}");
            } else {
                if lo != 0.0 {
                    let _ = writeln!(out, " LO bnd z{c} {lo}");
                }
                if hi != f64::INFINITY {
                    let _ = writeln!(out, " UP bnd z{c} {hi}");
                }
            }
        }
        let _ = writeln!(out, "ENDATA");
        out
    }

    pub fn write_mps(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_mps())?;
        Ok(())
    }
}

/// Build the full direct-mechanism LP for an additive buyer.
pub fn build_lp(grid: &ValueGrid) -> Result<LpInstance> {
    let n = grid.len();
    let m = grid.dim();
    if n == 0 {
        return Err(invalid("grid", "grid is empty"));
    }
    let rows = n as u64 + (n as u64) * (n as u64 - 1);
    if rows > MAX_ROWS {
        return Err(Error::LpTooLarge { rows, limit: MAX_ROWS });
    }
    if rows > u32::MAX as u64 || (n * (m + 1)) as u64 > u32::MAX as u64 {
        return Err(Error::LpTooLarge { rows, limit: u32::MAX as u64 });
    }
    let w = m + 1;
    let mut objective = vec![0.0; n * w];
    let mut lower = vec![0.0; n * w];
    let mut upper = vec![1.0; n * w];
    for (i, &mass) in grid.masses().iter().enumerate() {
        objective[i * w + m] = mass;
        lower[i * w + m] = f64::NEG_INFINITY;
        upper[i * w + m] = f64::INFINITY;
    }

    // IR rows: v·x(v) − p(v) ≥ 0.
    let mut triplets = Vec::with_capacity(n * w + (n * (n - 1)) * 2 * w);
    let mut row_start = Vec::with_capacity(rows as usize + 1);
    for i in 0..n {
        row_start.push(triplets.len());
        let v = grid.point(i);
        for d in 0..m {
            if v[d] != 0.0 {
                triplets.push(Triplet { row: i as u32, col: (i * w + d) as u32, value: v[d] });
            }
        }
        triplets.push(Triplet { row: i as u32, col: (i * w + m) as u32, value: -1.0 });
    }

    // IC rows for ordered pairs (i, j), j ≠ i, built in parallel by source point.
    let blocks: Vec<Vec<Triplet>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let v = grid.point(i);
            let mut block = Vec::with_capacity((n - 1) * 2 * w);
            for j in (0..n).filter(|&j| j != i) {
                let row = ic_row(n, i, j) as u32;
                let (lo, hi) = if i < j { (i, j) } else { (j, i) };
                for (k, sign) in [(lo, if lo == i { 1.0 } else { -1.0 }), (hi, if hi == i { 1.0 } else { -1.0 })] {
                    for d in 0..m {
                        if v[d] != 0.0 {
                            block.push(Triplet { row, col: (k * w + d) as u32, value: sign * v[d] });
                        }
                    }
                    block.push(Triplet { row, col: (k * w + m) as u32, value: -sign });
                }
            }
            block
        })
        .collect();
    for block in blocks {
        let mut r = u32::MAX;
        for t in block {
            if t.row != r {
                r = t.row;
                row_start.push(triplets.len());
            }
            triplets.push(t);
        }
    }
    row_start.push(triplets.len());
    debug_assert_eq!(row_start.len(), rows as usize + 1);

    let seed_rows = seed_rows(grid);
    Ok(LpInstance {
        m,
        points: n,
        objective,
        lower,
        upper,
        triplets,
        row_start,
        rhs: vec![0.0; rows as usize],
        seed_rows,
        values: grid.points_flat().to_vec(),
    })
}

/// Row index of the IC constraint "type i does not prefer j's outcome".
fn ic_row(n: usize, i: usize, j: usize) -> usize {
    n + i * (n - 1) + if j < i { j } else { j - 1 }
}

/// IR rows plus IC rows towards each point's nearest neighbours.
fn seed_rows(grid: &ValueGrid) -> Vec<u32> {
    let n = grid.len();
    let mut rows: Vec<u32> = (0..n as u32).collect();
    let k = SEED_NEIGHBORS.min(n.saturating_sub(1));
    for i in 0..n {
        let v = grid.point(i);
        let mut near: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| {
                let d: f64 = v.iter().zip(grid.point(j)).map(|(a, b)| (a - b) * (a - b)).sum();
                (d, j)
            })
            .collect();
        near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        rows.extend(near.iter().take(k).map(|&(_, j)| ic_row(n, i, j) as u32));
    }
    rows
}

/// Outcome of the LP: a mechanism on the grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectMechanism {
    pub m: usize,
    /// Grid values, row-major `points × m`.
    pub values: Vec<f64>,
    /// Allocations, row-major `points × m`.
    pub allocation: Vec<f64>,
    pub payment: Vec<f64>,
}

impl DirectMechanism {
    pub fn len(&self) -> usize {
        self.payment.len()
    }

    pub fn is_empty(&self) -> bool {
        self.payment.is_empty()
    }

    pub fn value(&self, i: usize) -> &[f64] {
        &self.values[i * self.m..(i + 1) * self.m]
    }

    pub fn alloc(&self, i: usize) -> &[f64] {
        &self.allocation[i * self.m..(i + 1) * self.m]
    }

    /// Utility of type `i` reporting `j`.
    pub fn utility(&self, i: usize, j: usize) -> f64 {
        let v = self.value(i);
        v.iter().zip(self.alloc(j)).map(|(a, b)| a * b).sum::<f64>() - self.payment[j]
    }

    /// CSV with header `v1,…,vm,x1,…,xm,p`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let head: Vec<String> = (1..=self.m)
            .map(|d| format!("v{d}"))
            .chain((1..=self.m).map(|d| format!("x{d}")))
            .chain(std::iter::once("p".to_string()))
            .collect();
        out.push_str(&head.join(","));
        out.push('\n');
        for i in 0..self.len() {
            let cells: Vec<String> = self
                .value(i)
                .iter()
                .chain(self.alloc(i))
                .chain(std::iter::once(&self.payment[i]))
                .map(|x| x.to_string())
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Solved LP.
#[derive(Debug, Clone)]
pub struct LpSolution {
    pub mechanism: DirectMechanism,
    pub objective: f64,
    /// Rows in the final restricted problem.
    pub active_rows: usize,
    pub rounds: usize,
}

/// Solve by row generation: solve on the seed rows, then repeatedly add the
/// most violated rows of the full system until none exceeds [`ROW_TOL`].
pub fn solve_lp(lp: &LpInstance) -> Result<LpSolution> {
    let nvars = lp.vars();
    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<Variable> = (0..nvars)
        .map(|c| problem.add_var(lp.objective[c], (lp.lower[c], lp.upper[c])))
        .collect();
    let expr = |r: usize| {
        let mut e = LinearExpr::empty();
        for t in lp.row(r) {
            e.add(vars[t.col as usize], t.value);
        }
        e
    };
    let mut in_problem = vec![false; lp.rows()];
    for &r in &lp.seed_rows {
        let r = r as usize;
        if !in_problem[r] {
            in_problem[r] = true;
            problem.add_constraint(expr(r), ComparisonOp::Ge, lp.rhs[r]);
        }
    }
    let mut solution = expect_solution(problem.solve())?;
    let batch = (lp.points() / 2).max(16);
    let mut rounds = 0;
    loop {
        let z: Vec<f64> = vars.iter().map(|&v| solution.var_value(v)).collect();
        let mut violated: Vec<(f64, usize)> = (0..lp.rows())
            .into_par_iter()
            .filter(|&r| !in_problem[r])
            .filter_map(|r| {
                let viol = lp.violation(r, &z);
                (viol > ROW_TOL).then_some((viol, r))
            })
            .collect();
        if violated.is_empty() {
            let objective = solution.objective();
            return Ok(LpSolution {
                mechanism: mechanism_from(lp, &z),
                objective,
                active_rows: in_problem.iter().filter(|&&b| b).count(),
                rounds,
            });
        }
        rounds += 1;
        if rounds > MAX_ROUNDS {
            return Err(Error::Solver(format!("row generation did not converge in {MAX_ROUNDS} rounds")));
        }
        violated.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for &(_, r) in violated.iter().take(batch) {
            in_problem[r] = true;
            solution = expect_solution(solution.add_constraint(expr(r), ComparisonOp::Ge, lp.rhs[r]))?;
        }
    }
}

fn expect_solution(outcome: std::result::Result<SolveOutcome, microlp::Error>) -> Result<microlp::Solution> {
    outcome
        .map_err(|e| Error::Solver(e.to_string()))?
        .into_solution()
        .map_err(|_| Error::Solver("solve interrupted before a solution was found".into()))
}

fn mechanism_from(lp: &LpInstance, z: &[f64]) -> DirectMechanism {
    let n = lp.points();
    let m = lp.dim();
    let mut allocation = Vec::with_capacity(n * m);
    let mut payment = Vec::with_capacity(n);
    for i in 0..n {
        allocation.extend((0..m).map(|d| z[lp.alloc_var(i, d)].clamp(0.0, 1.0)));
        payment.push(z[lp.price_var(i)]);
    }
    DirectMechanism {
        m,
        values: lp.values.clone(),
        allocation,
        payment,
    }
}

/// Build and solve in one call.
pub fn solve_grid(grid: &ValueGrid) -> Result<LpSolution> {
    solve_lp(&build_lp(grid)?)
}

/// Result of the brute-force IC/IR audit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Audit {
    /// Largest `u(i→j) − u(i→i)` over ordered pairs.
    pub max_ic_violation: f64,
    pub worst_pair: Option<(usize, usize)>,
    /// Largest `−u(i→i)`.
    pub max_ir_violation: f64,
    pub worst_ir: Option<usize>,
}

impl Audit {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_ic_violation <= tol && self.max_ir_violation <= tol
    }
}

/// Check every ordered pair for IC and every point for IR.
pub fn audit(mech: &DirectMechanism) -> Audit {
    let n = mech.len();
    let per_point: Vec<(f64, Option<usize>, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let own = mech.utility(i, i);
            let mut worst = (f64::NEG_INFINITY, None);
            for j in (0..n).filter(|&j| j != i) {
                let gain = mech.utility(i, j) - own;
                if gain > worst.0 {
                    worst = (gain, Some(j));
                }
            }
            (worst.0, worst.1, -own)
        })
        .collect();
    let mut out = Audit {
        max_ic_violation: 0.0,
        worst_pair: None,
        max_ir_violation: 0.0,
        worst_ir: None,
    };
    for (i, (ic, j, ir)) in per_point.into_iter().enumerate() {
        if ic > out.max_ic_violation {
            out.max_ic_violation = ic;
            out.worst_pair = j.map(|j| (i, j));
        }
        if ir > out.max_ir_violation {
            out.max_ir_violation = ir;
            out.worst_ir = Some(i);
        }
    }
    out
}

/// Collapse the outcomes of an IC mechanism into a menu.
///
/// Outcomes within [`EXTRACT_RES`] (max norm over allocation and price) are
/// merged, and outcomes indistinguishable from the exit item are dropped.
pub fn menu_from_direct(mech: &DirectMechanism) -> Result<Menu> {
    let report = audit(mech);
    if report.max_ic_violation > EXTRACT_RES {
        let (from, to) = report.worst_pair.unwrap_or((0, 0));
        return Err(Error::IcViolation {
            from,
            to,
            violation: report.max_ic_violation,
        });
    }
    let m = mech.m;
    let close = |a: &[f64], pa: f64, b: &[f64], pb: f64| {
        (pa - pb).abs() <= EXTRACT_RES && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= EXTRACT_RES)
    };
    let zero = vec![0.0; m];
    let mut items: Vec<MenuItem> = Vec::new();
    for i in 0..mech.len() {
        let (x, p) = (mech.alloc(i), mech.payment[i]);
        if close(x, p, &zero, 0.0) || items.iter().any(|it| close(x, p, &it.allocation, it.price)) {
            continue;
        }
        items.push(MenuItem::new(x.to_vec(), p));
    }
    Menu::with_exit(m, items)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distribution::{make_grid, DistributionSpec};

    fn two_point() -> ValueGrid {
        ValueGrid::from_parts(2, 0, vec![1.0, 0.0, 0.0, 1.0], vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn single_point_extracts_full_surplus() {
        let grid = ValueGrid::from_parts(2, 0, vec![0.3, 0.4], vec![1.0]).unwrap();
        let lp = build_lp(&grid).unwrap();
        assert_eq!((lp.vars(), lp.ir_rows(), lp.ic_rows()), (3, 1, 0));
        let sol = solve_lp(&lp).unwrap();
        assert!((sol.objective - 0.7).abs() < 1e-9);
        assert!((sol.mechanism.alloc(0)[0] - 1.0).abs() < 1e-9);
        assert!((sol.mechanism.alloc(0)[1] - 1.0).abs() < 1e-9);
        let menu = menu_from_direct(&sol.mechanism).unwrap();
        assert_eq!(menu.len(), 2);
    }

    #[test]
    fn sizes_at_n10() {
        let grid = make_grid(&DistributionSpec::unit_square(), 10).unwrap();
        let lp = build_lp(&grid).unwrap();
        assert_eq!(lp.vars(), 300);
        assert_eq!(lp.ic_rows(), 9900);
        assert_eq!(lp.ir_rows(), 100);
        assert_eq!(lp.row_start.len(), 10_001);
        assert!(lp.triplets.windows(2).all(|w| (w[0].row, w[0].col) < (w[1].row, w[1].col)));
    }

    #[test]
    fn ic_row_layout() {
        let grid = two_point();
        let lp = build_lp(&grid).unwrap();
        // Row 2: type 0 (v=(1,0)) does not envy type 1.
        let row: Vec<(u32, f64)> = lp.row(2).iter().map(|t| (t.col, t.value)).collect();
        assert_eq!(row, vec![(0, 1.0), (2, -1.0), (3, -1.0), (5, 1.0)]);
    }

    #[test]
    fn two_point_bundle() {
        let sol = solve_grid(&two_point()).unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-9, "{}", sol.objective);
        assert!(audit(&sol.mechanism).passes(AUDIT_TOL));
    }

    #[test]
    fn row_guard() {
        let n = 10_001;
        let pts = vec![0.5; 2 * n];
        let grid = ValueGrid::from_parts(2, 0, pts, vec![1.0 / n as f64; n]).unwrap();
        assert!(matches!(build_lp(&grid), Err(Error::LpTooLarge { .. })));
    }

    #[test]
    fn rejects_non_ic_mechanism() {
        let mech = DirectMechanism {
            m: 2,
            values: vec![1.0, 0.0, 0.0, 1.0],
            allocation: vec![1.0, 0.0, 1.0, 1.0],
            payment: vec![0.9, 0.2],
        };
        match menu_from_direct(&mech) {
            Err(Error::IcViolation { from, to, violation }) => {
                assert_eq!((from, to), (0, 1));
                assert!((violation - 0.7).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn mps_and_csv() {
        let lp = build_lp(&two_point()).unwrap();
        let mps = lp.to_mps();
        assert!(mps.starts_with("NAME"));
        assert!(mps.contains(" FR bnd z2"));
        assert!(mps.contains(" UP bnd z0 1"));
        assert!(mps.trim_end().ends_with("ENDATA"));
        let sol = solve_lp(&lp).unwrap();
        let csv = sol.mechanism.to_csv();
        assert!(csv.starts_with("v1,v2,x1,x2,p\n"));
        assert_eq!(csv.lines().count(), 3);
    }
}
