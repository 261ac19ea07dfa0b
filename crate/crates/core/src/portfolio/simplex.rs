//! Dense-tableau bounded-variable two-phase primal simplex.
//!
//! Every constraint row gets an artificial column, so the starting basis is
//! the identity. Nonbasic variables sit at either bound and may flip between
//! them without a pivot. Pricing is Dantzig's largest reduced cost, switching
//! to Bland's smallest-index rule after a run of degenerate pivots (or
//! throughout when `force_bland` is set). When the basis is small enough the
//! tableau is rebuilt from an explicit basis inverse at the end of each phase,
//! which removes accumulated rounding before the result is reported.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Le,
    Ge,
    Eq,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    /// Sparse (variable, coefficient) pairs.
    pub coefs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

/// minimize cᵀx subject to rows and `lower ≤ x ≤ upper` (bounds may be infinite).
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new(n_vars: usize) -> Self {
        Self {
            objective: vec![0.0; n_vars],
            lower: vec![0.0; n_vars],
            upper: vec![f64::INFINITY; n_vars],
            rows: Vec::new(),
        }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_row(&mut self, coefs: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.rows.push(Constraint { coefs, sense, rhs });
    }

    /// Row `i` as a dense vector.
    pub fn dense_row(&self, i: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.n_vars()];
        for &(j, a) in &self.rows[i].coefs {
            out[j] += a;
        }
        out
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest violation of any row or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst: f64 = 0.0;
        for row in &self.rows {
            let lhs: f64 = row.coefs.iter().map(|&(j, a)| a * x[j]).sum();
            let v = match row.sense {
                Sense::Le => lhs - row.rhs,
                Sense::Ge => row.rhs - lhs,
                Sense::Eq => (lhs - row.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (k, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[k] - v).max(v - self.upper[k]);
        }
        worst
    }

    fn check(&self) -> Result<(), LpError> {
        let n = self.n_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::Invalid("bound vectors do not match the objective".into()));
        }
        for k in 0..n {
            if self.lower[k] > self.upper[k] || self.lower[k] == f64::INFINITY || self.upper[k] == f64::NEG_INFINITY {
                return Err(LpError::Infeasible);
            }
            if !self.objective[k].is_finite() {
                return Err(LpError::Invalid(format!("objective coefficient {k} is not finite")));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() || row.coefs.iter().any(|&(j, a)| j >= n || !a.is_finite()) {
                return Err(LpError::Invalid(format!("row {i} has a bad index or value")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LpError {
    #[error("infeasible")]
    Infeasible,
    #[error("unbounded")]
    Unbounded,
    #[error("iteration limit {0} reached")]
    IterationLimit(usize),
    #[error("invalid program: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    pub x: Vec<f64>,
    pub objective: f64,
    /// Row multipliers y with reduced costs c − Aᵀy.
    pub duals: Vec<f64>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexOptions {
    /// 0 picks a limit from the problem size.
    pub max_iterations: usize,
    pub force_bland: bool,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degenerate_switch: usize,
    pub optimality_tol: f64,
    pub pivot_tol: f64,
    pub feasibility_tol: f64,
}

impl Default for SimplexOptions {
    fn default() -> Self {
        Self {
            max_iterations: 0,
            force_bland: false,
            degenerate_switch: 50,
            optimality_tol: 1e-11,
            pivot_tol: 1e-9,
            feasibility_tol: 1e-9,
        }
    }
}

/// Above this many basis entries times columns the tableau is never rebuilt.
const REFRESH_BUDGET: usize = 400_000_000;

pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    solve_lp_with(lp, &SimplexOptions::default())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Basic,
    Lower,
    Upper,
}

/// x_k = offset + Σ coef · x'_col over the listed standard-form columns.
struct VarMap {
    offset: f64,
    parts: Vec<(usize, f64)>,
}

struct Tableau {
    m: usize,
    ncols: usize,
    /// First artificial column; artificials are `art0..art0 + m`.
    art0: usize,
    cols: Vec<Vec<(usize, f64)>>,
    rhs: Vec<f64>,
    ub: Vec<f64>,
    t: Vec<f64>,
    beta: Vec<f64>,
    d: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<State>,
    cost: Vec<f64>,
    opts: SimplexOptions,
    iterations: usize,
    max_iterations: usize,
}

pub fn solve_lp_with(lp: &LinearProgram, opts: &SimplexOptions) -> Result<LpSolution, LpError> {
    lp.check()?;
    let m = lp.rows.len();

    // structural columns after shifting/splitting bounds
    let mut maps = Vec::with_capacity(lp.n_vars());
    let mut ub = Vec::new();
    let mut cost = Vec::new();
    for k in 0..lp.n_vars() {
        let (lo, hi, c) = (lp.lower[k], lp.upper[k], lp.objective[k]);
        let col = ub.len();
        if lo.is_finite() {
            maps.push(VarMap {
                offset: lo,
                parts: vec![(col, 1.0)],
            });
            ub.push(hi - lo);
            cost.push(c);
        } else if hi.is_finite() {
            maps.push(VarMap {
                offset: hi,
                parts: vec![(col, -1.0)],
            });
            ub.push(f64::INFINITY);
            cost.push(-c);
        } else {
            maps.push(VarMap {
                offset: 0.0,
                parts: vec![(col, 1.0), (col + 1, -1.0)],
            });
            ub.extend([f64::INFINITY, f64::INFINITY]);
            cost.extend([c, -c]);
        }
    }
    let n_struct = ub.len();
    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_struct];
    let mut rhs = vec![0.0; m];
    let mut row_sign = vec![1.0; m];
    for (i, row) in lp.rows.iter().enumerate() {
        let mut b = row.rhs;
        for &(k, a) in &row.coefs {
            b -= a * maps[k].offset;
        }
        row_sign[i] = if b < 0.0 { -1.0 } else { 1.0 };
        rhs[i] = b * row_sign[i];
        for &(k, a) in &row.coefs {
            for &(col, s) in &maps[k].parts {
                push_entry(&mut cols[col], i, a * s * row_sign[i]);
            }
        }
    }
    for (i, row) in lp.rows.iter().enumerate() {
        let s = match row.sense {
            Sense::Le => 1.0,
            Sense::Ge => -1.0,
            Sense::Eq => continue,
        };
        cols.push(vec![(i, s * row_sign[i])]);
        ub.push(f64::INFINITY);
        cost.push(0.0);
    }
    let art0 = cols.len();
    for i in 0..m {
        cols.push(vec![(i, 1.0)]);
        ub.push(f64::INFINITY);
        cost.push(0.0);
    }
    let ncols = cols.len();
    let max_iterations = if opts.max_iterations == 0 {
        50_000 + 20 * (m + ncols)
    } else {
        opts.max_iterations
    };

    let mut tab = Tableau {
        m,
        ncols,
        art0,
        t: vec![0.0; m * ncols],
        beta: rhs.clone(),
        d: vec![0.0; ncols],
        basis: (art0..art0 + m).collect(),
        state: (0..ncols).map(|j| if j >= art0 { State::Basic } else { State::Lower }).collect(),
        cols,
        rhs,
        ub,
        cost: vec![0.0; ncols],
        opts: opts.clone(),
        iterations: 0,
        max_iterations,
    };
    for (j, col) in tab.cols.iter().enumerate() {
        for &(i, a) in col {
            tab.t[i * ncols + j] = a;
        }
    }

    // phase 1: drive the artificials to zero
    for j in art0..ncols {
        tab.cost[j] = 1.0;
    }
    tab.recompute_reduced_costs();
    tab.run()?;
    tab.refresh();
    tab.run()?;
    let infeasibility: f64 = tab
        .basis
        .iter()
        .zip(&tab.beta)
        .filter(|(&b, _)| b >= art0)
        .map(|(_, &v)| v)
        .sum();
    let scale = 1.0 + tab.rhs.iter().cloned().fold(0.0, f64::max);
    if infeasibility > opts.feasibility_tol * scale {
        return Err(LpError::Infeasible);
    }

    // phase 2: artificials pinned at zero
    for j in art0..ncols {
        tab.ub[j] = 0.0;
        tab.cost[j] = 0.0;
    }
    tab.cost[..n_struct].copy_from_slice(&cost[..n_struct]);
    tab.recompute_reduced_costs();
    tab.run()?;
    if tab.refresh() {
        tab.run()?;
    }

    let xs = tab.column_values();
    let x: Vec<f64> = maps
        .iter()
        .map(|vm| vm.offset + vm.parts.iter().map(|&(c, s)| s * xs[c]).sum::<f64>())
        .collect();
    // artificial k has cost 0, so its reduced cost is −y_k of the scaled row
    let duals = (0..m).map(|i| -tab.d[art0 + i] * row_sign[i]).collect();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective: lp.objective_value(&x),
        x,
        duals,
        iterations: tab.iterations,
    })
}

fn push_entry(col: &mut Vec<(usize, f64)>, row: usize, v: f64) {
    if let Some(last) = col.last_mut() {
        if last.0 == row {
            last.1 += v;
            return;
        }
    }
    col.push((row, v));
}

impl Tableau {
    fn column_values(&self) -> Vec<f64> {
        let mut xs: Vec<f64> = (0..self.ncols)
            .map(|j| match self.state[j] {
                State::Upper => self.ub[j],
                _ => 0.0,
            })
            .collect();
        for (i, &b) in self.basis.iter().enumerate() {
            xs[b] = self.beta[i];
        }
        xs
    }

    fn recompute_reduced_costs(&mut self) {
        let n = self.ncols;
        self.d.copy_from_slice(&self.cost);
        for i in 0..self.m {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * n..(i + 1) * n];
                for (dj, &a) in self.d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        for &b in &self.basis {
            self.d[b] = 0.0;
        }
    }

    /// Rebuilds tableau, basic values and reduced costs from an explicit basis
    /// inverse. Returns false when skipped (too large or singular).
    fn refresh(&mut self) -> bool {
        let (m, n) = (self.m, self.ncols);
        if m == 0 || m.saturating_mul(m).saturating_mul(n) > REFRESH_BUDGET {
            return false;
        }
        let mut b = DMatrix::<f64>::zeros(m, m);
        for (k, &col) in self.basis.iter().enumerate() {
            for &(i, a) in &self.cols[col] {
                b[(i, k)] = a;
            }
        }
        let Some(inv) = b.try_inverse() else {
            return false;
        };
        let mut t = vec![0.0; m * n];
        for (j, col) in self.cols.iter().enumerate() {
            for &(r, a) in col {
                for i in 0..m {
                    t[i * n + j] += inv[(i, r)] * a;
                }
            }
        }
        let mut eff = self.rhs.clone();
        for j in 0..n {
            if self.state[j] == State::Upper {
                for &(r, a) in &self.cols[j] {
                    eff[r] -= a * self.ub[j];
                }
            }
        }
        for i in 0..m {
            self.beta[i] = (0..m).map(|r| inv[(i, r)] * eff[r]).sum();
        }
        for (k, &col) in self.basis.iter().enumerate() {
            for i in 0..m {
                t[i * n + col] = if i == k { 1.0 } else { 0.0 };
            }
        }
        self.t = t;
        self.recompute_reduced_costs();
        true
    }

    fn enterable(&self, j: usize) -> bool {
        j < self.art0 && self.ub[j] > 0.0 && self.state[j] != State::Basic
    }

    fn choose_entering(&self, bland: bool) -> Option<(usize, f64)> {
        let tol = self.opts.optimality_tol;
        let mut best: Option<(usize, f64)> = None;
        let mut best_score = 0.0;
        for j in 0..self.art0 {
            if !self.enterable(j) {
                continue;
            }
            let dj = self.d[j];
            let (dir, score) = match self.state[j] {
                State::Lower if dj < -tol => (1.0, -dj),
                State::Upper if dj > tol => (-1.0, dj),
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            if score > best_score {
                best_score = score;
                best = Some((j, dir));
            }
        }
        best
    }

    fn run(&mut self) -> Result<(), LpError> {
        let n = self.ncols;
        let mut degenerate_run = 0usize;
        loop {
            if self.iterations >= self.max_iterations {
                return Err(LpError::IterationLimit(self.iterations));
            }
            let bland = self.opts.force_bland || degenerate_run >= self.opts.degenerate_switch;
            let Some((j, dir)) = self.choose_entering(bland) else {
                return Ok(());
            };
            self.iterations += 1;

            // ratio test; `leave = None` means the entering variable flips bounds
            let mut theta = self.ub[j];
            let mut leave: Option<(usize, bool)> = None;
            let mut leave_pivot = 0.0;
            for i in 0..self.m {
                let a = self.t[i * n + j];
                if a.abs() <= self.opts.pivot_tol {
                    continue;
                }
                let rate = -dir * a;
                let bvar = self.basis[i];
                let (limit, to_upper) = if rate < 0.0 {
                    (self.beta[i].max(0.0) / -rate, false)
                } else if self.ub[bvar].is_finite() {
                    ((self.ub[bvar] - self.beta[i]).max(0.0) / rate, true)
                } else {
                    continue;
                };
                let better = match leave {
                    _ if limit < theta - 1e-12 => true,
                    Some((r, _)) if limit <= theta + 1e-12 => {
                        if bland {
                            bvar < self.basis[r]
                        } else {
                            a.abs() > leave_pivot
                        }
                    }
                    _ => false,
                };
                if better {
                    theta = limit.min(theta.max(limit));
                    leave = Some((i, to_upper));
                    leave_pivot = a.abs();
                }
            }
            if theta.is_infinite() {
                return Err(LpError::Unbounded);
            }
            if theta <= 1e-12 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            for i in 0..self.m {
                let a = self.t[i * n + j];
                if a != 0.0 {
                    self.beta[i] -= dir * theta * a;
                }
            }
            match leave {
                None => {
                    self.state[j] = if self.state[j] == State::Lower {
                        State::Upper
                    } else {
                        State::Lower
                    };
                }
                Some((r, to_upper)) => {
                    let entering_value = if self.state[j] == State::Lower {
                        theta
                    } else {
                        self.ub[j] - theta
                    };
                    let out = self.basis[r];
                    self.state[out] = if to_upper { State::Upper } else { State::Lower };
                    self.pivot(r, j);
                    self.beta[r] = entering_value;
                    self.basis[r] = j;
                    self.state[j] = State::Basic;
                }
            }
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let n = self.ncols;
        let piv = self.t[r * n + j];
        let (before, rest) = self.t.split_at_mut(r * n);
        let (prow, after) = rest.split_at_mut(n);
        for v in prow.iter_mut() {
            *v /= piv;
        }
        prow[j] = 1.0;
        let eliminate = |row: &mut [f64]| {
            let f = row[j];
            if f != 0.0 {
                for (x, &p) in row.iter_mut().zip(prow.iter()) {
                    *x -= f * p;
                }
                row[j] = 0.0;
            }
        };
        for row in before.chunks_mut(n) {
            eliminate(row);
        }
        for row in after.chunks_mut(n) {
            eliminate(row);
        }
        let f = self.d[j];
        if f != 0.0 {
            for (x, &p) in self.d.iter_mut().zip(prow.iter()) {
                *x -= f * p;
            }
            self.d[j] = 0.0;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_lower_bound() {
        let mut lp = LinearProgram::new(1);
        lp.objective[0] = 1.0;
        lp.lower[0] = f64::NEG_INFINITY;
        lp.add_row(vec![(0, 1.0)], Sense::Ge, 3.0);
        let sol = solve_lp(&lp).unwrap();
        assert!((sol.objective - 3.0).abs() < 1e-12);
        assert!((sol.duals[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn textbook_maximization() {
        // max 3x + 5y, x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![-3.0, -5.0];
        lp.add_row(vec![(0, 1.0)], Sense::Le, 4.0);
        lp.add_row(vec![(1, 2.0)], Sense::Le, 12.0);
        lp.add_row(vec![(0, 3.0), (1, 2.0)], Sense::Le, 18.0);
        let sol = solve_lp(&lp).unwrap();
        assert!((sol.objective + 36.0).abs() < 1e-10);
        assert!((sol.x[0] - 2.0).abs() < 1e-10 && (sol.x[1] - 6.0).abs() < 1e-10);
        // shadow prices of the binding rows
        assert!(sol.duals[0].abs() < 1e-10);
        assert!((sol.duals[1] + 1.5).abs() < 1e-10);
        assert!((sol.duals[2] + 1.0).abs() < 1e-10);
    }

    #[test]
    fn bounds_and_free_variables() {
        // min −x + y, x ∈ [−2, 5], y free, x − y = 1 → any feasible gives −1
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![-1.0, 1.0];
        lp.lower = vec![-2.0, f64::NEG_INFINITY];
        lp.upper = vec![5.0, f64::INFINITY];
        lp.add_row(vec![(0, 1.0), (1, -1.0)], Sense::Eq, 1.0);
        let sol = solve_lp(&lp).unwrap();
        assert!((sol.objective + 1.0).abs() < 1e-12);
        assert!(lp.max_violation(&sol.x) < 1e-12);
        // min x with x ≤ −1 and upper-only bound
        let mut lp = LinearProgram::new(1);
        lp.objective = vec![-1.0];
        lp.lower = vec![f64::NEG_INFINITY];
        lp.upper = vec![-1.0];
        let sol = solve_lp(&lp).unwrap();
        assert!((sol.x[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(1);
        lp.add_row(vec![(0, 1.0)], Sense::Ge, 3.0);
        lp.add_row(vec![(0, 1.0)], Sense::Le, 2.0);
        assert_eq!(solve_lp(&lp), Err(LpError::Infeasible));
        let mut lp = LinearProgram::new(1);
        lp.objective = vec![-1.0];
        lp.add_row(vec![(0, 1.0)], Sense::Ge, 3.0);
        assert_eq!(solve_lp(&lp), Err(LpError::Unbounded));
        let mut lp = LinearProgram::new(1);
        lp.lower[0] = 2.0;
        lp.upper[0] = 1.0;
        assert_eq!(solve_lp(&lp), Err(LpError::Infeasible));
    }

    #[test]
    fn bland_agrees_with_dantzig() {
        // Beale's cycling example
        let mut lp = LinearProgram::new(4);
        lp.objective = vec![-0.75, 150.0, -0.02, 6.0];
        lp.add_row(vec![(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)], Sense::Le, 0.0);
        lp.add_row(vec![(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)], Sense::Le, 0.0);
        lp.add_row(vec![(2, 1.0)], Sense::Le, 1.0);
        let a = solve_lp(&lp).unwrap();
        let b = solve_lp_with(
            &lp,
            &SimplexOptions {
                force_bland: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!((a.objective + 0.05).abs() < 1e-10);
        assert!((b.objective + 0.05).abs() < 1e-10);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(2);
        lp.objective = vec![1.0, 2.0];
        lp.add_row(vec![(0, 1.0), (1, 1.0)], Sense::Eq, 1.0);
        lp.add_row(vec![(0, 2.0), (1, 2.0)], Sense::Eq, 2.0);
        let sol = solve_lp(&lp).unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-12);
    }
}
