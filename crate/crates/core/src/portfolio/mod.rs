//! Mean-CVaR selection over a menu of tranche return distributions.
//!
//! The scenario LP is the Rockafellar–Uryasev linearization
//!
//! ```text
//! min  a + 1/((1−α)n) Σ_s z_s
//! s.t. m·w ≥ μ,  Σ w = 1,  lo ≤ w ≤ hi,
//!      z_s ≥ ℓ_s·w − a,  z_s ≥ 0
//! ```
//!
//! with ℓ_s the per-scenario losses (negated returns). [`build_lp`] produces
//! it verbatim. [`optimize_portfolio`] solves its LP dual instead, which has
//! d + 1 rows whatever the scenario count, and reads the weights back from the
//! dual's row multipliers.

mod simplex;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::pricing::{risk_stats, PricingError};

pub use simplex::{
    solve_lp, solve_lp_with, Constraint, LinearProgram, LpError, LpSolution, LpStatus, Sense, SimplexOptions,
};

#[derive(Debug, Error)]
pub enum PortfolioError {
    #[error("infeasible bounds: {0}")]
    InfeasibleBounds(String),
    #[error("target mean {target} exceeds the attainable maximum {max}")]
    TargetUnattainable { target: f64, max: f64 },
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error("lp: {0}")]
    Lp(#[from] LpError),
    #[error(transparent)]
    Pricing(#[from] PricingError),
}

/// Scenario returns of d assets (all on the same n scenarios), target mean,
/// per-asset weight bounds and tail level α.
#[derive(Debug, Clone, PartialEq)]
pub struct CvarProblem {
    pub names: Vec<String>,
    /// `returns[j][s]`: return of asset j in scenario s.
    pub returns: Vec<Vec<f64>>,
    pub target_mean: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub alpha: f64,
}

impl CvarProblem {
    /// Uniform bounds `[lo, hi]` on every asset.
    pub fn new(returns: Vec<Vec<f64>>, target_mean: f64, lo: f64, hi: f64, alpha: f64) -> Result<Self, PortfolioError> {
        let d = returns.len();
        let problem = Self {
            names: (0..d).map(|j| format!("asset{}", j + 1)).collect(),
            returns,
            target_mean,
            lower: vec![lo; d],
            upper: vec![hi; d],
            alpha,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn d(&self) -> usize {
        self.returns.len()
    }

    pub fn n(&self) -> usize {
        self.returns.first().map_or(0, Vec::len)
    }

    pub fn means(&self) -> Vec<f64> {
        self.returns
            .iter()
            .map(|r| r.iter().sum::<f64>() / r.len() as f64)
            .collect()
    }

    /// Structural checks: shapes, α, finite bounds with lo ≤ hi and
    /// Σ lo ≤ 1 ≤ Σ hi.
    pub fn validate(&self) -> Result<(), PortfolioError> {
        let (d, n) = (self.d(), self.n());
        if d == 0 || n == 0 {
            return Err(PortfolioError::Invalid("need at least one asset and one scenario".into()));
        }
        if self.returns.iter().any(|r| r.len() != n) {
            return Err(PortfolioError::Invalid("assets have different scenario counts".into()));
        }
        if self.returns.iter().flatten().any(|v| !v.is_finite()) {
            return Err(PortfolioError::Invalid("non-finite return".into()));
        }
        if self.names.len() != d || self.lower.len() != d || self.upper.len() != d {
            return Err(PortfolioError::Invalid("names or bounds do not match the asset count".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(PortfolioError::Invalid(format!("alpha {} outside (0,1)", self.alpha)));
        }
        if !self.target_mean.is_finite() {
            return Err(PortfolioError::Invalid("target mean must be finite".into()));
        }
        for j in 0..d {
            let (lo, hi) = (self.lower[j], self.upper[j]);
            if !lo.is_finite() || !hi.is_finite() || lo > hi {
                return Err(PortfolioError::InfeasibleBounds(format!("asset {}: [{lo}, {hi}]", j + 1)));
            }
        }
        let (slo, shi): (f64, f64) = (self.lower.iter().sum(), self.upper.iter().sum());
        if slo > 1.0 + 1e-12 || shi < 1.0 - 1e-12 {
            return Err(PortfolioError::InfeasibleBounds(format!(
                "weights cannot sum to 1 within bounds (sum lo = {slo}, sum hi = {shi})"
            )));
        }
        Ok(())
    }

    /// Largest m·w over the box-and-budget set: start at the lower bounds and
    /// hand the remaining budget to the highest means first.
    pub fn max_attainable_mean(&self) -> f64 {
        let means = self.means();
        let mut order: Vec<usize> = (0..self.d()).collect();
        order.sort_by(|&a, &b| means[b].total_cmp(&means[a]).then(a.cmp(&b)));
        let mut w = self.lower.clone();
        let mut left = 1.0 - w.iter().sum::<f64>();
        for j in order {
            let add = left.min(self.upper[j] - w[j]).max(0.0);
            w[j] += add;
            left -= add;
        }
        w.iter().zip(&means).map(|(a, b)| a * b).sum()
    }

    pub fn check_feasible(&self) -> Result<(), PortfolioError> {
        self.validate()?;
        let max = self.max_attainable_mean();
        if self.target_mean > max + 1e-12 {
            return Err(PortfolioError::TargetUnattainable {
                target: self.target_mean,
                max,
            });
        }
        Ok(())
    }

    /// Per-scenario return of the weighted portfolio.
    pub fn portfolio_returns(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for (wj, r) in w.iter().zip(&self.returns) {
            for (o, v) in out.iter_mut().zip(r) {
                *o += wj * v;
            }
        }
        out
    }

    /// 1/((1−α)n), the weight on each z_s.
    pub fn tail_weight(&self) -> f64 {
        1.0 / ((1.0 - self.alpha) * self.n() as f64)
    }
}

/// Optimized weights and their risk figures.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvarSolution {
    pub names: Vec<String>,
    pub weights: Vec<f64>,
    /// Achieved mean return.
    pub mean: f64,
    pub alpha: f64,
    /// CVaR and VaR of the portfolio loss, recomputed from the weights.
    pub cvar: f64,
    pub var: f64,
    pub lp_objective: f64,
    /// |lp_objective − cvar|.
    pub gap: f64,
    pub status: LpStatus,
    pub iterations: usize,
}

/// Variable layout of [`build_lp`]: w_1..w_d, then a, then z_1..z_n.
pub fn build_lp(problem: &CvarProblem) -> Result<LinearProgram, PortfolioError> {
    problem.check_feasible()?;
    let (d, n) = (problem.d(), problem.n());
    let a = d;
    let z0 = d + 1;
    let mut lp = LinearProgram::new(d + 1 + n);
    lp.objective[a] = 1.0;
    let c = problem.tail_weight();
    for s in 0..n {
        lp.objective[z0 + s] = c;
    }
    lp.lower[..d].copy_from_slice(&problem.lower);
    lp.upper[..d].copy_from_slice(&problem.upper);
    lp.lower[a] = f64::NEG_INFINITY;
    let means = problem.means();
    lp.add_row(means.iter().cloned().enumerate().collect(), Sense::Ge, problem.target_mean);
    lp.add_row((0..d).map(|j| (j, 1.0)).collect(), Sense::Eq, 1.0);
    for s in 0..n {
        // z_s − ℓ_s·w + a ≥ 0 with ℓ = −return
        let mut coefs: Vec<(usize, f64)> = (0..d).map(|j| (j, problem.returns[j][s])).collect();
        coefs.push((a, 1.0));
        coefs.push((z0 + s, 1.0));
        lp.add_row(coefs, Sense::Ge, 0.0);
    }
    Ok(lp)
}

fn finish(problem: &CvarProblem, weights: Vec<f64>, lp_objective: f64, iterations: usize) -> Result<CvarSolution, PortfolioError> {
    let returns = problem.portfolio_returns(&weights);
    let stats = risk_stats(&returns, problem.alpha)?;
    let mean = returns.iter().sum::<f64>() / returns.len() as f64;
    Ok(CvarSolution {
        names: problem.names.clone(),
        weights,
        mean,
        alpha: problem.alpha,
        cvar: stats.cvar,
        var: stats.var,
        lp_objective,
        gap: (lp_objective - stats.cvar).abs(),
        status: LpStatus::Optimal,
        iterations,
    })
}

/// Solves [`build_lp`] directly. The tableau has n + 2 rows, so this is meant
/// for small scenario counts and cross-checks.
pub fn optimize_portfolio_primal(problem: &CvarProblem) -> Result<CvarSolution, PortfolioError> {
    let lp = build_lp(problem)?;
    let sol = solve_lp(&lp)?;
    finish(problem, sol.x[..problem.d()].to_vec(), sol.objective, sol.iterations)
}

/// The LP dual of [`build_lp`] as a minimization, laid out as
/// π_1..π_n, λ, ν, u_1..u_d, v_1..v_d.
pub fn build_dual_lp(problem: &CvarProblem) -> Result<LinearProgram, PortfolioError> {
    problem.check_feasible()?;
    let (d, n) = (problem.d(), problem.n());
    let (lam, nu, u0, v0) = (n, n + 1, n + 2, n + 2 + d);
    let mut lp = LinearProgram::new(n + 2 + 2 * d);
    let c = problem.tail_weight();
    for s in 0..n {
        lp.upper[s] = c;
    }
    lp.objective[lam] = -problem.target_mean;
    lp.objective[nu] = -1.0;
    lp.lower[nu] = f64::NEG_INFINITY;
    for j in 0..d {
        lp.objective[u0 + j] = -problem.lower[j];
        lp.objective[v0 + j] = problem.upper[j];
    }
    let means = problem.means();
    for j in 0..d {
        // Σ_s ℓ_sj π_s − m_j λ − ν − u_j + v_j = 0
        let mut coefs: Vec<(usize, f64)> = problem.returns[j]
            .iter()
            .enumerate()
            .filter(|(_, &r)| r != 0.0)
            .map(|(s, &r)| (s, -r))
            .collect();
        coefs.extend([(lam, -means[j]), (nu, -1.0), (u0 + j, -1.0), (v0 + j, 1.0)]);
        lp.add_row(coefs, Sense::Eq, 0.0);
    }
    lp.add_row((0..n).map(|s| (s, 1.0)).collect(), Sense::Eq, 1.0);
    Ok(lp)
}

/// Minimizes CVaR_α of the portfolio loss subject to the mean target, budget
/// and bounds. Weights are the multipliers of the dual's asset rows; CVaR and
/// VaR are then recomputed from them with [`risk_stats`].
pub fn optimize_portfolio(problem: &CvarProblem) -> Result<CvarSolution, PortfolioError> {
    let lp = build_dual_lp(problem)?;
    let sol = solve_lp(&lp)?;
    let weights = sol.duals[..problem.d()].to_vec();
    finish(problem, weights, -sol.objective, sol.iterations)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontierPoint {
    pub target_mean: f64,
    pub solution: Option<CvarSolution>,
    /// Set when this target could not be solved.
    pub error: Option<String>,
}

/// Re-solves `problem` at every target in `grid`. Failures are recorded per
/// point and the sweep continues.
pub fn efficient_frontier(problem: &CvarProblem, grid: &[f64]) -> Vec<FrontierPoint> {
    grid.par_iter()
        .map(|&mu| {
            let p = CvarProblem {
                target_mean: mu,
                ..problem.clone()
            };
            match optimize_portfolio(&p) {
                Ok(sol) => FrontierPoint {
                    target_mean: mu,
                    solution: Some(sol),
                    error: None,
                },
                Err(e) => FrontierPoint {
                    target_mean: mu,
                    solution: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}
