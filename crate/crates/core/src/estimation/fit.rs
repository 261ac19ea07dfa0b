use serde::Serialize;

use crate::ratings::{CouplingMatrix, ModelParams, TendencyDistribution, TransitionMatrix};
use crate::rng::RandomSource;

use super::counts::{count_transitions, RatingPanel, TransitionCounts};
use super::likelihood::PreparedLikelihood;
use super::optimizer::{maximize, OptimizerConfig};
use super::repair::{repair_tendency, REPAIR_TOLERANCE};
use super::EstimationError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnidentifiedCell {
    pub class: usize,
    pub sector: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    /// DE generations summed over restarts.
    pub iterations: usize,
    pub evaluations: usize,
    pub restarts: usize,
    /// Restart that produced the reported optimum.
    pub best_restart: usize,
    /// Set when some restart hit its generation budget before the
    /// population collapsed. Informational only.
    pub budget_exhausted: bool,
    /// Worst absolute deviation of total mass or a χ marginal from its target.
    pub constraint_residual: f64,
    /// Observed transitions per (class, sector), row-major M×S.
    pub cell_transitions: Vec<Vec<u64>>,
    /// Cells without any observed transition; their q is arbitrary.
    pub unidentified: Vec<UnidentifiedCell>,
    /// Best objective per generation, one series per restart.
    pub history: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EstimationResult {
    pub params: ModelParams,
    pub loglik: f64,
    pub diagnostics: Diagnostics,
}

#[derive(Serialize)]
struct ResultDocument<'a> {
    #[serde(rename = "M")]
    m: usize,
    #[serde(rename = "S")]
    s: usize,
    #[serde(rename = "Q")]
    q: &'a [Vec<f64>],
    chi: &'a [f64],
    loglik: f64,
    diagnostics: &'a Diagnostics,
}

impl EstimationResult {
    /// JSON with fitted Q, chi, loglik and diagnostics. The per-generation
    /// history is included.
    pub fn to_json(&self) -> String {
        let doc = ResultDocument {
            m: self.params.m(),
            s: self.params.sectors,
            q: self.params.q.rows(),
            chi: self.params.chi.masses(),
            loglik: self.loglik,
            diagnostics: &self.diagnostics,
        };
        serde_json::to_string_pretty(&doc).expect("result serializes")
    }

    pub fn is_identified(&self, class: usize, sector: usize) -> bool {
        !self
            .diagnostics
            .unidentified
            .iter()
            .any(|c| c.class == class && c.sector == sector)
    }
}

/// Splits a search vector into (Q, repaired P_χ).
fn decode(
    x: &[f64],
    m: usize,
    sectors: usize,
    p_plus: &[f64],
) -> Result<(CouplingMatrix, TendencyDistribution), EstimationError> {
    let q: Vec<Vec<f64>> = (0..m)
        .map(|i| x[i * sectors..(i + 1) * sectors].iter().map(|v| v.clamp(0.0, 1.0)).collect())
        .collect();
    let chi = repair_tendency(&x[m * sectors..], p_plus)?;
    Ok((CouplingMatrix::new(q)?, chi))
}

/// Fits (Q, P_χ) by maximizing L′ with differential evolution at fixed P.
///
/// Every candidate has Q clamped to [0,1] and its tendency weights repaired
/// onto the marginal constraints before evaluation, so the reported optimum is
/// always feasible. Restart r uses the sub-seed `child(r)` of `config.seed`.
pub fn estimate_parameters(
    panel: &RatingPanel,
    p: &TransitionMatrix,
    config: &OptimizerConfig,
) -> Result<EstimationResult, EstimationError> {
    config.validate().map_err(EstimationError::Config)?;
    if p.m() != panel.m() {
        return Err(EstimationError::Panel(format!(
            "panel has M = {}, transition matrix has M = {}",
            panel.m(),
            p.m()
        )));
    }
    let counts = count_transitions(panel);
    estimate_from_counts(&counts, p, config)
}

pub(crate) fn estimate_from_counts(
    counts: &TransitionCounts,
    p: &TransitionMatrix,
    config: &OptimizerConfig,
) -> Result<EstimationResult, EstimationError> {
    let m = counts.m();
    let sectors = counts.n_sectors();
    let p_plus: Vec<f64> = (1..=m).map(|i| p.p_plus(i)).collect();
    if p_plus.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
        return Err(EstimationError::Infeasible(format!(
            "p_plus {p_plus:?} must lie strictly inside (0,1)"
        )));
    }
    let prepared = PreparedLikelihood::new(counts, p);
    let objective = |x: &[f64]| -> f64 {
        let Ok((q, chi)) = decode(x, m, sectors, &p_plus) else {
            return f64::NEG_INFINITY;
        };
        let value = match prepared.eval(&q, &chi) {
            Ok(v) => v,
            Err(_) => return f64::NEG_INFINITY,
        };
        let residual = chi.constraint_residual(&p_plus);
        if residual > REPAIR_TOLERANCE {
            value - config.penalty * residual
        } else {
            value
        }
    };
    let bounds = vec![(0.0, 1.0); super::optimizer_dimension(m, sectors)];
    let root = RandomSource::new(config.seed);

    let mut best: Option<(usize, super::optimizer::DeOutcome)> = None;
    let mut iterations = 0;
    let mut evaluations = 0;
    let mut budget_exhausted = false;
    let mut history = Vec::with_capacity(config.restarts);
    for r in 0..config.restarts {
        let out = maximize(&objective, &bounds, config, root.child(r as u64));
        iterations += out.generations;
        evaluations += out.evaluations;
        budget_exhausted |= !out.converged;
        history.push(out.history.clone());
        if best.as_ref().map_or(true, |(_, b)| out.best_value > b.best_value) {
            best = Some((r, out));
        }
    }
    let (best_restart, out) = best.expect("at least one restart");
    let (q, chi) = decode(&out.best, m, sectors, &p_plus)?;
    let loglik = prepared.eval(&q, &chi)?;
    let constraint_residual = chi.constraint_residual(&p_plus);
    let params = ModelParams::new(p.clone(), q, chi)?;

    let cell_transitions: Vec<Vec<u64>> = (1..=m)
        .map(|i| (1..=sectors).map(|s| counts.cell_total(i, s)).collect())
        .collect();
    let unidentified = cell_transitions
        .iter()
        .enumerate()
        .flat_map(|(i, row)| {
            row.iter().enumerate().filter(|(_, &c)| c == 0).map(move |(s, _)| UnidentifiedCell {
                class: i + 1,
                sector: s + 1,
            })
        })
        .collect();

    Ok(EstimationResult {
        params,
        loglik,
        diagnostics: Diagnostics {
            iterations,
            evaluations,
            restarts: config.restarts,
            best_restart,
            budget_exhausted,
            constraint_residual,
            cell_transitions,
            unidentified,
            history,
        },
    })
}
