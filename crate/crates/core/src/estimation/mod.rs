//! Maximum-likelihood estimation of (Q, P_χ) for a fixed transition matrix P.

mod counts;
mod fit;
mod likelihood;
mod optimizer;
mod repair;

use thiserror::Error;

use crate::ratings::ModelError;

pub use counts::{count_transitions, estimate_transition_matrix, RatingPanel, TransitionCounts};
pub use fit::{estimate_parameters, Diagnostics, EstimationResult, UnidentifiedCell};
pub use likelihood::{group_factor, log_likelihood, log_likelihood_counts, log_sum_exp, PreparedLikelihood};
pub use optimizer::{maximize, DeOutcome, OptimizerConfig};
pub use repair::{repair_tendency, REPAIR_MAX_ITERATIONS, REPAIR_TOLERANCE};

#[derive(Debug, Error)]
pub enum EstimationError {
    #[error("degenerate tendency: class {class} has zero probability of tendency {}", if *.tendency { "up" } else { "down" })]
    DegenerateTendency { class: usize, tendency: bool },
    #[error("class {0} has no observed transitions; coarsen the clubbing")]
    EmptyRow(usize),
    #[error("panel: {0}")]
    Panel(String),
    #[error("tendency repair infeasible: {0}")]
    Infeasible(String),
    #[error("optimizer config: {0}")]
    Config(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Length of the search vector: S·M coupling entries plus all 2^M raw
/// tendency weights (repair then imposes the M + 1 equality constraints).
/// For M = 5, S = 6 this is 62.
pub fn optimizer_dimension(m: usize, sectors: usize) -> usize {
    sectors * m + (1 << m)
}

/// Free parameters once the tendency constraints are imposed:
/// S·M + 2^M − (M + 1).
pub fn degrees_of_freedom(m: usize, sectors: usize) -> usize {
    optimizer_dimension(m, sectors) - (m + 1)
}
