//! Coupled Markov chain model of joint rating transitions.
//!
//! Each firm moves as `X = δ·ξ + (1 − δ)·η`: with probability `q[m][s]` it
//! follows an idiosyncratic draw ξ from its row of `P`, otherwise a
//! systematic draw η whose direction (up/stay vs. down) is set by the
//! tendency variable χ_m shared by every firm currently in class `m`.

mod law;
mod params;
mod sampler;

use thiserror::Error;

pub use law::{
    conditional_magnitude, joint_step_probability, mixture_default_probability,
    tendency_probabilities, ORACLE_MAX_CLASSES, ORACLE_MAX_FIRMS,
};
pub use params::{
    tendency_bit, CouplingMatrix, FirmState, ModelParams, RatingClass, RatingScale,
    TendencyDistribution, TendencyVector, Tolerances, TransitionMatrix, Violation, MAX_CLASSES,
};
pub use sampler::{step_joint, JointSampler};

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("degenerate tendency: class {class} has zero probability of tendency {}", if *.tendency { "up" } else { "down" })]
    DegenerateTendency { class: usize, tendency: bool },
    #[error("enumeration too large: M = {classes}, N = {firms}")]
    TooLarge { classes: usize, firms: usize },
    #[error("invalid parameters: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("bad firm state: {0}")]
    State(String),
    #[error("params json: {0}")]
    Json(#[from] serde_json::Error),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// Parameter validation as a report. Callers treat a non-empty report as fatal.
pub fn validate(params: &ModelParams) -> Vec<Violation> {
    params.validate()
}
