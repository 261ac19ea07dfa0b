//! Monte Carlo scenario sets of joint yearly rating paths.

mod storage;

use rayon::prelude::*;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ratings::{FirmState, JointSampler, ModelError, ModelParams, RatingClass};
use crate::rng::RandomSource;

pub use storage::{export_csv, from_bytes, load, save, to_bytes, ScenarioMetadata, MAGIC};

#[derive(Debug, Error)]
pub enum SimulationError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("unknown firm index {0}")]
    UnknownFirm(usize),
    #[error("invalid scenario set: {0}")]
    Invalid(String),
    #[error("malformed scenario file at byte {offset}: {detail}")]
    Malformed { offset: u64, detail: String },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// Hex SHA-256 of a parameter set's canonical JSON.
pub fn params_fingerprint(params: &ModelParams) -> String {
    sha256_hex(params.to_json().as_bytes())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Equally weighted joint rating paths. Cell (s, t, n) is firm n's class at
/// year t of scenario s, with t = 0 holding the initial states.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    m: usize,
    horizon: usize,
    firms: Vec<FirmState>,
    firm_ids: Vec<String>,
    paths: Vec<RatingClass>,
    seed: u64,
    fingerprint: String,
}

impl ScenarioSet {
    /// Assembles and validates a scenario set from raw parts.
    pub fn from_parts(
        m: usize,
        horizon: usize,
        firms: Vec<FirmState>,
        firm_ids: Vec<String>,
        paths: Vec<RatingClass>,
        seed: u64,
        fingerprint: String,
    ) -> Result<Self, SimulationError> {
        let set = Self {
            m,
            horizon,
            firms,
            firm_ids,
            paths,
            seed,
            fingerprint,
        };
        set.validate()?;
        Ok(set)
    }

    /// Checks shape, class ranges, initial states and absorption.
    pub fn validate(&self) -> Result<(), SimulationError> {
        let n = self.firms.len();
        let stride = (self.horizon + 1) * n;
        if self.firm_ids.len() != n {
            return Err(SimulationError::Invalid(format!("{} ids for {n} firms", self.firm_ids.len())));
        }
        if n == 0 || stride == 0 || self.paths.len() % stride != 0 {
            return Err(SimulationError::Invalid(format!(
                "{} cells do not divide into scenarios of {n} firms × {} periods",
                self.paths.len(),
                self.horizon + 1
            )));
        }
        let default = (self.m + 1) as RatingClass;
        for (k, f) in self.firms.iter().enumerate() {
            if f.rating == 0 || f.rating > default {
                return Err(SimulationError::Invalid(format!("firm {k} starts in class {}", f.rating)));
            }
        }
        for (s, path) in self.paths.chunks(stride).enumerate() {
            for (k, f) in self.firms.iter().enumerate() {
                if path[k] != f.rating {
                    return Err(SimulationError::Invalid(format!(
                        "scenario {s} firm {k} starts at {} instead of {}",
                        path[k], f.rating
                    )));
                }
                let mut defaulted = false;
                for t in 0..=self.horizon {
                    let c = path[t * n + k];
                    if c == 0 || c > default {
                        return Err(SimulationError::Invalid(format!("scenario {s} t={t} firm {k}: class {c}")));
                    }
                    if defaulted && c != default {
                        return Err(SimulationError::Invalid(format!(
                            "scenario {s} firm {k} leaves default at t={t}"
                        )));
                    }
                    defaulted = c == default;
                }
            }
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn n_scenarios(&self) -> usize {
        self.paths.len() / ((self.horizon + 1) * self.firms.len())
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn n_firms(&self) -> usize {
        self.firms.len()
    }

    pub fn firms(&self) -> &[FirmState] {
        &self.firms
    }

    pub fn firm_ids(&self) -> &[String] {
        &self.firm_ids
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    /// Flat payload in scenario, time, firm order.
    pub fn cells(&self) -> &[RatingClass] {
        &self.paths
    }

    pub fn rating(&self, scenario: usize, t: usize, firm: usize) -> RatingClass {
        let n = self.firms.len();
        self.paths[(scenario * (self.horizon + 1) + t) * n + firm]
    }

    /// One scenario's cells, `(T + 1) × N`, time-major.
    pub fn scenario(&self, s: usize) -> &[RatingClass] {
        let stride = (self.horizon + 1) * self.firms.len();
        &self.paths[s * stride..(s + 1) * stride]
    }

    /// The first `k` scenarios as their own set.
    pub fn truncated(&self, k: usize) -> ScenarioSet {
        let stride = (self.horizon + 1) * self.firms.len();
        let mut out = self.clone();
        out.paths.truncate(k.min(self.n_scenarios()) * stride);
        out
    }
}

/// Simulates `n_scenarios` paths of `horizon` years.
///
/// Scenario s draws from substream s of `seed`, so results do not depend on
/// thread count and the first k scenarios do not depend on `n_scenarios`.
pub fn simulate(
    params: &ModelParams,
    initial: &[FirmState],
    horizon: usize,
    n_scenarios: usize,
    seed: u64,
) -> Result<ScenarioSet, SimulationError> {
    if horizon == 0 {
        return Err(SimulationError::Invalid("horizon must be at least 1".into()));
    }
    if initial.is_empty() {
        return Err(SimulationError::Invalid("no firms".into()));
    }
    for f in initial {
        params.check_state(f)?;
    }
    let ids = (0..initial.len()).map(|k| format!("firm{k}")).collect();
    simulate_named(params, initial, ids, horizon, n_scenarios, seed)
}

/// As [`simulate`], with caller-supplied firm identifiers.
pub fn simulate_named(
    params: &ModelParams,
    initial: &[FirmState],
    firm_ids: Vec<String>,
    horizon: usize,
    n_scenarios: usize,
    seed: u64,
) -> Result<ScenarioSet, SimulationError> {
    let n = initial.len();
    let stride = (horizon + 1) * n;
    let sampler = JointSampler::new(params);
    let sectors: Vec<usize> = initial.iter().map(|f| f.sector).collect();
    let source = RandomSource::new(seed);
    let mut paths = vec![0 as RatingClass; n_scenarios * stride];
    let results: Vec<Result<(), ModelError>> = paths
        .par_chunks_mut(stride.max(1))
        .enumerate()
        .map(|(s, path)| {
            let mut rng = source.stream(s as u64);
            for (cell, f) in path[..n].iter_mut().zip(initial) {
                *cell = f.rating;
            }
            for t in 1..=horizon {
                let (done, rest) = path.split_at_mut(t * n);
                let current = &mut rest[..n];
                current.copy_from_slice(&done[(t - 1) * n..]);
                sampler.step_in_place(current, &sectors, &mut rng)?;
            }
            Ok(())
        })
        .collect();
    for r in results {
        r?;
    }
    Ok(ScenarioSet {
        m: params.m(),
        horizon,
        firms: initial.to_vec(),
        firm_ids,
        paths,
        seed,
        fingerprint: params_fingerprint(params),
    })
}

/// Cumulative defaults D^t among `members` for every scenario, t = 0..=T.
pub fn default_counts(set: &ScenarioSet, members: &[usize]) -> Result<Vec<Vec<u32>>, SimulationError> {
    if let Some(&bad) = members.iter().find(|&&k| k >= set.n_firms()) {
        return Err(SimulationError::UnknownFirm(bad));
    }
    let default = (set.m + 1) as RatingClass;
    let n = set.n_firms();
    Ok((0..set.n_scenarios())
        .map(|s| {
            let cells = set.scenario(s);
            (0..=set.horizon)
                .map(|t| members.iter().filter(|&&k| cells[t * n + k] == default).count() as u32)
                .collect()
        })
        .collect())
}
