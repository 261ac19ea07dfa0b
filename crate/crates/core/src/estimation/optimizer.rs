//! Differential evolution (rand/1/bin) for box-constrained maximization.
//!
//! Trial vectors for a generation are drawn sequentially from the driver's
//! stream and then scored in parallel, so results do not depend on thread
//! scheduling.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::{RandomSource, Stream};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimizerConfig {
    /// Population size; 0 picks `max(10 · dim, 40)`.
    pub population: usize,
    /// Generation budget per restart.
    pub max_generations: usize,
    /// Independent restarts, each from its own sub-seed.
    pub restarts: usize,
    pub seed: u64,
    /// Weight on the tendency-constraint residual subtracted from the
    /// objective when repair leaves one above tolerance.
    pub penalty: f64,
    /// Stop when the population's objective spread falls below
    /// `tolerance · (1 + |best|)`.
    pub tolerance: f64,
    pub differential_weight: f64,
    pub crossover: f64,
    /// Compass-search refinement of the final best point.
    pub polish: bool,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            population: 0,
            max_generations: 1500,
            restarts: 2,
            seed: 20090101,
            penalty: 1e6,
            tolerance: 1e-10,
            differential_weight: 0.6,
            crossover: 0.9,
            polish: true,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.max_generations == 0 || self.restarts == 0 {
            return Err("optimizer budgets must be positive".into());
        }
        if !(self.tolerance > 0.0) {
            return Err("optimizer tolerance must be > 0".into());
        }
        if !(self.differential_weight > 0.0 && self.differential_weight <= 2.0) {
            return Err("differential_weight must lie in (0, 2]".into());
        }
        if !(0.0..=1.0).contains(&self.crossover) {
            return Err("crossover must lie in [0, 1]".into());
        }
        if self.population != 0 && self.population < 4 {
            return Err("population must be 0 (auto) or at least 4".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeOutcome {
    pub best: Vec<f64>,
    pub best_value: f64,
    pub generations: usize,
    pub evaluations: usize,
    pub converged: bool,
    /// Best objective after each generation (including generation 0).
    pub history: Vec<f64>,
}

#[inline]
fn score(v: f64) -> f64 {
    if v.is_nan() {
        f64::NEG_INFINITY
    } else {
        v
    }
}

/// Maximizes `objective` over the box `bounds` from one seed.
pub fn maximize<F>(objective: &F, bounds: &[(f64, f64)], config: &OptimizerConfig, source: RandomSource) -> DeOutcome
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let dim = bounds.len();
    let np = if config.population == 0 {
        (10 * dim).max(40)
    } else {
        config.population
    };
    let mut rng = source.stream(0);
    let mut pop: Vec<Vec<f64>> = (0..np)
        .map(|_| bounds.iter().map(|&(lo, hi)| lo + (hi - lo) * rng.uniform()).collect())
        .collect();
    let mut fit: Vec<f64> = pop.par_iter().map(|x| score(objective(x))).collect();
    let mut evaluations = np;
    let mut best_idx = argmax(&fit);
    let mut history = vec![fit[best_idx]];
    let mut converged = false;
    let mut generations = 0;

    while generations < config.max_generations {
        if spread(&fit) <= config.tolerance * (1.0 + fit[best_idx].abs()) {
            converged = true;
            break;
        }
        generations += 1;
        let trials: Vec<Vec<f64>> = (0..np)
            .map(|i| trial_vector(&pop, i, bounds, config, &mut rng))
            .collect();
        let trial_fit: Vec<f64> = trials.par_iter().map(|x| score(objective(x))).collect();
        evaluations += np;
        for (i, (x, f)) in trials.into_iter().zip(trial_fit).enumerate() {
            if f >= fit[i] {
                pop[i] = x;
                fit[i] = f;
            }
        }
        best_idx = argmax(&fit);
        history.push(fit[best_idx]);
    }

    let mut best = pop[best_idx].clone();
    let mut best_value = fit[best_idx];
    if config.polish {
        let (x, v, evals) = compass_search(objective, best, best_value, bounds);
        best = x;
        best_value = v;
        evaluations += evals;
        history.push(best_value);
    }
    DeOutcome {
        best,
        best_value,
        generations,
        evaluations,
        converged,
        history,
    }
}

fn trial_vector(
    pop: &[Vec<f64>],
    i: usize,
    bounds: &[(f64, f64)],
    config: &OptimizerConfig,
    rng: &mut Stream,
) -> Vec<f64> {
    let np = pop.len();
    let dim = bounds.len();
    let r1 = loop {
        let r = rng.below(np);
        if r != i {
            break r;
        }
    };
    let r2 = loop {
        let r = rng.below(np);
        if r != i && r != r1 {
            break r;
        }
    };
    let r0 = loop {
        let r = rng.below(np);
        if r != i && r != r1 && r != r2 {
            break r;
        }
    };
    let f = config.differential_weight;
    let forced = rng.below(dim);
    (0..dim)
        .map(|j| {
            let cross = rng.uniform() < config.crossover || j == forced;
            if !cross {
                return pop[i][j];
            }
            let v = pop[r0][j] + f * (pop[r1][j] - pop[r2][j]);
            let (lo, hi) = bounds[j];
            // out-of-box components land between the parent and the violated bound
            if v < lo {
                lo + rng.uniform() * (pop[i][j] - lo)
            } else if v > hi {
                hi - rng.uniform() * (hi - pop[i][j])
            } else {
                v
            }
        })
        .collect()
}

/// Coordinate-wise pattern search with halving steps.
fn compass_search<F>(objective: &F, mut x: Vec<f64>, mut fx: f64, bounds: &[(f64, f64)]) -> (Vec<f64>, f64, usize)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let mut step = 0.05;
    let mut evals = 0;
    while step > 1e-10 && evals < 200_000 {
        let mut improved = false;
        for j in 0..x.len() {
            for dir in [1.0, -1.0] {
                let (lo, hi) = bounds[j];
                let cand_j = (x[j] + dir * step).clamp(lo, hi);
                if cand_j == x[j] {
                    continue;
                }
                let old = x[j];
                x[j] = cand_j;
                let f = score(objective(&x));
                evals += 1;
                if f > fx {
                    fx = f;
                    improved = true;
                    break;
                }
                x[j] = old;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    (x, fx, evals)
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn spread(v: &[f64]) -> f64 {
    let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
    if min == f64::NEG_INFINITY {
        f64::INFINITY
    } else {
        max - min
    }
}
