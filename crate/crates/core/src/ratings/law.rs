//! Exact one-step transition law of the coupled chain.

use super::params::{
    tendency_bit, FirmState, ModelParams, RatingClass, TendencyVector, TransitionMatrix,
};
use super::ModelError;

/// Enumeration guards for [`joint_step_probability`].
pub const ORACLE_MAX_CLASSES: usize = 6;
pub const ORACLE_MAX_FIRMS: usize = 12;

/// p_plus[i] = Σ_{j ≤ i} p_{i,j} for every non-default class.
pub fn tendency_probabilities(p: &TransitionMatrix) -> Vec<f64> {
    (1..=p.m()).map(|i| p.p_plus(i)).collect()
}

/// Law of the systematic component given the tendency of its class.
///
/// Returns a vector of length `M + 1` (index `j - 1` holds class `j`).
/// With `non_deteriorating` the mass sits on classes `j ≤ i`, otherwise on `j > i`.
pub fn conditional_magnitude(
    p: &TransitionMatrix,
    from_class: usize,
    non_deteriorating: bool,
) -> Result<Vec<f64>, ModelError> {
    let row = p.row(from_class);
    let norm = if non_deteriorating {
        p.p_plus(from_class)
    } else {
        p.p_minus(from_class)
    };
    if !(norm > 0.0) {
        return Err(ModelError::DegenerateTendency {
            class: from_class,
            tendency: non_deteriorating,
        });
    }
    Ok(row
        .iter()
        .enumerate()
        .map(|(k, &x)| {
            let allowed = (k + 1 <= from_class) == non_deteriorating;
            if allowed {
                x / norm
            } else {
                0.0
            }
        })
        .collect())
}

/// P(firm defaults this period | χ): the Bernoulli-mixture influence function.
pub fn mixture_default_probability(
    params: &ModelParams,
    state: FirmState,
    chi: TendencyVector,
) -> Result<f64, ModelError> {
    params.check_state(&state)?;
    let m = state.rating as usize;
    if m == params.m() + 1 {
        return Ok(1.0);
    }
    let pd = params.p.default_probability(m);
    let q = params.q.get(m, state.sector);
    let mut prob = pd * q;
    if !tendency_bit(chi, m) && q < 1.0 {
        let p_minus = params.p.p_minus(m);
        if !(p_minus > 0.0) {
            return Err(ModelError::DegenerateTendency {
                class: m,
                tendency: false,
            });
        }
        prob += (1.0 - q) * pd / p_minus;
    }
    Ok(prob)
}

/// Exact probability of a joint one-step outcome, by enumerating every
/// tendency vector χ̄ and every switch vector δ̄.
///
/// Brute force by construction; intended as a test oracle for small M and N.
pub fn joint_step_probability(
    params: &ModelParams,
    states: &[FirmState],
    outcomes: &[RatingClass],
) -> Result<f64, ModelError> {
    let m = params.m();
    if m > ORACLE_MAX_CLASSES || states.len() > ORACLE_MAX_FIRMS {
        return Err(ModelError::TooLarge {
            classes: m,
            firms: states.len(),
        });
    }
    if states.len() != outcomes.len() {
        return Err(ModelError::State(format!(
            "{} states but {} outcomes",
            states.len(),
            outcomes.len()
        )));
    }
    let default = params.default_class();
    for (s, &o) in states.iter().zip(outcomes) {
        params.check_state(s)?;
        if o == 0 || o > default {
            return Err(ModelError::State(format!("outcome class {o} out of range")));
        }
        if s.rating == default && o != default {
            return Ok(0.0);
        }
    }
    // Defaulted firms are certain to stay put and carry no switch variable.
    let live: Vec<(FirmState, usize)> = states
        .iter()
        .zip(outcomes)
        .filter(|(s, _)| s.rating != default)
        .map(|(s, &o)| (*s, o as usize))
        .collect();

    let mut total = 0.0;
    for chi in 0..(1u32 << m) {
        let w = params.chi.mass(chi);
        if w == 0.0 {
            continue;
        }
        let mut sum_delta = 0.0;
        for delta in 0..(1u32 << live.len()) {
            let mut prod = 1.0;
            for (n, &(state, outcome)) in live.iter().enumerate() {
                let from = state.rating as usize;
                let q = params.q.get(from, state.sector);
                if (delta >> n) & 1 == 1 {
                    prod *= q * params.p.get(from, outcome);
                } else {
                    let w_eta = 1.0 - q;
                    if w_eta == 0.0 {
                        prod = 0.0;
                    } else {
                        let cond = conditional_magnitude(&params.p, from, tendency_bit(chi, from))?;
                        prod *= w_eta * cond[outcome - 1];
                    }
                }
                if prod == 0.0 {
                    break;
                }
            }
            sum_delta += prod;
        }
        total += w * sum_delta;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::presets;
    use crate::ratings::{CouplingMatrix, TendencyDistribution};

    fn two_state(q: f64) -> ModelParams {
        let p = TransitionMatrix::new(vec![vec![0.8, 0.2]]).unwrap();
        let chi = TendencyDistribution::independent(&[0.8]);
        ModelParams::new(p, CouplingMatrix::uniform(1, 1, q), chi).unwrap()
    }

    #[test]
    fn p_plus_of_published_matrix() {
        let p = presets::published_p();
        let pp = tendency_probabilities(&p);
        // printed to 4 decimals; rows renormalized
        assert!((pp[0] - 0.9191).abs() < 1e-4);
        assert!((pp[1] - (0.0335 + 0.8958)).abs() < 1e-4);
    }

    #[test]
    fn p_plus_identity() {
        let p = TransitionMatrix::identity(4);
        assert!(tendency_probabilities(&p).iter().all(|&x| x == 1.0));
    }

    #[test]
    fn magnitude_top_class_up_is_unit_mass() {
        let p = presets::published_p();
        let d = conditional_magnitude(&p, 1, true).unwrap();
        assert_eq!(d[0], 1.0);
        assert!(d[1..].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn magnitude_down_is_row_tail_normalized() {
        let p = presets::published_p();
        let d = conditional_magnitude(&p, 2, false).unwrap();
        let tail = [0.0657, 0.0036, 0.0006, 0.0009];
        let tail_sum: f64 = tail.iter().sum();
        assert_eq!(d[0], 0.0);
        assert_eq!(d[1], 0.0);
        for (k, &t) in tail.iter().enumerate() {
            assert!((d[k + 2] - t / tail_sum).abs() < 1e-12);
        }
        assert!((d.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn magnitude_degenerate() {
        let p = TransitionMatrix::identity(3);
        assert!(matches!(
            conditional_magnitude(&p, 2, false),
            Err(ModelError::DegenerateTendency { class: 2, tendency: false })
        ));
    }

    #[test]
    fn mixture_default_cases() {
        let params = two_state(0.5);
        let s = FirmState::new(1, 1);
        // 0.2 * 0.5 + 0.5 * 0.2 / 0.2
        assert!((mixture_default_probability(&params, s, 0).unwrap() - 0.6).abs() < 1e-15);
        assert!((mixture_default_probability(&params, s, 1).unwrap() - 0.1).abs() < 1e-15);
        let params = two_state(1.0);
        for chi in 0..2 {
            assert_eq!(mixture_default_probability(&params, s, chi).unwrap(), 0.2);
        }
        let dead = FirmState::new(2, 1);
        assert_eq!(mixture_default_probability(&params, dead, 0).unwrap(), 1.0);
    }

    #[test]
    fn single_firm_oracle_is_p_row() {
        let params = two_state(0.3);
        let s = [FirmState::new(1, 1)];
        assert!((joint_step_probability(&params, &s, &[1]).unwrap() - 0.8).abs() < 1e-15);
        assert!((joint_step_probability(&params, &s, &[2]).unwrap() - 0.2).abs() < 1e-15);
    }

    #[test]
    fn oracle_guards() {
        let params = two_state(0.3);
        let s = vec![FirmState::new(1, 1); 13];
        let o = vec![1; 13];
        assert!(matches!(
            joint_step_probability(&params, &s, &o),
            Err(ModelError::TooLarge { .. })
        ));
    }
}
