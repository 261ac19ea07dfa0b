//! Modified log-likelihood L′ of a rating panel.
//!
//! L′ drops the factors Π p_{m1,m2}^I, which do not depend on (Q, P_χ), so it
//! has the same maximizer as the full likelihood. Impossible configurations
//! evaluate to `f64::NEG_INFINITY`.

use crate::ratings::{tendency_bit, CouplingMatrix, ModelParams, TendencyDistribution, TransitionMatrix};

use super::counts::{count_transitions, RatingPanel, TransitionCounts};
use super::EstimationError;

/// log f′ for one (t, s, m1, m2) group under tendency bit χ_{m1}.
///
/// * m1 ≥ m2, χ = 1: I · log((q(p⁺ − 1) + 1) / p⁺)
/// * m1 < m2, χ = 0: I · log((q(p⁻ − 1) + 1) / p⁻)
/// * otherwise only the idiosyncratic route is possible: I · log q
#[allow(clippy::too_many_arguments)]
pub fn group_factor(
    counts: &TransitionCounts,
    t: usize,
    s: usize,
    m1: usize,
    m2: usize,
    chi_bit: bool,
    q: &CouplingMatrix,
    p: &TransitionMatrix,
) -> Result<f64, EstimationError> {
    let i = counts.get(t, s, m1, m2);
    if i == 0 {
        return Ok(0.0);
    }
    Ok(i as f64 * log_base(m1 >= m2, chi_bit, q.get(m1, s), p, m1)?)
}

/// Log of the per-firm factor; independent of the group size.
#[inline]
fn log_base(up_move: bool, chi_bit: bool, q: f64, p: &TransitionMatrix, m1: usize) -> Result<f64, EstimationError> {
    let base = match (up_move, chi_bit) {
        (true, true) => {
            let pp = p.p_plus(m1);
            if !(pp > 0.0) {
                return Err(EstimationError::DegenerateTendency { class: m1, tendency: true });
            }
            (q * (pp - 1.0) + 1.0) / pp
        }
        (false, false) => {
            let pm = p.p_minus(m1);
            if !(pm > 0.0) {
                return Err(EstimationError::DegenerateTendency { class: m1, tendency: false });
            }
            (q * (pm - 1.0) + 1.0) / pm
        }
        _ => q,
    };
    Ok(base.ln())
}

/// Numerically stable log Σ exp(x_k); all `-inf` gives `-inf`.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    max + terms.iter().map(|&x| (x - max).exp()).sum::<f64>().ln()
}

/// L′(X; Q, P_χ) summed over periods 2..=T.
pub fn log_likelihood(panel: &RatingPanel, params: &ModelParams) -> Result<f64, EstimationError> {
    log_likelihood_counts(&count_transitions(panel), params)
}

pub fn log_likelihood_counts(counts: &TransitionCounts, params: &ModelParams) -> Result<f64, EstimationError> {
    let m = params.m();
    if counts.m() != m || counts.n_sectors() != params.sectors {
        return Err(EstimationError::Panel(format!(
            "counts are M={}, S={} but params are M={m}, S={}",
            counts.m(),
            counts.n_sectors(),
            params.sectors
        )));
    }
    let mut total = 0.0;
    let mut terms = Vec::with_capacity(1 << m);
    for t in counts.periods() {
        // log Π_{s,m2} f′ for each class and each value of its tendency bit;
        // evaluated lazily so a degenerate branch only fails if some χ̄ with
        // positive mass needs it.
        let mut by_class: Vec<[Option<Option<f64>>; 2]> = vec![[None, None]; m];
        terms.clear();
        for chi in 0..(1u32 << m) {
            let w = params.chi.mass(chi);
            if w <= 0.0 {
                continue;
            }
            let mut acc = w.ln();
            for m1 in 1..=m {
                let bit = tendency_bit(chi, m1);
                let slot = &mut by_class[m1 - 1][bit as usize];
                let value = match *slot {
                    Some(v) => v,
                    None => {
                        let v = match class_log_factor(counts, t, m1, bit, params) {
                            Ok(v) => Some(v),
                            Err(EstimationError::DegenerateTendency { .. }) => None,
                            Err(e) => return Err(e),
                        };
                        *slot = Some(v);
                        v
                    }
                };
                acc += value.ok_or(EstimationError::DegenerateTendency { class: m1, tendency: bit })?;
            }
            terms.push(acc);
        }
        total += log_sum_exp(&terms);
    }
    Ok(total)
}

fn class_log_factor(
    counts: &TransitionCounts,
    t: usize,
    m1: usize,
    bit: bool,
    params: &ModelParams,
) -> Result<f64, EstimationError> {
    let mut acc = 0.0;
    for s in 1..=params.sectors {
        for m2 in 1..=params.m() + 1 {
            acc += group_factor(counts, t, s, m1, m2, bit, &params.q, &params.p)?;
        }
    }
    Ok(acc)
}

/// Counts regrouped for fast repeated evaluation of L′ at fixed P.
///
/// Every group factor depends on m2 only through whether the move is
/// non-deteriorating, so the counts collapse to two totals per (t, s, m1).
#[derive(Debug, Clone)]
pub struct PreparedLikelihood {
    m: usize,
    n_sectors: usize,
    p: TransitionMatrix,
    /// [period][s][m1] → (non-deteriorating count, deteriorating count)
    groups: Vec<Vec<Vec<(f64, f64)>>>,
}

impl PreparedLikelihood {
    pub fn new(counts: &TransitionCounts, p: &TransitionMatrix) -> Self {
        let m = counts.m();
        let groups = counts
            .periods()
            .map(|t| {
                (1..=counts.n_sectors())
                    .map(|s| {
                        (1..=m)
                            .map(|m1| {
                                let up: u64 = (1..=m1).map(|m2| counts.get(t, s, m1, m2)).sum();
                                let down: u64 = (m1 + 1..=m + 1).map(|m2| counts.get(t, s, m1, m2)).sum();
                                (up as f64, down as f64)
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self {
            m,
            n_sectors: counts.n_sectors(),
            p: p.clone(),
            groups,
        }
    }

    pub fn eval(&self, q: &CouplingMatrix, chi: &TendencyDistribution) -> Result<f64, EstimationError> {
        let m = self.m;
        // log factors per (s, m1, bit), shared across periods
        let mut lf = vec![[(0.0f64, 0.0f64); 2]; self.n_sectors * m];
        let mut degenerate = vec![[false; 2]; m];
        for m1 in 1..=m {
            for s in 1..=self.n_sectors {
                let qv = q.get(m1, s);
                let ln_q = qv.ln();
                let up = log_base(true, true, qv, &self.p, m1);
                let down = log_base(false, false, qv, &self.p, m1);
                degenerate[m1 - 1][1] = up.is_err();
                degenerate[m1 - 1][0] = down.is_err();
                // bit 1: non-deteriorating via either route, deteriorating only via ξ
                lf[(s - 1) * m + m1 - 1][1] = (up.unwrap_or(f64::NAN), ln_q);
                // bit 0: deteriorating via either route, non-deteriorating only via ξ
                lf[(s - 1) * m + m1 - 1][0] = (ln_q, down.unwrap_or(f64::NAN));
            }
        }
        let n_chi = 1usize << m;
        let ln_w: Vec<f64> = chi.masses().iter().map(|&w| if w > 0.0 { w.ln() } else { f64::NEG_INFINITY }).collect();
        let mut terms = vec![0.0; n_chi];
        let mut class_terms = vec![[0.0f64; 2]; m];
        let mut total = 0.0;
        for period in &self.groups {
            for m1 in 0..m {
                for bit in 0..2 {
                    let mut acc = 0.0;
                    for s in 0..self.n_sectors {
                        let (up, down) = period[s][m1];
                        let (lu, ld) = lf[s * m + m1][bit];
                        if up > 0.0 {
                            acc += up * lu;
                        }
                        if down > 0.0 {
                            acc += down * ld;
                        }
                    }
                    class_terms[m1][bit] = acc;
                }
            }
            for (chi_idx, term) in terms.iter_mut().enumerate() {
                if ln_w[chi_idx] == f64::NEG_INFINITY {
                    *term = f64::NEG_INFINITY;
                    continue;
                }
                let mut acc = ln_w[chi_idx];
                for m1 in 0..m {
                    let bit = (chi_idx >> m1) & 1;
                    let v = class_terms[m1][bit];
                    if v.is_nan() && degenerate[m1][bit] {
                        return Err(EstimationError::DegenerateTendency {
                            class: m1 + 1,
                            tendency: bit == 1,
                        });
                    }
                    acc += v;
                }
                *term = acc;
            }
            total += log_sum_exp(&terms);
        }
        Ok(total)
    }
}
