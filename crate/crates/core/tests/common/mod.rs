//! Independent oracles and random instance generators shared by the
//! integration tests and the acceptance harness. Nothing here calls the
//! library routine it is meant to check.
#![allow(dead_code)]

use cmc_core::estimation::{repair_tendency, RatingPanel};
use cmc_core::ratings::{CouplingMatrix, FirmState, ModelParams, RatingClass, TransitionMatrix};
use cmc_core::rng::Stream;

/// Random valid parameters with every entry of P strictly positive.
pub fn random_params(rng: &mut Stream, m: usize, s: usize) -> ModelParams {
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|_| {
            let raw: Vec<f64> = (0..=m).map(|_| 0.05 + rng.uniform()).collect();
            let total: f64 = raw.iter().sum();
            raw.iter().map(|v| v / total).collect()
        })
        .collect();
    let p = TransitionMatrix::normalized(rows).unwrap();
    let q = CouplingMatrix::new((0..m).map(|_| (0..s).map(|_| rng.uniform()).collect()).collect()).unwrap();
    let p_plus: Vec<f64> = (1..=m).map(|i| p.p_plus(i)).collect();
    let raw: Vec<f64> = (0..1usize << m).map(|_| 0.01 + rng.uniform()).collect();
    let chi = repair_tendency(&raw, &p_plus).unwrap();
    ModelParams::new(p, q, chi).unwrap()
}

/// Random panel respecting absorption; with `mask_rate > 0` some cells are
/// unobserved.
pub fn random_panel(rng: &mut Stream, m: usize, s: usize, n: usize, t: usize, mask_rate: f64) -> RatingPanel {
    let default = (m + 1) as RatingClass;
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let mut row = Vec::with_capacity(t);
        let mut current = (rng.below(m) + 1) as RatingClass;
        for k in 0..t {
            if k > 0 && current != default {
                current = (rng.below(m + 1) + 1) as RatingClass;
            }
            row.push(current);
        }
        let row = row
            .into_iter()
            .map(|c| if rng.uniform() < mask_rate { None } else { Some(c) })
            .collect();
        rows.push(row);
    }
    let sectors = (0..n).map(|_| rng.below(s) + 1).collect();
    RatingPanel::new(m, s, rows, sectors).unwrap()
}

/// P(firm in class i moves to j | χ_i = bit), straight from the model
/// statement: η moves up/stays with probability proportional to P's row on
/// j ≤ i when the bit is 1, and down proportional to j > i when it is 0.
fn eta_given_chi(p: &TransitionMatrix, i: usize, j: usize, bit: bool) -> f64 {
    let row = p.row(i);
    let up: f64 = row[..i].iter().sum();
    if bit {
        if j <= i {
            row[j - 1] / up
        } else {
            0.0
        }
    } else if j > i {
        row[j - 1] / (1.0 - up)
    } else {
        0.0
    }
}

/// Exact P(outcomes | states) by summing over every χ̄ ∈ {0,1}^M and every
/// δ̄ ∈ {0,1}^N with explicit products.
pub fn brute_step_probability(params: &ModelParams, states: &[FirmState], outcomes: &[RatingClass]) -> f64 {
    let m = params.m();
    let n = states.len();
    let default = (m + 1) as RatingClass;
    let mut total = 0.0;
    for chi in 0..1usize << m {
        let pchi = params.chi.masses()[chi];
        if pchi == 0.0 {
            continue;
        }
        let mut given_chi = 0.0;
        for delta in 0..1usize << n {
            let mut prob = 1.0;
            for k in 0..n {
                let (from, to) = (states[k].rating, outcomes[k]);
                if from == default {
                    // absorbed: no switch is drawn, so only δ_k = 0 is counted
                    if to != default || delta >> k & 1 == 1 {
                        prob = 0.0;
                    }
                    continue;
                }
                let i = from as usize;
                let q = params.q.get(i, states[k].sector);
                let idio = delta >> k & 1 == 1;
                prob *= if idio {
                    q * params.p.get(i, to as usize)
                } else {
                    (1.0 - q) * eta_given_chi(&params.p, i, to as usize, chi >> (i - 1) & 1 == 1)
                };
            }
            given_chi += prob;
        }
        total += pchi * given_chi;
    }
    total
}

/// Probability of every observed transition in the panel, firms with a
/// masked endpoint left out of that period.
pub fn brute_path_probability(params: &ModelParams, panel: &RatingPanel) -> f64 {
    let mut prob = 1.0;
    for t in 1..panel.horizon() {
        let mut states = Vec::new();
        let mut outcomes = Vec::new();
        for n in 0..panel.n_firms() {
            if let (Some(a), Some(b)) = (panel.ratings()[n][t - 1], panel.ratings()[n][t]) {
                states.push(FirmState::new(a, panel.sectors()[n]));
                outcomes.push(b);
            }
        }
        if !states.is_empty() {
            prob *= brute_step_probability(params, &states, &outcomes);
        }
    }
    prob
}

/// Π p_{m1,m2}^{I} over observed non-default transitions.
pub fn p_product(params: &ModelParams, panel: &RatingPanel) -> f64 {
    let default = (params.m() + 1) as RatingClass;
    let mut prod = 1.0;
    for row in panel.ratings() {
        for w in row.windows(2) {
            if let (Some(a), Some(b)) = (w[0], w[1]) {
                if a != default {
                    prod *= params.p.get(a as usize, b as usize);
                }
            }
        }
    }
    prod
}

/// min over a of a + Σ(L − a)⁺ / ((1 − α) n), scanning every sample as a
/// candidate for a (the minimizer is always one of them).
pub fn ru_scan_cvar(losses: &[f64], alpha: f64) -> f64 {
    let c = 1.0 / ((1.0 - alpha) * losses.len() as f64);
    losses
        .iter()
        .map(|&a| a + c * losses.iter().map(|l| (l - a).max(0.0)).sum::<f64>())
        .fold(f64::INFINITY, f64::min)
}

/// Exact minimum of CVaR over three assets with Σw = 1, box bounds and
/// m·w ≥ μ. In (w1, w2) coordinates CVaR is piecewise linear with kinks only
/// where two scenario losses tie, so the minimum sits on a vertex of the
/// arrangement of those tie lines and the constraint lines.
pub fn three_asset_oracle(returns: &[Vec<f64>], mu: f64, lo: f64, hi: f64, alpha: f64) -> Option<(f64, [f64; 3])> {
    assert_eq!(returns.len(), 3);
    let n = returns[0].len();
    let means: Vec<f64> = returns.iter().map(|r| r.iter().sum::<f64>() / n as f64).collect();
    // lines a·w1 + b·w2 = c with w3 = 1 − w1 − w2 substituted
    let mut lines: Vec<(f64, f64, f64)> = Vec::new();
    for bound in [lo, hi] {
        lines.push((1.0, 0.0, bound));
        lines.push((0.0, 1.0, bound));
        lines.push((1.0, 1.0, 1.0 - bound));
    }
    lines.push((means[0] - means[2], means[1] - means[2], mu - means[2]));
    let loss = |s: usize| (-(returns[0][s] - returns[2][s]), -(returns[1][s] - returns[2][s]), returns[2][s]);
    for s in 0..n {
        for r in s + 1..n {
            let (a1, b1, c1) = loss(s);
            let (a2, b2, c2) = loss(r);
            lines.push((a1 - a2, b1 - b2, (c1 - c2)));
        }
    }
    let feasible = |w: [f64; 3]| {
        let eps = 1e-9;
        w.iter().all(|&x| x >= lo - eps && x <= hi + eps)
            && means.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() >= mu - eps
    };
    let cvar = |w: [f64; 3]| {
        let losses: Vec<f64> = (0..n).map(|s| -(0..3).map(|j| w[j] * returns[j][s]).sum::<f64>()).collect();
        ru_scan_cvar(&losses, alpha)
    };
    let mut best: Option<(f64, [f64; 3])> = None;
    for (k, &(a1, b1, c1)) in lines.iter().enumerate() {
        for &(a2, b2, c2) in &lines[k + 1..] {
            let det = a1 * b2 - a2 * b1;
            if det.abs() < 1e-12 {
                continue;
            }
            let w1 = (c1 * b2 - c2 * b1) / det;
            let w2 = (a1 * c2 - a2 * c1) / det;
            let w = [w1, w2, 1.0 - w1 - w2];
            if feasible(w) {
                let v = cvar(w);
                if best.is_none_or(|(b, _)| v < b) {
                    best = Some((v, w));
                }
            }
        }
    }
    best
}
