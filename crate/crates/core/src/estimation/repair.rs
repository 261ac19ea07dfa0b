use nalgebra::{DMatrix, DVector};

use crate::ratings::{tendency_bit, TendencyDistribution, MAX_CLASSES};

use super::EstimationError;

/// Newton iterations allowed per projection attempt.
pub const REPAIR_MAX_ITERATIONS: usize = 100;
pub const REPAIR_TOLERANCE: f64 = 1e-8;
const REPAIR_TARGET: f64 = 1e-14;
const UNCHANGED_TOLERANCE: f64 = 1e-12;

/// Projects a raw 2^M weight vector onto {mass ≥ 0, Σ = 1, P(χ_i = 1) = p_plus[i]}.
///
/// Negative entries are clipped to zero. The result is the exponential tilt
/// x_k ∝ w_k · exp(Σ_i λ_i χ_i(k)) that meets every marginal, i.e. the
/// I-projection of w that iterative proportional fitting converges to. The
/// multipliers λ are found by damped Newton steps on the convex dual, which
/// stays fast when the fit sits near the boundary where proportional fitting
/// crawls. Zeros are preserved. If the support cannot carry the marginals,
/// the input is blended toward the independent distribution with the same
/// marginals, which is always feasible.
pub fn repair_tendency(mass: &[f64], p_plus: &[f64]) -> Result<TendencyDistribution, EstimationError> {
    let m = p_plus.len();
    if m == 0 || m > MAX_CLASSES || mass.len() != 1 << m {
        return Err(EstimationError::Infeasible(format!(
            "{} weights for {m} marginals",
            mass.len()
        )));
    }
    if p_plus.iter().any(|p| !(0.0..=1.0).contains(p)) {
        return Err(EstimationError::Infeasible(format!("marginals {p_plus:?} outside [0,1]")));
    }
    if residual(mass, p_plus) <= UNCHANGED_TOLERANCE {
        return Ok(TendencyDistribution::new(m, mass.to_vec())?);
    }
    let independent = TendencyDistribution::independent(p_plus);
    let start: Vec<f64> = mass.iter().map(|&x| if x > 0.0 { x } else { 0.0 }).collect();
    for blend in [0.0, 1e-6, 1e-3, 0.1, 0.5] {
        let mut x: Vec<f64> = start
            .iter()
            .zip(independent.masses())
            .map(|(&a, &b)| (1.0 - blend) * a + blend * b)
            .collect();
        if tilt_to_marginals(&mut x, p_plus) {
            return Ok(TendencyDistribution::new(m, x)?);
        }
    }
    Ok(independent)
}

fn tilt_to_marginals(x: &mut [f64], p_plus: &[f64]) -> bool {
    let m = p_plus.len();
    // a marginal of exactly 0 or 1 forces the opposite side to zero mass
    for (i, &target) in p_plus.iter().enumerate() {
        if target == 0.0 || target == 1.0 {
            for (k, v) in x.iter_mut().enumerate() {
                if tendency_bit(k as u32, i + 1) != (target == 1.0) {
                    *v = 0.0;
                }
            }
        }
    }
    let free: Vec<usize> = (0..m).filter(|&i| p_plus[i] > 0.0 && p_plus[i] < 1.0).collect();
    for &i in &free {
        let on = x.iter().enumerate().any(|(k, &v)| v > 0.0 && tendency_bit(k as u32, i + 1));
        let off = x.iter().enumerate().any(|(k, &v)| v > 0.0 && !tendency_bit(k as u32, i + 1));
        if !on || !off {
            return false;
        }
    }
    let total: f64 = x.iter().sum();
    if !(total > 0.0) {
        return false;
    }
    let logw: Vec<f64> = x.iter().map(|&v| if v > 0.0 { v.ln() } else { f64::NEG_INFINITY }).collect();
    let bits: Vec<Vec<f64>> = free
        .iter()
        .map(|&i| (0..x.len()).map(|k| if tendency_bit(k as u32, i + 1) { 1.0 } else { 0.0 }).collect())
        .collect();
    let target: Vec<f64> = free.iter().map(|&i| p_plus[i]).collect();
    let r = free.len();

    // writes the tilted distribution into `x` and returns the dual objective
    let tilt = |lambda: &[f64], x: &mut [f64]| -> f64 {
        let mut hi = f64::NEG_INFINITY;
        for (k, v) in x.iter_mut().enumerate() {
            *v = logw[k] + (0..r).map(|j| lambda[j] * bits[j][k]).sum::<f64>();
            hi = hi.max(*v);
        }
        let mut z = 0.0;
        for v in x.iter_mut() {
            *v = (*v - hi).exp();
            z += *v;
        }
        for v in x.iter_mut() {
            *v /= z;
        }
        hi + z.ln() - (0..r).map(|j| lambda[j] * target[j]).sum::<f64>()
    };

    let mut lambda = vec![0.0; r];
    let mut f = tilt(&lambda, x);
    let mut trial = x.to_vec();
    for _ in 0..REPAIR_MAX_ITERATIONS {
        let mean: Vec<f64> = (0..r).map(|j| bits[j].iter().zip(x.iter()).map(|(b, v)| b * v).sum()).collect();
        let grad: Vec<f64> = (0..r).map(|j| mean[j] - target[j]).collect();
        if grad.iter().all(|g| g.abs() <= REPAIR_TARGET) {
            break;
        }
        let hess = DMatrix::from_fn(r, r, |a, b| {
            bits[a].iter().zip(&bits[b]).zip(x.iter()).map(|((p, q), v)| p * q * v).sum::<f64>() - mean[a] * mean[b]
        });
        // marginals that coincide on the support make H singular; a ridge
        // keeps the step a descent direction
        let scale = hess.diagonal().max().max(f64::MIN_POSITIVE);
        let mut ridge = 0.0;
        let chol = loop {
            let mut h = hess.clone();
            for a in 0..r {
                h[(a, a)] += ridge;
            }
            if let Some(c) = h.cholesky() {
                break c;
            }
            ridge = if ridge == 0.0 { 1e-12 * scale } else { ridge * 100.0 };
            if ridge > scale {
                return false;
            }
        };
        let step = chol.solve(&-DVector::from_column_slice(&grad));
        let slope: f64 = grad.iter().zip(step.iter()).map(|(g, d)| g * d).sum();
        let mut t = 1.0;
        let mut moved = false;
        for _ in 0..60 {
            let next: Vec<f64> = lambda.iter().zip(step.iter()).map(|(l, d)| l + t * d).collect();
            let fn_next = tilt(&next, &mut trial);
            if fn_next <= f + 1e-4 * t * slope {
                lambda = next;
                f = fn_next;
                x.copy_from_slice(&trial);
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    // one proportional sweep mops up the last rounding
    sweep(x, &free, p_plus);
    residual(x, p_plus) <= REPAIR_TOLERANCE
}

/// Rescales each listed marginal in turn to its target.
fn sweep(x: &mut [f64], classes: &[usize], p_plus: &[f64]) {
    for &i in classes {
        let (mut on, mut off) = (0.0, 0.0);
        for (k, &v) in x.iter().enumerate() {
            if tendency_bit(k as u32, i + 1) {
                on += v;
            } else {
                off += v;
            }
        }
        if on > 0.0 && off > 0.0 {
            let (f_on, f_off) = (p_plus[i] / on, (1.0 - p_plus[i]) / off);
            for (k, v) in x.iter_mut().enumerate() {
                *v *= if tendency_bit(k as u32, i + 1) { f_on } else { f_off };
            }
        }
    }
}

fn residual(x: &[f64], p_plus: &[f64]) -> f64 {
    let total: f64 = x.iter().sum();
    let mut worst = (total - 1.0).abs();
    if x.iter().any(|v| !(*v >= 0.0)) {
        return f64::INFINITY;
    }
    for i in 1..=p_plus.len() {
        let on: f64 = x
            .iter()
            .enumerate()
            .filter(|(k, _)| tendency_bit(*k as u32, i))
            .map(|(_, &v)| v)
            .sum();
        worst = worst.max((on - p_plus[i - 1]).abs());
    }
    worst
}
