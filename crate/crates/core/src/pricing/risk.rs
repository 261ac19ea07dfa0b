use serde::Serialize;

use super::PricingError;

pub const HISTOGRAM_BINS: usize = 50;

/// Equal-width histogram of losses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(values: &[f64], bins: usize) -> Self {
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if values.is_empty() || bins == 0 {
            return Self {
                edges: vec![],
                counts: vec![],
            };
        }
        if max <= min {
            return Self {
                edges: vec![min, max],
                counts: vec![values.len() as u64],
            };
        }
        let width = (max - min) / bins as f64;
        let edges: Vec<f64> = (0..=bins)
            .map(|k| if k == bins { max } else { min + k as f64 * width })
            .collect();
        let mut counts = vec![0u64; bins];
        for &v in values {
            let k = (((v - min) / width) as usize).min(bins - 1);
            counts[k] += 1;
        }
        Self { edges, counts }
    }

    /// `bin_left,bin_right,count` rows under a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_left,bin_right,count\n");
        for (k, c) in self.counts.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", self.edges[k], self.edges[k + 1], c));
        }
        out
    }
}

/// Statistics of the loss L = −return.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskStats {
    pub alpha: f64,
    pub n: usize,
    /// Mean loss.
    pub mean: f64,
    pub var: f64,
    pub cvar: f64,
    #[serde(skip)]
    pub histogram: Histogram,
}

impl RiskStats {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("stats serialize")
    }
}

/// Mean, VaR_α, CVaR_α and a loss histogram for equally weighted returns.
///
/// VaR is the left-closed empirical quantile inf{x : F(x) ≥ α} of losses and
/// CVaR = VaR + Σ (L − VaR)⁺ / ((1 − α) n), the minimum of the
/// Rockafellar–Uryasev function.
pub fn risk_stats(returns: &[f64], alpha: f64) -> Result<RiskStats, PricingError> {
    if returns.is_empty() {
        return Err(PricingError::Empty);
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(PricingError::BadLevel(alpha));
    }
    let n = returns.len();
    let mut losses: Vec<f64> = returns.iter().map(|r| -r).collect();
    let mean = losses.iter().sum::<f64>() / n as f64;
    losses.sort_by(f64::total_cmp);
    let var = losses[quantile_rank(n, alpha) - 1];
    let excess: f64 = losses.iter().map(|&l| (l - var).max(0.0)).sum();
    let cvar = var + excess / ((1.0 - alpha) * n as f64);
    Ok(RiskStats {
        alpha,
        n,
        mean,
        var,
        cvar,
        histogram: Histogram::new(&losses, HISTOGRAM_BINS),
    })
}

/// Smallest k in 1..=n with k/n ≥ α, tolerant of rounding in α·n.
pub(crate) fn quantile_rank(n: usize, alpha: f64) -> usize {
    let k = (alpha * n as f64 - 1e-9).ceil();
    (k.max(1.0) as usize).min(n)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_point_example() {
        let returns: Vec<f64> = (1..=10).map(|k| -(k as f64)).collect();
        let s = risk_stats(&returns, 0.9).unwrap();
        assert_eq!(s.var, 9.0);
        assert!((s.cvar - 10.0).abs() < 1e-12);
        assert!((s.mean - 5.5).abs() < 1e-12);
    }

    #[test]
    fn ru_scan_agrees() {
        let returns: Vec<f64> = (0..37).map(|k| ((k * 7919) % 101) as f64 / 10.0 - 3.0).collect();
        for alpha in [0.5, 0.9, 0.95, 0.99] {
            let s = risk_stats(&returns, alpha).unwrap();
            let ru = |a: f64| a + returns.iter().map(|r| (-r - a).max(0.0)).sum::<f64>() / ((1.0 - alpha) * 37.0);
            let scan = returns.iter().map(|r| ru(-r)).fold(f64::INFINITY, f64::min);
            assert!((scan - s.cvar).abs() < 1e-10, "{alpha}");
            assert!(s.cvar >= s.var);
        }
    }

    #[test]
    fn constant_loss() {
        for alpha in [0.1, 0.5, 0.99] {
            let s = risk_stats(&[-2.5; 20], alpha).unwrap();
            assert_eq!(s.var, 2.5);
            assert!((s.cvar - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn histogram_counts_everything() {
        let v: Vec<f64> = (0..1000).map(|k| (k as f64).sqrt()).collect();
        let h = Histogram::new(&v, 50);
        assert_eq!(h.counts.len(), 50);
        assert_eq!(h.counts.iter().sum::<u64>(), 1000);
        assert_eq!(h.to_csv().lines().count(), 51);
    }

    #[test]
    fn bad_inputs() {
        assert!(risk_stats(&[], 0.9).is_err());
        assert!(risk_stats(&[1.0], 1.0).is_err());
    }
}
