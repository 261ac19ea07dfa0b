//! Funded CDX tranche cashflows on simulated default paths, fair spreads and
//! loss statistics.
//!
//! Cashflows are seen from the risk buyer: positive is profit. Rates `i_t` are
//! decimal per-year rates and `r_t` discount factors to time 0.

mod risk;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::simulation::{default_counts, ScenarioSet, SimulationError};

pub use risk::{risk_stats, Histogram, RiskStats, HISTOGRAM_BINS};

#[derive(Debug, Error)]
pub enum PricingError {
    #[error("rate curve covers {available} periods, tranche needs {needed}")]
    CurveTooShort { needed: usize, available: usize },
    #[error("default path has {available} periods, tranche needs {needed}")]
    PathTooShort { needed: usize, available: usize },
    #[error("no spread brackets a zero expected return for {0}")]
    NoBracket(String),
    #[error("invalid tranche: {0}")]
    InvalidTranche(String),
    #[error("invalid rate curve: {0}")]
    InvalidCurve(String),
    #[error("invalid risk level {0}; need 0 < alpha < 1")]
    BadLevel(f64),
    #[error("empty return distribution")]
    Empty,
    #[error(transparent)]
    Simulation(#[from] SimulationError),
}

/// Contract tuple (members, attachment, detachment, spread, maturity, recovery)
/// plus initial notional and an optional upfront fraction paid to the buyer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdxTranche {
    #[serde(default)]
    pub name: String,
    pub members: Vec<usize>,
    pub attach: f64,
    pub detach: f64,
    #[serde(default)]
    pub spread: f64,
    pub maturity: usize,
    pub recovery: f64,
    #[serde(default = "one")]
    pub notional0: f64,
    #[serde(default)]
    pub upfront: f64,
}

fn one() -> f64 {
    1.0
}

impl CdxTranche {
    pub fn validate(&self) -> Result<(), PricingError> {
        let bad = |m: String| Err(PricingError::InvalidTranche(format!("{}: {m}", self.name)));
        if self.members.is_empty() {
            return bad("no members".into());
        }
        if !(0.0..1.0).contains(&self.attach) || !(self.detach > self.attach && self.detach <= 1.0) {
            return bad(format!("need 0 <= attach < detach <= 1, got [{}, {}]", self.attach, self.detach));
        }
        if self.maturity == 0 {
            return bad("maturity must be at least one period".into());
        }
        if !(0.0..=1.0).contains(&self.recovery) {
            return bad(format!("recovery {} outside [0,1]", self.recovery));
        }
        if !(self.notional0 > 0.0) {
            return bad(format!("notional {} must be positive", self.notional0));
        }
        if !self.spread.is_finite() || !self.upfront.is_finite() {
            return bad("spread and upfront must be finite".into());
        }
        Ok(())
    }

    pub fn with_spread(&self, spread: f64) -> Self {
        Self {
            spread,
            ..self.clone()
        }
    }
}

/// Per-period rates `i_t` and discount factors `r_t`, t = 1, 2, ...
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCurve {
    pub rates: Vec<f64>,
    pub discount: Vec<f64>,
}

impl RateCurve {
    pub fn new(rates: Vec<f64>, discount: Vec<f64>) -> Result<Self, PricingError> {
        let curve = Self { rates, discount };
        curve.validate()?;
        Ok(curve)
    }

    /// Flat rate with matching discount factors `(1 + rate)^-t`.
    pub fn flat(rate: f64, periods: usize) -> Self {
        Self {
            rates: vec![rate; periods],
            discount: (1..=periods).map(|t| (1.0 + rate).powi(-(t as i32))).collect(),
        }
    }

    pub fn periods(&self) -> usize {
        self.rates.len().min(self.discount.len())
    }

    pub fn validate(&self) -> Result<(), PricingError> {
        if self.rates.len() != self.discount.len() {
            return Err(PricingError::InvalidCurve(format!(
                "{} rates but {} discount factors",
                self.rates.len(),
                self.discount.len()
            )));
        }
        if let Some(r) = self.rates.iter().find(|&&r| !(r > -1.0) || !r.is_finite()) {
            return Err(PricingError::InvalidCurve(format!("rate {r} must exceed -1")));
        }
        if let Some(d) = self.discount.iter().find(|&&d| !(d > 0.0 && d <= 1.0)) {
            return Err(PricingError::InvalidCurve(format!("discount factor {d} outside (0,1]")));
        }
        if self.discount.windows(2).any(|w| w[1] > w[0]) {
            return Err(PricingError::InvalidCurve("discount factors must be nonincreasing".into()));
        }
        Ok(())
    }
}

/// Equally weighted per-scenario discounted returns.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnDistribution {
    pub returns: Vec<f64>,
}

impl ReturnDistribution {
    pub fn len(&self) -> usize {
        self.returns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.returns.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.returns.iter().sum::<f64>() / self.returns.len() as f64
    }

    pub fn risk_stats(&self, alpha: f64) -> Result<RiskStats, PricingError> {
        risk_stats(&self.returns, alpha)
    }
}

/// L = D / |A|.
pub fn loss_fraction(defaults: u32, tranche: &CdxTranche) -> f64 {
    defaults as f64 / tranche.members.len() as f64
}

/// Remaining tranche notional after portfolio loss fraction `loss`.
pub fn tranche_notional(tranche: &CdxTranche, loss: f64) -> f64 {
    if loss < tranche.attach {
        tranche.notional0
    } else if loss > tranche.detach {
        0.0
    } else {
        tranche.notional0 * (tranche.detach - loss) / (tranche.detach - tranche.attach)
    }
}

/// The two parts of the return that are linear in the spread:
/// `return = base + spread · annuity`.
fn return_parts(tranche: &CdxTranche, defaults: &[u32], curve: &RateCurve) -> Result<(f64, f64), PricingError> {
    let t_end = tranche.maturity;
    if defaults.len() < t_end + 1 {
        return Err(PricingError::PathTooShort {
            needed: t_end,
            available: defaults.len().saturating_sub(1),
        });
    }
    if curve.periods() < t_end {
        return Err(PricingError::CurveTooShort {
            needed: t_end,
            available: curve.periods(),
        });
    }
    let n0 = tranche.notional0;
    let rec = tranche.recovery;
    let mut base = -n0 + tranche.upfront * n0;
    let mut annuity = 0.0;
    let mut n_t = n0;
    for t in 1..=t_end {
        n_t = tranche_notional(tranche, loss_fraction(defaults[t], tranche));
        let (i, r) = (curve.rates[t - 1], curve.discount[t - 1]);
        base += r * (n_t * i + rec * (n0 - n_t) * i);
        annuity += r * n_t;
    }
    // remaining notional plus the recovered part of what was lost
    base += curve.discount[t_end - 1] * (n_t + rec * (n0 - n_t));
    Ok((base, annuity))
}

/// R(C) on one path of cumulative defaults `defaults[t]`, t = 0..=T.
pub fn discounted_return(tranche: &CdxTranche, defaults: &[u32], curve: &RateCurve) -> Result<f64, PricingError> {
    let (base, annuity) = return_parts(tranche, defaults, curve)?;
    Ok(base + tranche.spread * annuity)
}

fn member_defaults(tranche: &CdxTranche, set: &ScenarioSet) -> Result<Vec<Vec<u32>>, PricingError> {
    tranche.validate()?;
    Ok(default_counts(set, &tranche.members)?)
}

/// R(C) for every scenario of `set`.
pub fn tranche_returns(tranche: &CdxTranche, set: &ScenarioSet, curve: &RateCurve) -> Result<ReturnDistribution, PricingError> {
    let paths = member_defaults(tranche, set)?;
    let returns = paths
        .par_iter()
        .map(|d| discounted_return(tranche, d, curve))
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(ReturnDistribution { returns })
}

pub fn expected_return(tranche: &CdxTranche, set: &ScenarioSet, curve: &RateCurve) -> Result<f64, PricingError> {
    Ok(tranche_returns(tranche, set, curve)?.mean())
}

pub const FAIR_SPREAD_TOL: f64 = 1e-8;

/// Spread S* with E[R(C)] = 0 by bisection.
///
/// The bracket starts at [−1, 1] and doubles until the expected return changes
/// sign. The tranche's own spread is ignored.
pub fn fair_spread(tranche: &CdxTranche, set: &ScenarioSet, curve: &RateCurve, tol: f64) -> Result<f64, PricingError> {
    let paths = member_defaults(tranche, set)?;
    let parts = paths
        .iter()
        .map(|d| return_parts(tranche, d, curve))
        .collect::<Result<Vec<_>, _>>()?;
    let n = parts.len() as f64;
    let base = parts.iter().map(|p| p.0).sum::<f64>() / n;
    let annuity = parts.iter().map(|p| p.1).sum::<f64>() / n;
    fair_spread_from_parts(base, annuity, tranche, tol)
}

fn fair_spread_from_parts(base: f64, annuity: f64, tranche: &CdxTranche, tol: f64) -> Result<f64, PricingError> {
    if !(annuity > 0.0) {
        return Err(PricingError::NoBracket(tranche.name.clone()));
    }
    let f = |s: f64| base + s * annuity;
    let target = tol * tranche.notional0;
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    let mut expansions = 0;
    while f(lo) > 0.0 || f(hi) < 0.0 {
        lo *= 2.0;
        hi *= 2.0;
        expansions += 1;
        if expansions > 60 {
            return Err(PricingError::NoBracket(tranche.name.clone()));
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        let v = f(mid);
        if v.abs() <= target || hi - lo <= f64::EPSILON * mid.abs().max(1.0) {
            return Ok(mid);
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn tranche(attach: f64, detach: f64, spread: f64, maturity: usize, recovery: f64) -> CdxTranche {
        CdxTranche {
            name: "t".into(),
            members: (0..125).collect(),
            attach,
            detach,
            spread,
            maturity,
            recovery,
            notional0: 1.0,
            upfront: 0.0,
        }
    }

    #[test]
    fn loss_fraction_cases() {
        let t = tranche(0.0, 0.03, 0.0, 5, 0.4);
        assert_eq!(loss_fraction(0, &t), 0.0);
        assert_eq!(loss_fraction(5, &t), 0.04);
        assert_eq!(loss_fraction(125, &t), 1.0);
    }

    #[test]
    fn notional_branches() {
        let eq = tranche(0.0, 0.03, 0.0, 5, 0.4);
        assert!((tranche_notional(&eq, 0.02) - 1.0 / 3.0).abs() < 1e-15);
        let mezz = tranche(0.03, 0.06, 0.0, 5, 0.4);
        assert_eq!(tranche_notional(&mezz, 0.02), 1.0);
        assert_eq!(tranche_notional(&mezz, 0.09), 0.0);
        assert_eq!(tranche_notional(&mezz, 0.03), 1.0);
        assert_eq!(tranche_notional(&mezz, 0.06), 0.0);
    }

    #[test]
    fn riskless_annuity_prices_to_zero() {
        for &i in &[0.0, 0.01, 0.046, 0.05, 0.2] {
            let curve = RateCurve::flat(i, 10);
            let t = tranche(0.03, 0.06, 0.0, 10, 0.4);
            let r = discounted_return(&t, &[0; 11], &curve).unwrap();
            assert!(r.abs() <= 1e-12, "{i}: {r}");
        }
    }

    #[test]
    fn spread_annuity_without_defaults() {
        let curve = RateCurve::flat(0.05, 7);
        let t = tranche(0.03, 0.06, 0.02, 7, 0.4);
        let r = discounted_return(&t, &[0; 8], &curve).unwrap();
        let annuity: f64 = curve.discount.iter().sum();
        assert!((r - 0.02 * annuity).abs() < 1e-12);
    }

    #[test]
    fn full_recovery_earns_risk_free() {
        let curve = RateCurve::flat(0.05, 5);
        let t = tranche(0.0, 0.03, 0.0, 5, 1.0);
        for path in [[0, 1, 2, 2, 4, 9], [0, 0, 0, 0, 0, 125], [0, 5, 5, 5, 5, 5]] {
            let r = discounted_return(&t, &path, &curve).unwrap();
            assert!(r.abs() <= 1e-12, "{path:?}: {r}");
        }
    }

    #[test]
    fn upfront_adds_to_initial_cash() {
        let curve = RateCurve::flat(0.05, 5);
        let mut t = tranche(0.0, 0.03, 0.0, 5, 0.4);
        t.upfront = 0.4;
        let r = discounted_return(&t, &[0; 6], &curve).unwrap();
        assert!((r - 0.4).abs() < 1e-12);
    }

    #[test]
    fn short_inputs_rejected() {
        let t = tranche(0.0, 0.03, 0.0, 5, 0.4);
        assert!(matches!(
            discounted_return(&t, &[0; 6], &RateCurve::flat(0.05, 4)),
            Err(PricingError::CurveTooShort { .. })
        ));
        assert!(matches!(
            discounted_return(&t, &[0; 5], &RateCurve::flat(0.05, 5)),
            Err(PricingError::PathTooShort { .. })
        ));
    }

    #[test]
    fn bisection_hits_affine_root() {
        let t = tranche(0.0, 0.03, 0.0, 5, 0.4);
        let s = fair_spread_from_parts(-0.3, 4.0, &t, 1e-12).unwrap();
        assert!((s - 0.075).abs() < 1e-12);
        let s = fair_spread_from_parts(30.0, 4.0, &t, 1e-12).unwrap();
        assert!((s + 7.5).abs() < 1e-11);
        assert!(fair_spread_from_parts(-0.3, 0.0, &t, 1e-8).is_err());
    }

    #[test]
    fn curve_validation() {
        assert!(RateCurve::new(vec![0.05], vec![0.95, 0.9]).is_err());
        assert!(RateCurve::new(vec![0.05, 0.05], vec![0.9, 0.95]).is_err());
        assert!(RateCurve::new(vec![-1.5], vec![0.9]).is_err());
        assert!(RateCurve::new(vec![0.05], vec![0.95]).is_ok());
    }
}
