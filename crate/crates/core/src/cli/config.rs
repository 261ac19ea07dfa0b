//! Single-document JSON run configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::estimation::OptimizerConfig;
use crate::pricing::{RateCurve, FAIR_SPREAD_TOL};
use crate::ratings::{RatingClass, Tolerances};

use super::ingest::{ClubbingMap, IngestError, SectorScheme};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Drives every stochastic stage: the optimizer restarts and the scenario
    /// substreams.
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Relative to the config file. Not part of the fingerprint.
    #[serde(default = "default_output")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub estimate: Option<EstimateConfig>,
    #[serde(default)]
    pub simulate: Option<SimulateConfig>,
    #[serde(default)]
    pub price: Option<PriceConfig>,
    #[serde(default)]
    pub portfolio: Option<PortfolioConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_seed() -> u64 {
    20090101
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    /// Rating history CSV.
    pub data: PathBuf,
    #[serde(default)]
    pub clubbing: ClubbingSpec,
    #[serde(default)]
    pub sectors: SectorSpec,
    /// Fixed P as M rows of M+1 entries. Counted from the data when absent.
    #[serde(default)]
    pub transition_matrix: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ClubbingSpec {
    /// `"sp"` for the S&P six-class clubbing.
    Preset(String),
    /// Classes labelled by their numerals `"1"..="M+1"`.
    Numeric { numeric: usize },
    /// Explicit `[label, class]` pairs; the first label of a class is used on export.
    Pairs(Vec<(String, RatingClass)>),
}

impl Default for ClubbingSpec {
    fn default() -> Self {
        ClubbingSpec::Preset("sp".into())
    }
}

impl ClubbingSpec {
    pub fn resolve(&self) -> Result<ClubbingMap, IngestError> {
        match self {
            ClubbingSpec::Preset(name) if name == "sp" => Ok(ClubbingMap::sp_six_class()),
            ClubbingSpec::Preset(name) => Err(IngestError::Data(format!("unknown clubbing preset {name:?}"))),
            ClubbingSpec::Numeric { numeric } if *numeric >= 1 => Ok(ClubbingMap::numeric(*numeric)),
            ClubbingSpec::Numeric { .. } => Err(IngestError::Data("numeric clubbing needs M >= 1".into())),
            ClubbingSpec::Pairs(pairs) => ClubbingMap::new(pairs),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SectorSpec {
    /// `"sic"` for the six SIC groups.
    Preset(String),
    Scheme(SectorScheme),
}

impl Default for SectorSpec {
    fn default() -> Self {
        SectorSpec::Preset("sic".into())
    }
}

impl SectorSpec {
    pub fn resolve(&self) -> Result<SectorScheme, IngestError> {
        match self {
            SectorSpec::Preset(name) if name == "sic" => Ok(SectorScheme::sic_six()),
            SectorSpec::Preset(name) => Err(IngestError::Data(format!("unknown sector preset {name:?}"))),
            SectorSpec::Scheme(s) if s.count == 0 => Err(IngestError::Data("sector count must be positive".into())),
            SectorSpec::Scheme(s) => Ok(s.clone()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    /// `"published"`, `"estimated"` (params.json from the estimate stage) or a path.
    #[serde(default = "default_params")]
    pub params: String,
    #[serde(default)]
    pub firms: FirmsSpec,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_scenarios")]
    pub scenarios: usize,
}

fn default_params() -> String {
    "published".into()
}

fn default_horizon() -> usize {
    10
}

fn default_scenarios() -> usize {
    10000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FirmsSpec {
    /// `"itraxx"`: the 125-name investment-grade preset.
    Preset(String),
    List(Vec<FirmSpec>),
}

impl Default for FirmsSpec {
    fn default() -> Self {
        FirmsSpec::Preset("itraxx".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FirmSpec {
    pub id: String,
    pub rating: RatingClass,
    pub sector: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriceConfig {
    #[serde(default)]
    pub curve: CurveSpec,
    #[serde(default)]
    pub tranches: TranchesSpec,
    /// Bisection tolerance on |E(R)| per unit notional.
    #[serde(default = "default_spread_tol")]
    pub tolerance: f64,
    /// Tail levels for the per-tranche loss statistics.
    #[serde(default = "default_alphas")]
    pub alphas: Vec<f64>,
    /// Spread at which returns.csv and the histograms are evaluated.
    #[serde(default)]
    pub returns_at: ReturnsAt,
}

fn default_spread_tol() -> f64 {
    FAIR_SPREAD_TOL
}

fn default_alphas() -> Vec<f64> {
    vec![0.9, 0.99]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReturnsAt {
    /// The spread given in the tranche definition.
    #[default]
    Quoted,
    /// The calibrated fair spread.
    Fair,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CurveSpec {
    /// Flat coupon rate; discount factors use `discount_rate` (defaults to the
    /// same rate).
    Flat {
        flat: f64,
        #[serde(default)]
        discount_rate: Option<f64>,
    },
    Explicit { rates: Vec<f64>, discount: Vec<f64> },
}

impl Default for CurveSpec {
    fn default() -> Self {
        CurveSpec::Flat {
            flat: 0.05,
            discount_rate: None,
        }
    }
}

impl CurveSpec {
    pub fn build(&self, periods: usize) -> RateCurve {
        match self {
            CurveSpec::Flat { flat, discount_rate } => {
                let mut curve = RateCurve::flat(*flat, periods);
                if let Some(d) = discount_rate {
                    curve.discount = RateCurve::flat(*d, periods).discount;
                }
                curve
            }
            CurveSpec::Explicit { rates, discount } => RateCurve {
                rates: rates.clone(),
                discount: discount.clone(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TranchesSpec {
    /// `"itraxx"`: 5 bands × 3 maturities at the quoted spreads.
    Preset(String),
    List(Vec<TrancheSpec>),
}

impl Default for TranchesSpec {
    fn default() -> Self {
        TranchesSpec::Preset("itraxx".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrancheSpec {
    pub name: String,
    /// Firm indices into the scenario set; all firms when absent.
    #[serde(default)]
    pub members: Option<Vec<usize>>,
    pub attach: f64,
    pub detach: f64,
    #[serde(default)]
    pub spread: f64,
    pub maturity: usize,
    #[serde(default = "default_recovery")]
    pub recovery: f64,
    #[serde(default = "default_notional")]
    pub notional0: f64,
    #[serde(default)]
    pub upfront: f64,
}

fn default_recovery() -> f64 {
    0.4
}

fn default_notional() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortfolioConfig {
    pub target_mean: f64,
    #[serde(default = "default_lower")]
    pub lower: f64,
    #[serde(default = "default_upper")]
    pub upper: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Tranche names to include; every priced tranche when absent.
    #[serde(default)]
    pub assets: Option<Vec<String>>,
    #[serde(default)]
    pub frontier: FrontierSpec,
}

fn default_lower() -> f64 {
    -0.5
}

fn default_upper() -> f64 {
    0.5
}

fn default_alpha() -> f64 {
    0.9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FrontierSpec {
    Targets { targets: Vec<f64> },
    /// Evenly spaced from the minimum-CVaR portfolio's mean to the largest
    /// attainable mean.
    Points { points: usize },
}

impl Default for FrontierSpec {
    fn default() -> Self {
        FrontierSpec::Points { points: 20 }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, String> {
        let config: RunConfig = serde_json::from_str(text).map_err(|e| e.to_string())?;
        config.validate()?;
        Ok(config)
    }

    /// Checks that do not need the filesystem or upstream artifacts.
    pub fn validate(&self) -> Result<(), String> {
        let tol = &self.tolerances;
        if [tol.row_sum, tol.chi_total, tol.marginal].iter().any(|t| !(*t > 0.0)) {
            return Err("tolerances must be positive".into());
        }
        if let Some(e) = &self.estimate {
            e.optimizer.validate()?;
            e.clubbing.resolve().map_err(|e| e.to_string())?;
            e.sectors.resolve().map_err(|e| e.to_string())?;
        }
        if let Some(s) = &self.simulate {
            if s.horizon == 0 || s.scenarios == 0 {
                return Err("simulate.horizon and simulate.scenarios must be positive".into());
            }
            if let FirmsSpec::Preset(name) = &s.firms {
                if name != "itraxx" {
                    return Err(format!("unknown firms preset {name:?}"));
                }
            }
        }
        if let Some(p) = &self.price {
            if !(p.tolerance > 0.0) {
                return Err("price.tolerance must be positive".into());
            }
            if let Some(a) = p.alphas.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
                return Err(format!("price.alphas entry {a} outside (0,1)"));
            }
            if let TranchesSpec::Preset(name) = &p.tranches {
                if name != "itraxx" {
                    return Err(format!("unknown tranche preset {name:?}"));
                }
            }
        }
        if let Some(p) = &self.portfolio {
            if !(p.alpha > 0.0 && p.alpha < 1.0) {
                return Err(format!("portfolio.alpha {} outside (0,1)", p.alpha));
            }
            if !(p.lower <= p.upper) {
                return Err(format!("portfolio bounds [{}, {}] are empty", p.lower, p.upper));
            }
            if let FrontierSpec::Points { points } = p.frontier {
                if points < 2 {
                    return Err("portfolio.frontier.points must be at least 2".into());
                }
            }
        }
        Ok(())
    }

    /// Hex SHA-256 of the canonical JSON with `output_dir` blanked, so moving
    /// the output does not change the fingerprint.
    pub fn fingerprint(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        let json = serde_json::to_string(&canonical).expect("config serializes");
        crate::simulation::sha256_hex(json.as_bytes())
    }

    /// Resolves `path` against the directory holding the config file.
    pub fn resolve(base: &Path, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            base.join(path)
        }
    }
}
