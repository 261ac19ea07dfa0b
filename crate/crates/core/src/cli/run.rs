//! Stage orchestration with file-based handoff through the output directory.
//!
//! | stage    | reads                         | writes |
//! |----------|-------------------------------|--------|
//! | estimate | rating CSV                    | estimate.json, params.json, ingest.json |
//! | simulate | params (preset, file, params.json) | scenarios.cmcs, scenarios.json |
//! | price    | scenarios.cmcs                | spreads.json, spreads.csv, returns.csv, hist_*.csv |
//! | optimize | returns.csv                   | solution.json, weights.csv, portfolio_hist.csv |
//! | frontier | returns.csv                   | frontier.json, frontier.csv |

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::estimation::{count_transitions, estimate_parameters, estimate_transition_matrix, EstimationError};
use crate::portfolio::{efficient_frontier, optimize_portfolio, CvarProblem, LpError, PortfolioError};
use crate::presets;
use crate::pricing::{
    expected_return, fair_spread, risk_stats, tranche_returns, CdxTranche, Histogram, PricingError, RiskStats,
    HISTOGRAM_BINS,
};
use crate::ratings::{FirmState, ModelError, ModelParams, TransitionMatrix};
use crate::simulation::{self, sha256_hex, ScenarioMetadata, SimulationError};

use super::config::{CurveSpec, FirmsSpec, FrontierSpec, ReturnsAt, RunConfig, TranchesSpec};
use super::ingest::{ingest, IngestError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Estimate,
    Simulate,
    Price,
    Optimize,
    Frontier,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Estimate => "estimate",
            Command::Simulate => "simulate",
            Command::Price => "price",
            Command::Optimize => "optimize",
            Command::Frontier => "frontier",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Config,
    Data,
    Numerical,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Config => 2,
            ErrorClass::Data => 3,
            ErrorClass::Numerical => 4,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorClass::Config => "config",
            ErrorClass::Data => "data",
            ErrorClass::Numerical => "numerical",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunError {
    pub class: ErrorClass,
    pub detail: String,
}

impl RunError {
    pub fn config(detail: impl Into<String>) -> Self {
        Self {
            class: ErrorClass::Config,
            detail: detail.into(),
        }
    }

    pub fn data(detail: impl Into<String>) -> Self {
        Self {
            class: ErrorClass::Data,
            detail: detail.into(),
        }
    }

    pub fn numerical(detail: impl Into<String>) -> Self {
        Self {
            class: ErrorClass::Numerical,
            detail: detail.into(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.class.exit_code()
    }
}

/// One line: `ERROR class=<config|data|numerical> detail=<text>`.
impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let detail = self.detail.replace(['\n', '\r'], " ");
        write!(f, "ERROR class={} detail={}", self.class.name(), detail)
    }
}

impl std::error::Error for RunError {}

impl From<IngestError> for RunError {
    fn from(e: IngestError) -> Self {
        RunError::data(e.to_string())
    }
}

impl From<ModelError> for RunError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::DegenerateTendency { .. } => RunError::numerical(e.to_string()),
            _ => RunError::config(e.to_string()),
        }
    }
}

impl From<EstimationError> for RunError {
    fn from(e: EstimationError) -> Self {
        match e {
            EstimationError::Panel(_) | EstimationError::EmptyRow(_) => RunError::data(e.to_string()),
            EstimationError::Config(_) => RunError::config(e.to_string()),
            EstimationError::Model(m) => m.into(),
            _ => RunError::numerical(e.to_string()),
        }
    }
}

impl From<SimulationError> for RunError {
    fn from(e: SimulationError) -> Self {
        match e {
            SimulationError::Model(m) => m.into(),
            SimulationError::UnknownFirm(_) | SimulationError::Invalid(_) => RunError::config(e.to_string()),
            _ => RunError::data(e.to_string()),
        }
    }
}

impl From<PricingError> for RunError {
    fn from(e: PricingError) -> Self {
        match e {
            PricingError::NoBracket(_) => RunError::numerical(e.to_string()),
            PricingError::Empty => RunError::data(e.to_string()),
            PricingError::Simulation(s) => s.into(),
            _ => RunError::config(e.to_string()),
        }
    }
}

impl From<PortfolioError> for RunError {
    fn from(e: PortfolioError) -> Self {
        match e {
            PortfolioError::InfeasibleBounds(_) | PortfolioError::Invalid(_) => RunError::config(e.to_string()),
            PortfolioError::Pricing(p) => p.into(),
            PortfolioError::Lp(LpError::Invalid(_)) => RunError::config(e.to_string()),
            _ => RunError::numerical(e.to_string()),
        }
    }
}

/// Command-line overrides applied before fingerprinting.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// A parsed config plus the directory its relative paths are resolved from.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub base_dir: PathBuf,
}

impl LoadedConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self, RunError> {
        let text = fs::read_to_string(path).map_err(|e| RunError::config(format!("{}: {e}", path.display())))?;
        let mut config = RunConfig::from_json(&text).map_err(|e| RunError::config(format!("{}: {e}", path.display())))?;
        if let Some(seed) = overrides.seed {
            config.seed = seed;
        }
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        if let Some(out) = &overrides.out {
            // --out is taken relative to the working directory, like any CLI path.
            config.output_dir = std::path::absolute(out).map_err(|e| RunError::config(e.to_string()))?;
        }
        Ok(Self { config, base_dir })
    }

    pub fn output_dir(&self) -> PathBuf {
        RunConfig::resolve(&self.base_dir, &self.config.output_dir)
    }

    fn input(&self, path: &Path) -> PathBuf {
        RunConfig::resolve(&self.base_dir, path)
    }
}

/// Runs one stage and returns the paths it wrote.
pub fn run(command: Command, loaded: &LoadedConfig) -> Result<Vec<PathBuf>, RunError> {
    let out = loaded.output_dir();
    fs::create_dir_all(&out).map_err(|e| RunError::data(format!("{}: {e}", out.display())))?;
    let ctx = Context {
        loaded,
        config: &loaded.config,
        out,
        fingerprint: loaded.config.fingerprint(),
        written: Vec::new(),
    };
    match command {
        Command::Estimate => run_estimate(ctx),
        Command::Simulate => run_simulate(ctx),
        Command::Price => run_price(ctx),
        Command::Optimize => run_optimize(ctx),
        Command::Frontier => run_frontier(ctx),
    }
}

struct Context<'a> {
    loaded: &'a LoadedConfig,
    config: &'a RunConfig,
    out: PathBuf,
    fingerprint: String,
    written: Vec<PathBuf>,
}

impl Context<'_> {
    fn header_line(&self) -> String {
        format!("# config_fingerprint={} seed={}\n", self.fingerprint, self.config.seed)
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), RunError> {
        let path = self.out.join(name);
        fs::write(&path, bytes).map_err(|e| RunError::data(format!("{}: {e}", path.display())))?;
        self.written.push(path);
        Ok(())
    }

    /// JSON object with provenance keys prepended to `body`'s fields.
    fn write_json(&mut self, name: &str, body: Value) -> Result<(), RunError> {
        let mut doc = serde_json::Map::new();
        doc.insert("config_fingerprint".into(), json!(self.fingerprint));
        doc.insert("seed".into(), json!(self.config.seed));
        match body {
            Value::Object(fields) => doc.extend(fields),
            other => {
                doc.insert("value".into(), other);
            }
        }
        let mut text = serde_json::to_string_pretty(&Value::Object(doc)).expect("json serializes");
        text.push('\n');
        self.write_bytes(name, text.as_bytes())
    }

    fn write_csv(&mut self, name: &str, body: &str) -> Result<(), RunError> {
        let text = self.header_line() + body;
        self.write_bytes(name, text.as_bytes())
    }

    fn upstream(&self, name: &str, producer: &str) -> Result<PathBuf, RunError> {
        let path = self.out.join(name);
        if path.is_file() {
            Ok(path)
        } else {
            Err(RunError::data(format!("{} missing; run `{producer}` first", path.display())))
        }
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("value serializes")
}

fn parse_json(text: &str) -> Value {
    serde_json::from_str(text).expect("library json parses")
}

fn section<'a, T>(s: &'a Option<T>, name: &str) -> Result<&'a T, RunError> {
    s.as_ref()
        .ok_or_else(|| RunError::config(format!("config has no \"{name}\" section")))
}

fn run_estimate(mut ctx: Context) -> Result<Vec<PathBuf>, RunError> {
    let est = section(&ctx.config.estimate, "estimate")?;
    let clubbing = est.clubbing.resolve().map_err(|e| RunError::config(e.to_string()))?;
    let sectors = est.sectors.resolve().map_err(|e| RunError::config(e.to_string()))?;
    let data = ctx.loaded.input(&est.data);
    let file = fs::File::open(&data).map_err(|e| RunError::config(format!("{}: {e}", data.display())))?;
    let (panel, report) = ingest(std::io::BufReader::new(file), &clubbing, &sectors)
        .map_err(|e| RunError::data(format!("{}: {e}", data.display())))?;
    let p = match &est.transition_matrix {
        Some(rows) => TransitionMatrix::new(rows.clone())?,
        None => estimate_transition_matrix(&count_transitions(&panel))?,
    };
    let mut optimizer = est.optimizer.clone();
    optimizer.seed = ctx.config.seed;
    let result = estimate_parameters(&panel, &p, &optimizer)?;
    let violations = result.params.validate_with(&ctx.config.tolerances);
    if !violations.is_empty() {
        return Err(RunError::numerical(format!(
            "fitted parameters fail validation: {}",
            violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
        )));
    }
    ctx.write_json("ingest.json", to_value(&report))?;
    let mut body = parse_json(&result.to_json());
    body["P"] = to_value(&p.rows());
    ctx.write_json("estimate.json", body)?;
    ctx.write_json("params.json", parse_json(&result.params.to_json()))?;
    Ok(ctx.written)
}

fn load_params(ctx: &Context, source: &str) -> Result<ModelParams, RunError> {
    if source == "published" {
        return Ok(presets::published_model());
    }
    let path = if source == "estimated" {
        ctx.upstream("params.json", "estimate")?
    } else {
        ctx.loaded.input(Path::new(source))
    };
    let text = fs::read_to_string(&path).map_err(|e| RunError::config(format!("{}: {e}", path.display())))?;
    ModelParams::from_json_with(&text, &ctx.config.tolerances)
        .map_err(|e| RunError::config(format!("{}: {e}", path.display())))
}

fn run_simulate(mut ctx: Context) -> Result<Vec<PathBuf>, RunError> {
    let sim = section(&ctx.config.simulate, "simulate")?;
    let params = load_params(&ctx, &sim.params)?;
    let (firms, ids): (Vec<FirmState>, Vec<String>) = match &sim.firms {
        FirmsSpec::Preset(_) => {
            let firms = presets::itraxx_portfolio();
            let ids = (1..=firms.len()).map(|k| format!("itraxx{k:03}")).collect();
            (firms, ids)
        }
        FirmsSpec::List(list) => {
            if list.is_empty() {
                return Err(RunError::config("simulate.firms is empty"));
            }
            list.iter()
                .map(|f| (FirmState::new(f.rating, f.sector), f.id.clone()))
                .unzip()
        }
    };
    for f in &firms {
        params.check_state(f)?;
    }
    let set = simulation::simulate_named(&params, &firms, ids, sim.horizon, sim.scenarios, ctx.config.seed)?;
    let bytes = simulation::to_bytes(&set);
    let digest = sha256_hex(&bytes);
    ctx.write_bytes("scenarios.cmcs", &bytes)?;
    let mut body = to_value(&ScenarioMetadata::of(&set));
    body["params_source"] = json!(sim.params);
    body["payload_sha256"] = json!(digest);
    ctx.write_json("scenarios.json", body)?;
    Ok(ctx.written)
}

#[derive(Serialize)]
struct TrancheReport {
    name: String,
    attach: f64,
    detach: f64,
    maturity: usize,
    recovery: f64,
    upfront: f64,
    quoted_spread: f64,
    fair_spread: f64,
    /// Mean return at the quoted spread.
    expected_return: f64,
    /// Spread used for the returns file and the histogram.
    evaluation_spread: f64,
    /// Loss statistics at the evaluation spread, one per level.
    stats: Vec<RiskStats>,
}

fn build_tranches(spec: &TranchesSpec, n_firms: usize) -> Vec<CdxTranche> {
    match spec {
        TranchesSpec::Preset(_) => presets::itraxx_tranches(n_firms),
        TranchesSpec::List(list) => list
            .iter()
            .map(|t| CdxTranche {
                name: t.name.clone(),
                members: t.members.clone().unwrap_or_else(|| (0..n_firms).collect()),
                attach: t.attach,
                detach: t.detach,
                spread: t.spread,
                maturity: t.maturity,
                recovery: t.recovery,
                notional0: t.notional0,
                upfront: t.upfront,
            })
            .collect(),
    }
}

/// File-name-safe form of a tranche name.
fn slug(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

fn run_price(mut ctx: Context) -> Result<Vec<PathBuf>, RunError> {
    let price = section(&ctx.config.price, "price")?;
    let set = simulation::load(&ctx.upstream("scenarios.cmcs", "simulate")?)?;
    let tranches = build_tranches(&price.tranches, set.n_firms());
    if tranches.is_empty() {
        return Err(RunError::config("no tranches to price"));
    }
    let mut names = std::collections::HashSet::new();
    for t in &tranches {
        t.validate()?;
        if !names.insert(t.name.as_str()) {
            return Err(RunError::config(format!("tranche name {:?} used twice", t.name)));
        }
    }
    let periods = tranches.iter().map(|t| t.maturity).max().unwrap_or(0);
    let curve = price.curve.build(periods);
    curve.validate()?;
    if let CurveSpec::Explicit { rates, .. } = &price.curve {
        if rates.len() < periods {
            return Err(RunError::config(format!("curve has {} periods, tranches need {periods}", rates.len())));
        }
    }

    let mut reports = Vec::with_capacity(tranches.len());
    let mut columns = Vec::with_capacity(tranches.len());
    let mut histograms = Vec::with_capacity(tranches.len());
    for t in &tranches {
        let fair = fair_spread(t, &set, &curve, price.tolerance)?;
        let quoted_mean = expected_return(t, &set, &curve)?;
        let evaluation_spread = match price.returns_at {
            ReturnsAt::Quoted => t.spread,
            ReturnsAt::Fair => fair,
        };
        let dist = tranche_returns(&t.with_spread(evaluation_spread), &set, &curve)?;
        let stats = price
            .alphas
            .iter()
            .map(|&a| dist.risk_stats(a))
            .collect::<Result<Vec<_>, _>>()?;
        let losses: Vec<f64> = dist.returns.iter().map(|r| -r).collect();
        histograms.push(Histogram::new(&losses, HISTOGRAM_BINS));
        reports.push(TrancheReport {
            name: t.name.clone(),
            attach: t.attach,
            detach: t.detach,
            maturity: t.maturity,
            recovery: t.recovery,
            upfront: t.upfront,
            quoted_spread: t.spread,
            fair_spread: fair,
            expected_return: quoted_mean,
            evaluation_spread,
            stats,
        });
        columns.push(dist.returns);
    }

    ctx.write_json(
        "spreads.json",
        json!({
            "n_scenarios": set.n_scenarios(),
            "scenario_seed": set.seed(),
            "params_fingerprint": set.fingerprint(),
            "returns_at": to_value(&price.returns_at),
            "curve": to_value(&curve),
            "tranches": to_value(&reports),
        }),
    )?;

    let mut csv = String::from("name,attach,detach,maturity,quoted_spread,fair_spread,expected_return,evaluation_spread");
    for a in &price.alphas {
        csv.push_str(&format!(",var_{a},cvar_{a}"));
    }
    csv.push('\n');
    for r in &reports {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}",
            r.name, r.attach, r.detach, r.maturity, r.quoted_spread, r.fair_spread, r.expected_return, r.evaluation_spread
        ));
        for s in &r.stats {
            csv.push_str(&format!(",{},{}", s.var, s.cvar));
        }
        csv.push('\n');
    }
    ctx.write_csv("spreads.csv", &csv)?;

    let mut csv = String::from("scenario");
    for t in &tranches {
        csv.push(',');
        csv.push_str(&t.name);
    }
    csv.push('\n');
    for s in 0..set.n_scenarios() {
        csv.push_str(&s.to_string());
        for col in &columns {
            csv.push_str(&format!(",{}", col[s]));
        }
        csv.push('\n');
    }
    ctx.write_csv("returns.csv", &csv)?;

    for (k, (t, h)) in tranches.iter().zip(&histograms).enumerate() {
        ctx.write_csv(&format!("hist_{:02}_{}.csv", k + 1, slug(&t.name)), &h.to_csv())?;
    }
    Ok(ctx.written)
}

/// Reads returns.csv back as (names, returns[asset][scenario]).
pub fn read_returns(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>), String> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader.headers().map_err(|e| e.to_string())?.clone();
    if headers.get(0) != Some("scenario") || headers.len() < 2 {
        return Err("returns header must be scenario,<asset>,...".into());
    }
    let names: Vec<String> = headers.iter().skip(1).map(str::to_string).collect();
    let mut columns = vec![Vec::new(); names.len()];
    for row in reader.records() {
        let row = row.map_err(|e| e.to_string())?;
        let line = row.position().map_or(0, |p| p.line());
        for (j, col) in columns.iter_mut().enumerate() {
            let v: f64 = row
                .get(j + 1)
                .ok_or_else(|| format!("line {line}: missing column {}", j + 2))?
                .parse()
                .map_err(|e| format!("line {line}: {e}"))?;
            col.push(v);
        }
    }
    if columns[0].is_empty() {
        return Err("returns file has no scenarios".into());
    }
    Ok((names, columns))
}

fn portfolio_problem(ctx: &Context) -> Result<CvarProblem, RunError> {
    let pc = section(&ctx.config.portfolio, "portfolio")?;
    let path = ctx.upstream("returns.csv", "price")?;
    let text = fs::read_to_string(&path).map_err(|e| RunError::data(format!("{}: {e}", path.display())))?;
    let (names, columns) = read_returns(&text).map_err(|e| RunError::data(format!("{}: {e}", path.display())))?;
    let (names, columns) = match &pc.assets {
        None => (names, columns),
        Some(wanted) => {
            let mut picked = (Vec::new(), Vec::new());
            for w in wanted {
                let j = names
                    .iter()
                    .position(|n| n == w)
                    .ok_or_else(|| RunError::config(format!("portfolio asset {w:?} was not priced")))?;
                picked.0.push(names[j].clone());
                picked.1.push(columns[j].clone());
            }
            picked
        }
    };
    let mut problem = CvarProblem::new(columns, pc.target_mean, pc.lower, pc.upper, pc.alpha)?;
    problem.names = names;
    Ok(problem)
}

#[derive(Serialize)]
struct AssetReport {
    name: String,
    mean: f64,
    var: f64,
    cvar: f64,
}

fn run_optimize(mut ctx: Context) -> Result<Vec<PathBuf>, RunError> {
    let problem = portfolio_problem(&ctx)?;
    let solution = optimize_portfolio(&problem)?;
    let assets = problem
        .returns
        .iter()
        .zip(&problem.names)
        .map(|(r, name)| {
            let s = risk_stats(r, problem.alpha)?;
            Ok(AssetReport {
                name: name.clone(),
                mean: -s.mean,
                var: s.var,
                cvar: s.cvar,
            })
        })
        .collect::<Result<Vec<_>, PricingError>>()?;
    let stats = risk_stats(&problem.portfolio_returns(&solution.weights), problem.alpha)?;

    let mut body = to_value(&solution);
    body["target_mean"] = json!(problem.target_mean);
    body["lower"] = json!(problem.lower);
    body["upper"] = json!(problem.upper);
    body["n_scenarios"] = json!(problem.n());
    body["assets"] = to_value(&assets);
    ctx.write_json("solution.json", body)?;

    let mut csv = String::from("name,weight\n");
    for (n, w) in solution.names.iter().zip(&solution.weights) {
        csv.push_str(&format!("{n},{w}\n"));
    }
    ctx.write_csv("weights.csv", &csv)?;
    ctx.write_csv("portfolio_hist.csv", &stats.histogram.to_csv())?;
    Ok(ctx.written)
}

/// Smallest m·w over the box-and-budget set.
fn min_attainable_mean(problem: &CvarProblem) -> f64 {
    let flipped = CvarProblem {
        returns: problem.returns.iter().map(|r| r.iter().map(|v| -v).collect()).collect(),
        ..problem.clone()
    };
    -flipped.max_attainable_mean()
}

fn run_frontier(mut ctx: Context) -> Result<Vec<PathBuf>, RunError> {
    let problem = portfolio_problem(&ctx)?;
    let pc = section(&ctx.config.portfolio, "portfolio")?;
    let grid: Vec<f64> = match &pc.frontier {
        FrontierSpec::Targets { targets } => targets.clone(),
        FrontierSpec::Points { points } => {
            // The mean constraint is slack at the least attainable mean, so
            // this solve gives the minimum-CVaR portfolio.
            let floor = CvarProblem {
                target_mean: min_attainable_mean(&problem),
                ..problem.clone()
            };
            let start = optimize_portfolio(&floor)?.mean;
            let end = problem.max_attainable_mean();
            let k = (*points - 1) as f64;
            (0..*points)
                .map(|i| if i == *points - 1 { end } else { start + (end - start) * i as f64 / k })
                .collect()
        }
    };
    let points = efficient_frontier(&problem, &grid);
    ctx.write_json(
        "frontier.json",
        json!({
            "alpha": problem.alpha,
            "names": problem.names,
            "points": to_value(&points),
        }),
    )?;
    let mut csv = String::from("target_mean,mean,var,cvar,error");
    for n in &problem.names {
        csv.push_str(&format!(",w_{n}"));
    }
    csv.push('\n');
    for p in &points {
        match &p.solution {
            Some(s) => {
                csv.push_str(&format!("{},{},{},{},", p.target_mean, s.mean, s.var, s.cvar));
                for w in &s.weights {
                    csv.push_str(&format!(",{w}"));
                }
            }
            None => {
                let err = p.error.as_deref().unwrap_or("").replace(',', ";");
                csv.push_str(&format!("{},,,,{err}", p.target_mean));
                csv.push_str(&",".repeat(problem.d()));
            }
        }
        csv.push('\n');
    }
    ctx.write_csv("frontier.csv", &csv)?;
    Ok(ctx.written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_line_is_single_line() {
        let e = RunError::data("line 3:\nunknown label");
        assert_eq!(e.to_string(), "ERROR class=data detail=line 3: unknown label");
        assert_eq!(e.exit_code(), 3);
        assert_eq!(RunError::config("x").exit_code(), 2);
        assert_eq!(RunError::numerical("x").exit_code(), 4);
    }

    #[test]
    fn returns_round_trip() {
        let text = "# config_fingerprint=ab seed=1\nscenario,a,b\n0,0.1,-0.25\n1,1e-17,3\n";
        let (names, cols) = read_returns(text).unwrap();
        assert_eq!(names, vec!["a", "b"]);
        assert_eq!(cols, vec![vec![0.1, 1e-17], vec![-0.25, 3.0]]);
        assert!(read_returns("# x\nscenario,a\n0,zz\n").is_err());
    }

    #[test]
    fn error_classes() {
        let e: RunError = PortfolioError::TargetUnattainable { target: 1.0, max: 0.5 }.into();
        assert_eq!(e.class, ErrorClass::Numerical);
        let e: RunError = PricingError::NoBracket("eq".into()).into();
        assert_eq!(e.class, ErrorClass::Numerical);
        let e: RunError = SimulationError::Malformed {
            offset: 9,
            detail: "x".into(),
        }
        .into();
        assert_eq!(e.class, ErrorClass::Data);
    }

    #[test]
    fn slugs() {
        assert_eq!(slug("10Y/mezzanine"), "10Y_mezzanine");
    }
}
