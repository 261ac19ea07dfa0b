use std::fmt;

use serde::{Deserialize, Serialize};

use super::ModelError;

/// Largest number of non-default classes the dense tendency table supports.
pub const MAX_CLASSES: usize = 16;

/// Rating class index. Class 1 is the safest, `M + 1` is the absorbing default.
pub type RatingClass = u8;

/// Set of tendency outcomes, one bit per non-default class: bit `i - 1` is χ_i.
pub type TendencyVector = u32;

#[inline]
pub fn tendency_bit(chi: TendencyVector, class: usize) -> bool {
    (chi >> (class - 1)) & 1 == 1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatingScale {
    /// Number of non-default classes `M`.
    pub m_nondefault: usize,
    /// Optional display labels for classes `1..=M+1`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

impl RatingScale {
    pub fn new(m_nondefault: usize) -> Self {
        Self {
            m_nondefault,
            labels: None,
        }
    }

    pub fn default_class(&self) -> RatingClass {
        (self.m_nondefault + 1) as RatingClass
    }

    pub fn n_classes(&self) -> usize {
        self.m_nondefault + 1
    }
}

/// Per-year transition probabilities from each non-default class.
///
/// Stored as `M` rows of length `M + 1`; the default row is implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    rows: Vec<Vec<f64>>,
}

impl TransitionMatrix {
    /// Builds and validates a row-stochastic matrix.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        let p = Self::from_rows_unchecked(rows)?;
        let issues = p.check(&Tolerances::default());
        if issues.is_empty() {
            Ok(p)
        } else {
            Err(ModelError::Invalid(issues))
        }
    }

    /// Divides every row by its sum. Used for published matrices whose rows
    /// only sum to one up to print rounding.
    pub fn normalized(rows: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        let rows = rows
            .into_iter()
            .map(|r| {
                let s: f64 = r.iter().sum();
                r.into_iter().map(|x| x / s).collect()
            })
            .collect();
        Self::new(rows)
    }

    /// Checks only the shape (M rows of M+1 entries, 1 ≤ M ≤ 16).
    pub fn from_rows_unchecked(rows: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        let m = rows.len();
        if m == 0 || m > MAX_CLASSES {
            return Err(ModelError::Shape(format!(
                "transition matrix needs 1..={MAX_CLASSES} rows, got {m}"
            )));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != m + 1 {
                return Err(ModelError::Shape(format!(
                    "row {} has {} entries, expected {}",
                    i + 1,
                    r.len(),
                    m + 1
                )));
            }
        }
        Ok(Self { rows })
    }

    /// Identity dynamics: every firm keeps its class, nobody defaults.
    pub fn identity(m: usize) -> Self {
        let rows = (0..m)
            .map(|i| {
                let mut r = vec![0.0; m + 1];
                r[i] = 1.0;
                r
            })
            .collect();
        Self { rows }
    }

    pub fn m(&self) -> usize {
        self.rows.len()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    /// Row of class `i` (1-based).
    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i - 1]
    }

    /// p_{i,j}, both 1-based.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i - 1][j - 1]
    }

    /// Probability of a non-deteriorating move from class `i`: Σ_{j ≤ i} p_{i,j}.
    pub fn p_plus(&self, i: usize) -> f64 {
        self.rows[i - 1][..i].iter().sum()
    }

    pub fn p_minus(&self, i: usize) -> f64 {
        self.rows[i - 1][i..].iter().sum()
    }

    /// Default probability p_{i,M+1}.
    pub fn default_probability(&self, i: usize) -> f64 {
        self.rows[i - 1][self.m()]
    }

    pub(crate) fn check(&self, tol: &Tolerances) -> Vec<Violation> {
        let mut out = Vec::new();
        for (i, r) in self.rows.iter().enumerate() {
            for (j, &x) in r.iter().enumerate() {
                if !(0.0..=1.0).contains(&x) {
                    out.push(Violation::new(
                        format!("P[{},{}]", i + 1, j + 1),
                        format!("entry {x} outside [0,1]"),
                    ));
                }
            }
            let s: f64 = r.iter().sum();
            if (s - 1.0).abs() > tol.row_sum {
                out.push(Violation::new(
                    format!("P row {}", i + 1),
                    format!("row sum {s} != 1"),
                ));
            }
        }
        out
    }
}

/// q[m][s]: probability that a firm in class m and sector s follows its
/// idiosyncratic component.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    q: Vec<Vec<f64>>,
}

impl CouplingMatrix {
    pub fn new(q: Vec<Vec<f64>>) -> Result<Self, ModelError> {
        let s = q.first().map_or(0, Vec::len);
        if q.is_empty() || s == 0 || q.iter().any(|r| r.len() != s) {
            return Err(ModelError::Shape(
                "coupling matrix must be a nonempty M x S matrix".into(),
            ));
        }
        Ok(Self { q })
    }

    pub fn uniform(m: usize, s: usize, value: f64) -> Self {
        Self {
            q: vec![vec![value; s]; m],
        }
    }

    pub fn m(&self) -> usize {
        self.q.len()
    }

    pub fn sectors(&self) -> usize {
        self.q[0].len()
    }

    /// q_{m,s}, both 1-based.
    pub fn get(&self, m: usize, s: usize) -> f64 {
        self.q[m - 1][s - 1]
    }

    pub fn set(&mut self, m: usize, s: usize, value: f64) {
        self.q[m - 1][s - 1] = value;
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.q
    }
}

/// Joint law of the tendency vector χ, dense over all 2^M outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct TendencyDistribution {
    m: usize,
    mass: Vec<f64>,
}

impl TendencyDistribution {
    pub fn new(m: usize, mass: Vec<f64>) -> Result<Self, ModelError> {
        if m == 0 || m > MAX_CLASSES {
            return Err(ModelError::Shape(format!(
                "tendency distribution needs 1..={MAX_CLASSES} classes, got {m}"
            )));
        }
        if mass.len() != 1 << m {
            return Err(ModelError::Shape(format!(
                "tendency distribution for M={m} needs {} masses, got {}",
                1usize << m,
                mass.len()
            )));
        }
        Ok(Self { m, mass })
    }

    /// Independent tendencies with the given marginals P(χ_i = 1).
    pub fn independent(p_plus: &[f64]) -> Self {
        let m = p_plus.len();
        let mass = (0..1u32 << m)
            .map(|chi| {
                (1..=m)
                    .map(|i| {
                        if tendency_bit(chi, i) {
                            p_plus[i - 1]
                        } else {
                            1.0 - p_plus[i - 1]
                        }
                    })
                    .product()
            })
            .collect();
        Self { m, mass }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn mass(&self, chi: TendencyVector) -> f64 {
        self.mass[chi as usize]
    }

    /// P(χ_i = 1).
    pub fn marginal(&self, class: usize) -> f64 {
        self.mass
            .iter()
            .enumerate()
            .filter(|(k, _)| tendency_bit(*k as TendencyVector, class))
            .map(|(_, &x)| x)
            .sum()
    }

    /// Largest absolute violation among normalization and the marginal constraints.
    pub fn constraint_residual(&self, p_plus: &[f64]) -> f64 {
        let total: f64 = self.mass.iter().sum();
        let mut worst = (total - 1.0).abs();
        for i in 1..=self.m {
            worst = worst.max((self.marginal(i) - p_plus[i - 1]).abs());
        }
        for &x in &self.mass {
            if x < 0.0 {
                worst = worst.max(-x);
            }
        }
        worst
    }

    pub(crate) fn check(&self, p_plus: &[f64], tol: &Tolerances) -> Vec<Violation> {
        let mut out = Vec::new();
        for (k, &x) in self.mass.iter().enumerate() {
            if !(x >= 0.0) {
                out.push(Violation::new(
                    format!("chi[{k}]"),
                    format!("negative or NaN mass {x}"),
                ));
            }
        }
        let total: f64 = self.mass.iter().sum();
        if (total - 1.0).abs() > tol.chi_total {
            out.push(Violation::new("chi", format!("total mass {total} != 1")));
        }
        if p_plus.len() == self.m {
            for i in 1..=self.m {
                let got = self.marginal(i);
                if (got - p_plus[i - 1]).abs() > tol.marginal {
                    out.push(Violation::new(
                        format!("chi marginal {i}"),
                        format!("P(chi_{i}=1) = {got} but p_plus = {}", p_plus[i - 1]),
                    ));
                }
            }
        }
        out
    }
}

/// Validation tolerances for model parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    pub row_sum: f64,
    pub chi_total: f64,
    pub marginal: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            row_sum: 1e-12,
            chi_total: 1e-10,
            marginal: 1e-8,
        }
    }
}

/// One broken invariant and where it was found.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub location: String,
    pub message: String,
}

impl Violation {
    pub fn new(location: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            location: location.into(),
            message: message.into(),
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.location, self.message)
    }
}

/// Full parameterization of the coupled chain: (P, Q, P_χ).
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub scale: RatingScale,
    pub p: TransitionMatrix,
    pub q: CouplingMatrix,
    pub chi: TendencyDistribution,
    pub sectors: usize,
}

impl ModelParams {
    /// Assembles and validates parameters with default tolerances.
    pub fn new(
        p: TransitionMatrix,
        q: CouplingMatrix,
        chi: TendencyDistribution,
    ) -> Result<Self, ModelError> {
        let params = Self::from_parts_unchecked(p, q, chi);
        let report = params.validate();
        if report.is_empty() {
            Ok(params)
        } else {
            Err(ModelError::Invalid(report))
        }
    }

    pub fn from_parts_unchecked(
        p: TransitionMatrix,
        q: CouplingMatrix,
        chi: TendencyDistribution,
    ) -> Self {
        let m = p.m();
        let sectors = q.sectors();
        Self {
            scale: RatingScale::new(m),
            p,
            q,
            chi,
            sectors,
        }
    }

    pub fn m(&self) -> usize {
        self.scale.m_nondefault
    }

    pub fn default_class(&self) -> RatingClass {
        self.scale.default_class()
    }

    pub fn p_plus(&self) -> Vec<f64> {
        (1..=self.m()).map(|i| self.p.p_plus(i)).collect()
    }

    /// Every violated invariant; empty means valid.
    pub fn validate(&self) -> Vec<Violation> {
        self.validate_with(&Tolerances::default())
    }

    pub fn validate_with(&self, tol: &Tolerances) -> Vec<Violation> {
        let mut out = Vec::new();
        let m = self.scale.m_nondefault;
        if m == 0 || m > MAX_CLASSES {
            out.push(Violation::new("scale", format!("M = {m} outside 1..={MAX_CLASSES}")));
            return out;
        }
        if let Some(labels) = &self.scale.labels {
            if labels.len() != m + 1 {
                out.push(Violation::new(
                    "scale.labels",
                    format!("{} labels for {} classes", labels.len(), m + 1),
                ));
            }
        }
        if self.p.m() != m {
            out.push(Violation::new("P", format!("{} rows but M = {m}", self.p.m())));
        }
        if self.q.m() != m {
            out.push(Violation::new("Q", format!("{} rows but M = {m}", self.q.m())));
        }
        if self.q.sectors() != self.sectors || self.sectors == 0 {
            out.push(Violation::new(
                "Q",
                format!("{} columns but S = {}", self.q.sectors(), self.sectors),
            ));
        }
        if self.chi.m() != m {
            out.push(Violation::new("chi", format!("built for M = {}", self.chi.m())));
        }
        if !out.is_empty() {
            return out;
        }
        out.extend(self.p.check(tol));
        for (i, r) in self.q.rows().iter().enumerate() {
            for (s, &x) in r.iter().enumerate() {
                if !(0.0..=1.0).contains(&x) {
                    out.push(Violation::new(
                        format!("Q[{},{}]", i + 1, s + 1),
                        format!("entry {x} outside [0,1]"),
                    ));
                }
            }
        }
        out.extend(self.chi.check(&self.p_plus(), tol));
        out
    }

    /// Checks that a firm's class and sector fit this model.
    pub fn check_state(&self, state: &FirmState) -> Result<(), ModelError> {
        if state.rating == 0 || state.rating as usize > self.m() + 1 {
            return Err(ModelError::State(format!(
                "rating {} outside 1..={}",
                state.rating,
                self.m() + 1
            )));
        }
        if state.sector == 0 || state.sector > self.sectors {
            return Err(ModelError::State(format!(
                "sector {} outside 1..={}",
                state.sector, self.sectors
            )));
        }
        Ok(())
    }
}

/// A firm's current class and its sector (both 1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FirmState {
    pub rating: RatingClass,
    pub sector: usize,
}

impl FirmState {
    pub fn new(rating: RatingClass, sector: usize) -> Self {
        Self { rating, sector }
    }
}

#[derive(Serialize, Deserialize)]
#[allow(non_snake_case)]
struct ParamsDocument {
    M: usize,
    S: usize,
    P: Vec<Vec<f64>>,
    Q: Vec<Vec<f64>>,
    chi: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl ModelParams {
    pub fn to_json(&self) -> String {
        let doc = ParamsDocument {
            M: self.m(),
            S: self.sectors,
            P: self.p.rows().to_vec(),
            Q: self.q.rows().to_vec(),
            chi: self.chi.masses().to_vec(),
            labels: self.scale.labels.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("params serialize")
    }

    /// Parses the JSON document and re-validates every invariant.
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        Self::from_json_with(text, &Tolerances::default())
    }

    pub fn from_json_with(text: &str, tol: &Tolerances) -> Result<Self, ModelError> {
        let doc: ParamsDocument = serde_json::from_str(text)?;
        let p = TransitionMatrix::from_rows_unchecked(doc.P)?;
        if p.m() != doc.M {
            return Err(ModelError::Shape(format!(
                "\"M\" = {} but P has {} rows",
                doc.M,
                p.m()
            )));
        }
        let q = CouplingMatrix::new(doc.Q)?;
        if q.sectors() != doc.S {
            return Err(ModelError::Shape(format!(
                "\"S\" = {} but Q has {} columns",
                doc.S,
                q.sectors()
            )));
        }
        let chi = TendencyDistribution::new(doc.M, doc.chi)?;
        let mut params = Self::from_parts_unchecked(p, q, chi);
        params.scale.labels = doc.labels;
        let report = params.validate_with(tol);
        if report.is_empty() {
            Ok(params)
        } else {
            Err(ModelError::Invalid(report))
        }
    }
}
