//! Published reference parameters and the iTraxx-shaped experiment setup.
//!
//! The published figures come from proprietary histories and are used only
//! as realistic inputs and magnitude anchors.

use crate::estimation::{repair_tendency, RatingPanel};
use crate::pricing::CdxTranche;
use crate::ratings::{CouplingMatrix, FirmState, ModelParams, RatingClass, TendencyDistribution, TransitionMatrix};
use crate::simulation::{simulate, SimulationError};

/// Published yearly transition matrix for the clubbed 6-class scale, as printed
/// (rows are off by up to 1e-4 from unit sum).
pub const PUBLISHED_P_RAW: [[f64; 6]; 5] = [
    [0.9191, 0.0753, 0.0044, 0.0009, 0.0001, 0.0001],
    [0.0335, 0.8958, 0.0657, 0.0036, 0.0006, 0.0009],
    [0.0080, 0.0674, 0.8554, 0.0665, 0.0011, 0.0016],
    [0.0039, 0.0092, 0.0794, 0.8678, 0.0244, 0.0153],
    [0.0023, 0.0034, 0.0045, 0.1759, 0.6009, 0.2131],
];

/// Published coupling estimate, classes × sectors.
pub const PUBLISHED_Q: [[f64; 6]; 5] = [
    [0.1981, 0.0818, 0.0138, 0.0001, 0.1467, 0.3089],
    [0.3854e-7, 0.2008e-8, 0.0655, 0.8457e-6, 0.0609, 0.0356],
    [0.2732e-10, 0.3337e-6, 0.0344, 0.0005, 0.0494, 0.1752e-5],
    [0.0299, 0.0487, 0.1518, 0.0341, 0.0076, 0.0300],
    [0.0816, 0.1739, 0.4437, 0.4092, 0.2482e-5, 0.0],
];

/// Published tendency table indexed by the printed 5-digit pattern read as a
/// binary number (first printed column most significant).
///
/// The printed columns run opposite to the class numbering: their marginals
/// only line up with p⁺ when printed column c is taken as class 6 − c. With
/// that reading the pattern value is exactly the χ index used here
/// (bit i − 1 = χ_i).
pub const PUBLISHED_CHI_TABLE: [f64; 32] = [
    0.0058, 0.0001, 0.0001, 0.2670e-4, 0.2743e-5, 0.4057e-6, 0.9493e-4, 0.0335,
    0.3368e-4, 0.1811e-4, 0.0001, 0.2545e-6, 0.0081, 0.0005, 0.0312, 0.1335,
    0.4814e-5, 0.2059e-4, 0.1526e-4, 0.2533e-5, 0.2776e-5, 0.9985e-6, 0.4697e-4, 0.1352e-5,
    0.4803e-4, 0.0219, 0.0002, 0.0409, 0.0341, 0.0001, 0.0011, 0.6885,
];

pub const SP_CLUBBING: [(&str, u8); 10] = [
    ("AAA", 1),
    ("AA", 1),
    ("A", 2),
    ("BBB", 3),
    ("BB", 4),
    ("B", 4),
    ("CCC", 5),
    ("CC", 5),
    ("C", 5),
    ("D", 6),
];

pub const SIC_SECTORS: [&str; 6] = [
    "Mining and Construction",
    "Manufacturing",
    "Transportation, Technology, and Utility",
    "Trade",
    "Finance",
    "Services",
];

/// Row-normalized published P.
pub fn published_p() -> TransitionMatrix {
    TransitionMatrix::normalized(PUBLISHED_P_RAW.iter().map(|r| r.to_vec()).collect())
        .expect("published P is a valid shape")
}

pub fn published_q() -> CouplingMatrix {
    CouplingMatrix::new(PUBLISHED_Q.iter().map(|r| r.to_vec()).collect()).expect("published Q lies in [0,1]")
}

/// Published tendency table repaired onto the marginals of [`published_p`].
pub fn published_chi() -> TendencyDistribution {
    let p = published_p();
    let p_plus: Vec<f64> = (1..=5).map(|i| p.p_plus(i)).collect();
    repair_tendency(&PUBLISHED_CHI_TABLE, &p_plus).expect("published table repairs")
}

/// The published (P, Q, P_χ) as a valid parameter set.
pub fn published_model() -> ModelParams {
    ModelParams::new(published_p(), published_q(), published_chi()).expect("published model validates")
}

/// 125 investment-grade names: 15 in class 1, 55 in class 2, 55 in class 3,
/// sectors cycling through 1..=6.
pub fn itraxx_portfolio() -> Vec<FirmState> {
    (0..125)
        .map(|k| {
            let rating = if k < 15 {
                1
            } else if k < 70 {
                2
            } else {
                3
            };
            FirmState::new(rating, k % 6 + 1)
        })
        .collect()
}

pub const TRANCHE_BANDS: [(f64, f64); 5] = [(0.0, 0.03), (0.03, 0.06), (0.06, 0.09), (0.09, 0.12), (0.12, 0.22)];
pub const TRANCHE_NAMES: [&str; 5] = ["equity", "mezzanine", "senior1", "senior2", "supersenior"];
pub const MATURITIES: [usize; 3] = [5, 7, 10];

/// Quoted running spreads (mid column) by maturity then band.
pub const MARKET_SPREADS: [[f64; 5]; 3] = [
    [0.05, 0.048, 0.0309, 0.0215, 0.0109],
    [0.05, 0.0563, 0.0352, 0.0237, 0.012],
    [0.05, 0.0679, 0.0397, 0.026, 0.0134],
];

/// Equity upfront quotes (bid, ask) by maturity.
pub const EQUITY_UPFRONT: [(f64, f64); 3] = [(0.394, 0.409), (0.449, 0.458), (0.494, 0.504)];

/// The 15 tranches (5 bands × 3 maturities) on firms `0..n_names`, recovery
/// 0.4, unit notional, quoted spreads; equity carries the mid upfront.
pub fn itraxx_tranches(n_names: usize) -> Vec<CdxTranche> {
    let members: Vec<usize> = (0..n_names).collect();
    let mut out = Vec::with_capacity(15);
    for (mi, &maturity) in MATURITIES.iter().enumerate() {
        for (bi, &(attach, detach)) in TRANCHE_BANDS.iter().enumerate() {
            let upfront = if bi == 0 {
                let (b, a) = EQUITY_UPFRONT[mi];
                0.5 * (b + a)
            } else {
                0.0
            };
            out.push(CdxTranche {
                name: format!("{}Y/{}", maturity, TRANCHE_NAMES[bi]),
                members: members.clone(),
                attach,
                detach,
                spread: MARKET_SPREADS[mi][bi],
                maturity,
                recovery: 0.4,
                notional0: 1.0,
                upfront,
            });
        }
    }
    out
}

/// Three classes, two sectors: the reference model for synthetic panels.
///
/// P_χ is an even mix of the independent and the comonotone law with the
/// marginals of P, so tendencies are positively dependent but not identical.
pub fn synthetic_m3() -> ModelParams {
    let p = TransitionMatrix::new(vec![
        vec![0.90, 0.08, 0.015, 0.005],
        vec![0.06, 0.84, 0.08, 0.02],
        vec![0.02, 0.08, 0.78, 0.12],
    ])
    .expect("valid rows");
    let q = CouplingMatrix::new(vec![vec![0.3, 0.7], vec![0.5, 0.2], vec![0.6, 0.4]]).expect("valid q");
    let p_plus: Vec<f64> = (1..=3).map(|i| p.p_plus(i)).collect();
    let indep = TendencyDistribution::independent(&p_plus);
    let como = comonotone(&p_plus);
    let mass = indep.masses().iter().zip(&como).map(|(a, b)| 0.5 * (a + b)).collect();
    let chi = TendencyDistribution::new(3, mass).expect("mixture is a distribution");
    ModelParams::new(p, q, chi).expect("synthetic model validates")
}

/// Law of χ_i = 1{U ≤ p_i} for a single uniform U.
fn comonotone(p_plus: &[f64]) -> Vec<f64> {
    let m = p_plus.len();
    let mut cuts: Vec<f64> = p_plus.to_vec();
    cuts.push(0.0);
    cuts.push(1.0);
    cuts.sort_by(f64::total_cmp);
    let mut mass = vec![0.0; 1 << m];
    for w in cuts.windows(2) {
        if w[1] > w[0] {
            let u = 0.5 * (w[0] + w[1]);
            let chi = (0..m).filter(|&i| u <= p_plus[i]).fold(0usize, |acc, i| acc | (1 << i));
            mass[chi] += w[1] - w[0];
        }
    }
    mass
}

/// One simulated history of `n_firms` firms over `periods` years, as a fully
/// observed panel with `periods + 1` columns. Initial classes cycle through
/// 1..=M and sectors through 1..=S.
pub fn synthetic_panel(
    params: &ModelParams,
    n_firms: usize,
    periods: usize,
    seed: u64,
) -> Result<RatingPanel, SimulationError> {
    let (m, s) = (params.m(), params.sectors);
    let firms: Vec<FirmState> = (0..n_firms)
        .map(|k| FirmState::new((k % m + 1) as RatingClass, k % s + 1))
        .collect();
    let set = simulate(params, &firms, periods, 1, seed)?;
    let rows = (0..n_firms)
        .map(|k| (0..=periods).map(|t| Some(set.rating(0, t, k))).collect())
        .collect();
    let ids = (0..n_firms).map(|k| format!("f{k:05}")).collect();
    RatingPanel::with_ids(m, s, rows, firms.iter().map(|f| f.sector).collect(), ids)
        .map_err(|e| SimulationError::Invalid(e.to_string()))
}
