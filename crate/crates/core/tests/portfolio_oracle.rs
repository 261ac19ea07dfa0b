mod common;

use cmc_core::portfolio::{
    build_lp, efficient_frontier, optimize_portfolio, optimize_portfolio_primal, solve_lp, CvarProblem,
    PortfolioError,
};
use cmc_core::pricing::risk_stats;
use cmc_core::rng::{RandomSource, Stream};

use common::{ru_scan_cvar, three_asset_oracle};

fn random_returns(rng: &mut Stream, d: usize, n: usize) -> Vec<Vec<f64>> {
    (0..d)
        .map(|j| (0..n).map(|_| 0.02 * j as f64 + rng.uniform() - 0.5).collect())
        .collect()
}

fn mean_of(r: &[f64]) -> f64 {
    r.iter().sum::<f64>() / r.len() as f64
}

#[test]
fn matches_three_asset_oracle() {
    let source = RandomSource::new(31);
    for k in 0..40 {
        let mut rng = source.stream(k);
        let returns = random_returns(&mut rng, 3, 10);
        let means: Vec<f64> = returns.iter().map(|r| mean_of(r)).collect();
        let lo_mean = means.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi_mean = means.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mu = lo_mean + rng.uniform() * (hi_mean - lo_mean) * 0.8;
        let alpha = [0.5, 0.7, 0.8, 0.9][k as usize % 4];
        let (lo, hi) = (-0.5, 1.2);
        let (oracle, _) = three_asset_oracle(&returns, mu, lo, hi, alpha).expect("feasible");
        let p = CvarProblem::new(returns, mu, lo, hi, alpha).unwrap();
        let dual = optimize_portfolio(&p).unwrap();
        let primal = optimize_portfolio_primal(&p).unwrap();
        assert!((dual.cvar - oracle).abs() < 1e-6, "instance {k}: {} vs {oracle}", dual.cvar);
        assert!((primal.cvar - oracle).abs() < 1e-6, "instance {k}");
        assert!((dual.lp_objective - dual.cvar).abs() < 1e-8);
        assert!(dual.mean >= mu - 1e-10);
        assert!((dual.weights.iter().sum::<f64>() - 1.0).abs() < 1e-8);
        assert!(dual.weights.iter().all(|&w| w >= lo - 1e-8 && w <= hi + 1e-8));
    }
}

#[test]
fn lp_inner_minimum_is_cvar_for_fixed_weights() {
    let source = RandomSource::new(32);
    for k in 0..50 {
        let mut rng = source.stream(k);
        let d = 2 + rng.below(4);
        let n = 5 + rng.below(40);
        let returns = random_returns(&mut rng, d, n);
        let raw: Vec<f64> = (0..d).map(|_| rng.uniform() - 0.2).collect();
        let total: f64 = raw.iter().sum();
        let w: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let alpha = 0.5 + 0.49 * rng.uniform();
        let mut p = CvarProblem::new(returns, -1e3, -10.0, 10.0, alpha).unwrap();
        p.lower = w.clone();
        p.upper = w.clone();
        let losses: Vec<f64> = p.portfolio_returns(&w).iter().map(|r| -r).collect();
        let scan = ru_scan_cvar(&losses, alpha);
        let lp = solve_lp(&build_lp(&p).unwrap()).unwrap();
        assert!((lp.objective - scan).abs() < 1e-8, "instance {k}: {} vs {scan}", lp.objective);
        let direct = risk_stats(&p.portfolio_returns(&w), alpha).unwrap().cvar;
        assert!((direct - scan).abs() < 1e-10);
    }
}

#[test]
fn translation_and_homogeneity() {
    let source = RandomSource::new(33);
    for k in 0..20 {
        let mut rng = source.stream(k);
        let returns = random_returns(&mut rng, 4, 60);
        let mu = returns.iter().map(|r| mean_of(r)).sum::<f64>() / 4.0;
        let base = CvarProblem::new(returns.clone(), mu, -0.5, 0.8, 0.9).unwrap();
        let s0 = optimize_portfolio(&base).unwrap();

        let c = 0.37;
        let shifted = CvarProblem::new(
            returns.iter().map(|r| r.iter().map(|v| v - c).collect()).collect(),
            mu - c,
            -0.5,
            0.8,
            0.9,
        )
        .unwrap();
        let s1 = optimize_portfolio(&shifted).unwrap();
        assert!((s1.lp_objective - (s0.lp_objective + c)).abs() < 1e-8);
        for (a, b) in s0.weights.iter().zip(&s1.weights) {
            assert!((a - b).abs() < 1e-8, "instance {k}: {:?} vs {:?}", s0.weights, s1.weights);
        }

        let lambda = 2.5;
        let scaled = CvarProblem::new(
            returns.iter().map(|r| r.iter().map(|v| v * lambda).collect()).collect(),
            mu * lambda,
            -0.5,
            0.8,
            0.9,
        )
        .unwrap();
        let s2 = optimize_portfolio(&scaled).unwrap();
        assert!((s2.lp_objective - lambda * s0.lp_objective).abs() < 1e-8);
        for (a, b) in s0.weights.iter().zip(&s2.weights) {
            assert!((a - b).abs() < 1e-8);
        }
    }
}

#[test]
fn frontier_risk_rises_with_target() {
    let source = RandomSource::new(34);
    for k in 0..5 {
        let mut rng = source.stream(k);
        let returns = random_returns(&mut rng, 3, 200);
        let p = CvarProblem::new(returns, 0.0, -0.5, 1.0, 0.9).unwrap();
        let top = p.max_attainable_mean();
        let grid: Vec<f64> = (0..12).map(|i| -0.1 + (top + 0.1) * i as f64 / 10.0).collect();
        let points = efficient_frontier(&p, &grid);
        let solved: Vec<f64> = points.iter().filter_map(|pt| pt.solution.as_ref().map(|s| s.cvar)).collect();
        assert!(solved.windows(2).all(|w| w[1] >= w[0] - 1e-9), "{solved:?}");
        // the last target lies above the attainable maximum
        assert!(points[11].solution.is_none() && points[11].error.is_some());
        assert_eq!(solved.len(), 11);
    }
}

#[test]
fn frontier_of_one_asset_repeats() {
    let p = CvarProblem::new(vec![vec![0.1, -0.3, 0.2, 0.05]], 0.0, 1.0, 1.0, 0.75).unwrap();
    let points = efficient_frontier(&p, &[-1.0, 0.0, 0.01]);
    let expected = risk_stats(&p.returns[0], 0.75).unwrap().cvar;
    for pt in &points {
        let s = pt.solution.as_ref().unwrap();
        assert_eq!(s.weights, vec![1.0]);
        assert!((s.cvar - expected).abs() < 1e-12);
    }
    assert!(matches!(
        optimize_portfolio(&CvarProblem { target_mean: 0.5, ..p }),
        Err(PortfolioError::TargetUnattainable { .. })
    ));
}

#[test]
fn dominating_asset_takes_the_cap() {
    // asset 0 has higher return in every scenario
    let a: Vec<f64> = (0..50).map(|s| 0.1 + (s as f64 * 0.37).sin() * 0.05).collect();
    let b: Vec<f64> = a.iter().map(|v| v - 0.2).collect();
    let p = CvarProblem::new(vec![a, b], -1.0, 0.0, 0.7, 0.9).unwrap();
    let s = optimize_portfolio(&p).unwrap();
    assert!((s.weights[0] - 0.7).abs() < 1e-9 && (s.weights[1] - 0.3).abs() < 1e-9);
}

#[test]
fn optimum_beats_every_feasible_single_asset() {
    let mut rng = RandomSource::new(35).stream(0);
    let returns = random_returns(&mut rng, 6, 400);
    let means: Vec<f64> = returns.iter().map(|r| mean_of(r)).collect();
    let mu = means.iter().cloned().fold(f64::INFINITY, f64::min);
    let p = CvarProblem::new(returns.clone(), mu, -1.0, 1.0, 0.9).unwrap();
    let s = optimize_portfolio(&p).unwrap();
    for r in &returns {
        assert!(s.cvar <= risk_stats(r, 0.9).unwrap().cvar + 1e-10);
    }
}
