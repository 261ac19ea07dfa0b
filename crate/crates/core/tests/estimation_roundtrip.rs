use cmc_core::estimation::{estimate_parameters, log_likelihood, OptimizerConfig, RatingPanel};
use cmc_core::presets;

fn quick() -> OptimizerConfig {
    OptimizerConfig {
        max_generations: 400,
        restarts: 1,
        ..OptimizerConfig::default()
    }
}

#[test]
fn recovers_synthetic_parameters() {
    let truth = presets::synthetic_m3();
    let panel = presets::synthetic_panel(&truth, 500, 25, 77).unwrap();
    let fit = estimate_parameters(&panel, &truth.p, &OptimizerConfig::default()).unwrap();
    let at_truth = log_likelihood(&panel, &truth).unwrap();
    assert!(fit.loglik >= at_truth - 1e-3, "{} < {at_truth}", fit.loglik);
    assert!((log_likelihood(&panel, &fit.params).unwrap() - fit.loglik).abs() < 1e-8);
    assert!(fit.diagnostics.constraint_residual <= 1e-8);
    for m in 1..=3 {
        for s in 1..=2 {
            if fit.diagnostics.cell_transitions[m - 1][s - 1] >= 200 {
                let (a, b) = (fit.params.q.get(m, s), truth.q.get(m, s));
                assert!((a - b).abs() <= 0.15, "q[{m}][{s}] = {a}, truth {b}");
            }
        }
    }
    for series in &fit.diagnostics.history {
        assert!(series.windows(2).all(|w| w[1] >= w[0]));
    }
}

#[test]
fn same_seed_same_fit() {
    let truth = presets::synthetic_m3();
    let panel = presets::synthetic_panel(&truth, 100, 10, 5).unwrap();
    let a = estimate_parameters(&panel, &truth.p, &quick()).unwrap();
    let b = estimate_parameters(&panel, &truth.p, &quick()).unwrap();
    assert_eq!(a.to_json(), b.to_json());
}

#[test]
fn unobserved_cells_are_flagged() {
    let truth = presets::synthetic_m3();
    let full = presets::synthetic_panel(&truth, 60, 8, 6).unwrap();
    // drop every sector-2 firm starting in class 3 and anything that reaches it
    let keep: Vec<usize> = (0..full.n_firms())
        .filter(|&n| full.sectors()[n] == 1 || full.ratings()[n].iter().all(|c| *c != Some(3)))
        .collect();
    let panel = RatingPanel::new(
        3,
        2,
        keep.iter().map(|&n| full.ratings()[n].clone()).collect(),
        keep.iter().map(|&n| full.sectors()[n]).collect(),
    )
    .unwrap();
    let fit = estimate_parameters(&panel, &truth.p, &quick()).unwrap();
    assert!(!fit.is_identified(3, 2));
    assert!(fit.is_identified(1, 1));
    let json: serde_json::Value = serde_json::from_str(&fit.to_json()).unwrap();
    assert_eq!(json["M"], 3);
    assert_eq!(json["chi"].as_array().unwrap().len(), 8);
    assert!(json["diagnostics"]["unidentified"].as_array().unwrap().iter().any(|c| c["class"] == 3 && c["sector"] == 2));
}

#[test]
fn published_sized_problem_runs_briefly() {
    let truth = presets::published_model();
    let firms = presets::itraxx_portfolio();
    let set = cmc_core::simulation::simulate(&truth, &firms, 6, 1, 3).unwrap();
    let rows = (0..firms.len())
        .map(|k| (0..=6).map(|t| Some(set.rating(0, t, k))).collect())
        .collect();
    let panel = RatingPanel::new(5, 6, rows, firms.iter().map(|f| f.sector).collect()).unwrap();
    let config = OptimizerConfig {
        population: 80,
        max_generations: 30,
        restarts: 1,
        polish: false,
        ..OptimizerConfig::default()
    };
    let fit = estimate_parameters(&panel, &truth.p, &config).unwrap();
    assert!(fit.loglik.is_finite());
    assert!(fit.diagnostics.budget_exhausted);
    assert_eq!(fit.params.chi.masses().len(), 32);
}
