mod common;

use cmc_core::presets;
use cmc_core::ratings::{CouplingMatrix, FirmState, ModelParams, RatingClass, TendencyDistribution, TransitionMatrix};
use cmc_core::rng::RandomSource;
use cmc_core::simulation::{self, default_counts, simulate, SimulationError};

use common::{brute_step_probability, random_params};

/// Exact law of D^T by enumerating every intermediate joint outcome.
fn exact_default_law(params: &ModelParams, initial: &[FirmState], horizon: usize) -> Vec<f64> {
    let c = params.m() + 1;
    let n = initial.len();
    let mut law: Vec<(Vec<RatingClass>, f64)> = vec![(initial.iter().map(|f| f.rating).collect(), 1.0)];
    for _ in 0..horizon {
        let mut next = Vec::new();
        for (ratings, p) in &law {
            let states: Vec<FirmState> = ratings.iter().zip(initial).map(|(&r, f)| FirmState::new(r, f.sector)).collect();
            for code in 0..c.pow(n as u32) {
                let outcome: Vec<RatingClass> = (0..n).map(|k| (code / c.pow(k as u32) % c + 1) as RatingClass).collect();
                let q = brute_step_probability(params, &states, &outcome);
                if q > 0.0 {
                    next.push((outcome, p * q));
                }
            }
        }
        law = next;
    }
    let mut out = vec![0.0; n + 1];
    for (ratings, p) in law {
        out[ratings.iter().filter(|&&r| r as usize == c).count()] += p;
    }
    out
}

#[test]
fn terminal_defaults_match_enumeration() {
    let mut rng = RandomSource::new(21).stream(0);
    let params = random_params(&mut rng, 2, 2);
    let initial = [FirmState::new(1, 1), FirmState::new(2, 2)];
    let exact = exact_default_law(&params, &initial, 2);
    assert!((exact.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    let n = 200_000;
    let set = simulate(&params, &initial, 2, n, 99).unwrap();
    let counts = default_counts(&set, &[0, 1]).unwrap();
    let mut freq = vec![0.0; 3];
    for path in &counts {
        freq[path[2] as usize] += 1.0 / n as f64;
    }
    for d in 0..3 {
        assert!((freq[d] - exact[d]).abs() < 0.005, "D={d}: {} vs {}", freq[d], exact[d]);
    }
}

#[test]
fn reproducible_and_prefix_stable() {
    let params = presets::published_model();
    let firms = presets::itraxx_portfolio();
    let a = simulate(&params, &firms, 5, 300, 7).unwrap();
    let b = simulate(&params, &firms, 5, 300, 7).unwrap();
    assert_eq!(simulation::to_bytes(&a), simulation::to_bytes(&b));
    let short = simulate(&params, &firms, 5, 120, 7).unwrap();
    assert_eq!(short.cells(), a.truncated(120).cells());
    let other = simulate(&params, &firms, 5, 300, 8).unwrap();
    assert_ne!(a.cells(), other.cells());
}

#[test]
fn paths_respect_absorption_and_defaults_never_fall() {
    let params = presets::published_model();
    let firms = presets::itraxx_portfolio();
    let set = simulate(&params, &firms, 10, 500, 3).unwrap();
    for s in 0..set.n_scenarios() {
        for k in 0..set.n_firms() {
            assert_eq!(set.rating(s, 0, k), firms[k].rating);
            for t in 1..=10 {
                if set.rating(s, t - 1, k) == 6 {
                    assert_eq!(set.rating(s, t, k), 6);
                }
            }
        }
    }
    let members: Vec<usize> = (0..125).collect();
    for path in default_counts(&set, &members).unwrap() {
        assert_eq!(path[0], 0);
        assert!(path.windows(2).all(|w| w[0] <= w[1]));
    }
    assert!(matches!(default_counts(&set, &[125]), Err(SimulationError::UnknownFirm(125))));
}

#[test]
fn identity_dynamics_are_constant() {
    let p = TransitionMatrix::identity(3);
    let q = CouplingMatrix::uniform(3, 2, 0.5);
    let mut mass = vec![0.0; 8];
    mass[7] = 1.0;
    let params = ModelParams::new(p, q, TendencyDistribution::new(3, mass).unwrap()).unwrap();
    let firms: Vec<FirmState> = (0..9).map(|k| FirmState::new((k % 3 + 1) as RatingClass, k % 2 + 1)).collect();
    let set = simulate(&params, &firms, 4, 50, 1).unwrap();
    for s in 0..50 {
        for t in 0..=4 {
            for k in 0..9 {
                assert_eq!(set.rating(s, t, k), firms[k].rating);
            }
        }
    }
}

#[test]
fn better_credit_defaults_less() {
    let params = presets::published_model();
    let strong: Vec<FirmState> = (0..60).map(|k| FirmState::new(1 + (k % 2) as RatingClass, k % 6 + 1)).collect();
    let weak: Vec<FirmState> = strong.iter().map(|f| FirmState::new(f.rating + 2, f.sector)).collect();
    let members: Vec<usize> = (0..60).collect();
    let mean_defaults = |firms: &[FirmState]| {
        let set = simulate(&params, firms, 10, 2000, 17).unwrap();
        let d = default_counts(&set, &members).unwrap();
        d.iter().map(|p| p[10] as f64).sum::<f64>() / d.len() as f64
    };
    assert!(mean_defaults(&strong) < mean_defaults(&weak));
}

#[test]
fn file_round_trip_and_diagnostics() {
    let params = presets::synthetic_m3();
    let firms = [FirmState::new(1, 1), FirmState::new(3, 2)];
    let set = simulation::simulate_named(&params, &firms, vec!["x".into(), "y".into()], 3, 20, 4).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.cmcs");
    simulation::save(&set, &path).unwrap();
    let back = simulation::load(&path).unwrap();
    assert_eq!(back, set);

    let mut bytes = simulation::to_bytes(&set);
    assert!(matches!(simulation::from_bytes(&bytes[..3]), Err(SimulationError::Malformed { .. })));
    let last = bytes.len() - 1;
    bytes[last] = 9;
    match simulation::from_bytes(&bytes) {
        Err(SimulationError::Malformed { offset, .. }) => assert_eq!(offset, last as u64),
        other => panic!("{other:?}"),
    }

    let mut csv = Vec::new();
    simulation::export_csv(&set, &mut csv).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("scenario,t,firm_id,rating\n0,0,x,1\n"));
    assert_eq!(text.lines().count(), 1 + 20 * 4 * 2);
}
