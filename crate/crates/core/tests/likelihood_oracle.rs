mod common;

use cmc_core::estimation::{count_transitions, log_likelihood, log_likelihood_counts, PreparedLikelihood};
use cmc_core::rng::RandomSource;

use common::{brute_path_probability, p_product, random_panel, random_params};

#[test]
fn likelihood_matches_enumeration() {
    let source = RandomSource::new(11);
    for k in 0..60 {
        let mut rng = source.stream(k);
        let m = 1 + rng.below(3);
        let s = 1 + rng.below(2);
        let n = 1 + rng.below(4);
        let t = 2 + rng.below(2);
        let params = random_params(&mut rng, m, s);
        let panel = random_panel(&mut rng, m, s, n, t, 0.0);
        let ll = log_likelihood(&panel, &params).unwrap();
        let lhs = ll.exp() * p_product(&params, &panel);
        let rhs = brute_path_probability(&params, &panel);
        assert!(((lhs - rhs) / rhs).abs() <= 1e-10, "instance {k}: {lhs} vs {rhs}");
    }
}

#[test]
fn masked_cells_drop_their_transitions() {
    let source = RandomSource::new(12);
    for k in 0..40 {
        let mut rng = source.stream(k);
        let params = random_params(&mut rng, 2, 2);
        let panel = random_panel(&mut rng, 2, 2, 3, 4, 0.25);
        let lhs = log_likelihood(&panel, &params).unwrap().exp() * p_product(&params, &panel);
        let rhs = brute_path_probability(&params, &panel);
        assert!(((lhs - rhs) / rhs).abs() <= 1e-10, "instance {k}");
    }
}

#[test]
fn prepared_and_count_forms_agree() {
    let source = RandomSource::new(13);
    for k in 0..30 {
        let mut rng = source.stream(k);
        let params = random_params(&mut rng, 3, 2);
        let panel = random_panel(&mut rng, 3, 2, 20, 6, 0.1);
        let counts = count_transitions(&panel);
        let a = log_likelihood(&panel, &params).unwrap();
        let b = log_likelihood_counts(&counts, &params).unwrap();
        let c = PreparedLikelihood::new(&counts, &params.p).eval(&params.q, &params.chi).unwrap();
        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        assert!((a - c).abs() <= 1e-10 * a.abs().max(1.0), "{a} vs {c}");
    }
}
