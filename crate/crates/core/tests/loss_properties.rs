//! Limit identities and order properties of the loss family, checked on
//! random simplex points, plus proptest invariants for softmax.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use robustssl::losses::{
    bce_loss, ce_loss, gce_loss, loss_value, mae_loss, rce_loss, softmax, LossFamily, OneHotLabel,
    ProbDist, RobustLossConfig, PROB_EPSILON,
};

/// Uniform Dirichlet sample: normalized exponentials.
fn random_simplex_point(rng: &mut ChaCha8Rng, k: usize) -> ProbDist {
    loop {
        let raw: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
        let sum: f64 = raw.iter().sum();
        if sum > 0.0 {
            let probs: Vec<f64> = raw.iter().map(|v| v / sum).collect();
            if let Ok(p) = ProbDist::new(probs) {
                return p;
            }
        }
    }
}

fn random_cases(seed: u64, count: usize) -> Vec<(ProbDist, OneHotLabel)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let k = rng.random_range(2..=10usize);
            let p = random_simplex_point(&mut rng, k);
            let y = OneHotLabel::new(rng.random_range(0..k), k).unwrap();
            (p, y)
        })
        .collect()
}

#[test]
fn limit_identities_on_random_simplex_points() {
    for (p, y) in random_cases(7, 100) {
        let ce = ce_loss(&p, y).unwrap();
        let py = p.prob(y.class_index());
        assert!((gce_loss(&p, y, 1e-6).unwrap() - ce).abs() <= 1e-4);
        assert_eq!(gce_loss(&p, y, 1.0).unwrap(), 1.0 - py);
        assert!((bce_loss(&p, y, 1e-6).unwrap() - (ce + 1.0)).abs() <= 1e-4);
        assert_eq!(rce_loss(&p, y, -2.0).unwrap(), mae_loss(&p, y).unwrap());
    }
}

#[test]
fn losses_non_negative_and_zero_at_onehot() {
    let configs = [
        RobustLossConfig::ce(),
        RobustLossConfig::gce(0.7),
        RobustLossConfig::rce(-2.0),
        RobustLossConfig::sce(0.1, 0.01, -2.0),
        RobustLossConfig::mae(),
    ];
    for (p, y) in random_cases(11, 200) {
        for cfg in &configs {
            let v = loss_value(cfg, &p, y).unwrap();
            assert!(v >= 0.0, "{:?} negative at random point", cfg.family);
        }
        // BCE is positive but not zero-anchored; bounded below by its
        // one-hot value (checked separately)
        assert!(bce_loss(&p, y, 1.0).unwrap() > 0.0);
    }
    for k in 2..=6usize {
        for yi in 0..k {
            let y = OneHotLabel::new(yi, k).unwrap();
            let mut probs = vec![0.0; k];
            probs[yi] = 1.0;
            let onehot = ProbDist::new(probs).unwrap();
            for cfg in &configs {
                let v = loss_value(cfg, &onehot, y).unwrap();
                assert!(v.abs() <= 1e-9, "{:?} not zero at one-hot: {v}", cfg.family);
            }
        }
    }
}

#[test]
fn bce_minimum_sits_at_onehot() {
    // BCE(one-hot) = 1 exactly for every beta; random points never dip below
    let betas = [0.001, 0.5, 1.0, 5.0];
    for &beta in &betas {
        let y = OneHotLabel::new(0, 3).unwrap();
        let onehot = ProbDist::new(vec![1.0, 0.0, 0.0]).unwrap();
        let at_onehot = bce_loss(&onehot, y, beta).unwrap();
        assert!(
            (at_onehot - 1.0).abs() <= 1e-9,
            "BCE(one-hot) = {at_onehot} at beta {beta}"
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..1000 {
        let p = random_simplex_point(&mut rng, 3);
        let y = OneHotLabel::new(rng.random_range(0..3), 3).unwrap();
        for &beta in &betas {
            assert!(bce_loss(&p, y, beta).unwrap() >= 1.0 - 1e-9);
        }
    }
}

#[test]
fn losses_strictly_decrease_in_target_probability() {
    // p(y) = t with the remainder spread uniformly
    let k = 4;
    let y = OneHotLabel::new(1, k).unwrap();
    let at = |t: f64| {
        let rest = (1.0 - t) / (k - 1) as f64;
        let mut probs = vec![rest; k];
        probs[1] = t;
        ProbDist::new(probs).unwrap()
    };
    let ts: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
    let families: Vec<(&str, Box<dyn Fn(&ProbDist) -> f64>)> = vec![
        ("ce", Box::new(|p: &ProbDist| ce_loss(p, y).unwrap())),
        ("gce", Box::new(|p: &ProbDist| gce_loss(p, y, 0.7).unwrap())),
        ("rce", Box::new(|p: &ProbDist| rce_loss(p, y, -2.0).unwrap())),
        ("mae", Box::new(|p: &ProbDist| mae_loss(p, y).unwrap())),
    ];
    for (name, f) in &families {
        for w in ts.windows(2) {
            let (lo, hi) = (f(&at(w[0])), f(&at(w[1])));
            assert!(hi < lo, "{name} not strictly decreasing: {lo} -> {hi}");
        }
    }
}

#[test]
fn gce_gradient_limit_matches_ce() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..50 {
        let k = rng.random_range(2..=5usize);
        let scores: Vec<f64> = (0..k).map(|_| rng.random_range(-2.0..2.0)).collect();
        let y = OneHotLabel::new(rng.random_range(0..k), k).unwrap();
        let g_ce =
            robustssl::losses::loss_grad_scores(&RobustLossConfig::ce(), &scores, y).unwrap();
        let g_gce =
            robustssl::losses::loss_grad_scores(&RobustLossConfig::gce(1e-6), &scores, y).unwrap();
        for (a, b) in g_ce.iter().zip(&g_gce) {
            assert!((a - b).abs() <= 1e-4);
        }
    }
}

#[test]
fn sce_alpha_gamma_defaults_cover_paper_settings() {
    // both reported (alpha, gamma) pairs validate and evaluate
    let p = ProbDist::new(vec![0.6, 0.3, 0.1]).unwrap();
    let y = OneHotLabel::new(0, 3).unwrap();
    for cfg in [
        RobustLossConfig::sce(0.1, 0.01, -2.0),
        RobustLossConfig::sce(0.01, 1.0, -2.0),
    ] {
        assert!(loss_value(&cfg, &p, y).unwrap().is_finite());
    }
}

proptest! {
    #[test]
    fn softmax_output_is_a_prob_dist(scores in proptest::collection::vec(-50.0f64..50.0, 2..12)) {
        let p = softmax(&scores).unwrap();
        let sum: f64 = p.probs().iter().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-9);
        for &v in p.probs() {
            prop_assert!((PROB_EPSILON..=1.0).contains(&v));
        }
    }

    #[test]
    fn softmax_argmax_matches_score_argmax(scores in proptest::collection::vec(-10.0f64..10.0, 2..8), shift in -100.0f64..100.0) {
        let p = softmax(&scores).unwrap();
        let shifted: Vec<f64> = scores.iter().map(|s| s + shift).collect();
        let q = softmax(&shifted).unwrap();
        prop_assert_eq!(p.argmax(), q.argmax());
    }

    #[test]
    fn dispatch_agrees_with_direct_calls(
        raw in proptest::collection::vec(0.01f64..1.0, 3),
        yi in 0usize..3,
    ) {
        let sum: f64 = raw.iter().sum();
        let p = ProbDist::new(raw.iter().map(|v| v / sum).collect()).unwrap();
        let y = OneHotLabel::new(yi, 3).unwrap();
        for family in LossFamily::ALL {
            let cfg = RobustLossConfig { family, ..RobustLossConfig::default() };
            let v = loss_value(&cfg, &p, y).unwrap();
            prop_assert!(v.is_finite() && v >= 0.0);
        }
    }
}
