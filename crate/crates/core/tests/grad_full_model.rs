//! Full-model gradient verification: `backward` against central finite
//! differences over every weight and bias, for all loss families, on a
//! 2-16-3 network.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use robustssl::losses::{loss_value, softmax, OneHotLabel, RobustLossConfig};
use robustssl::model::{backward, forward, init_model, Activation, BatchSample, MlpClassifier};

const STEP: f64 = 1e-5;
const REL_TOL: f64 = 1e-4;
const ABS_FLOOR: f64 = 1e-7;

/// Batch-mean loss via the forward path only (no gradient code involved).
fn batch_loss(
    model: &MlpClassifier,
    xs: &[Vec<f64>],
    ys: &[OneHotLabel],
    cfg: &RobustLossConfig,
) -> f64 {
    let mut sum = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let scores = forward(model, x).unwrap();
        sum += loss_value(cfg, &softmax(&scores).unwrap(), y).unwrap();
    }
    sum / xs.len() as f64
}

fn check_batch(cfg: &RobustLossConfig, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let model = init_model(&[2, 16, 3], Activation::Relu, seed).unwrap();
    let batch_size = rng.random_range(1..=8usize);
    let xs: Vec<Vec<f64>> = (0..batch_size)
        .map(|_| {
            (0..2)
                .map(|_| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    z
                })
                .collect()
        })
        .collect();
    let ys: Vec<OneHotLabel> = (0..batch_size)
        .map(|_| OneHotLabel::new(rng.random_range(0..3), 3).unwrap())
        .collect();
    let batch: Vec<BatchSample<'_>> = xs
        .iter()
        .zip(&ys)
        .map(|(x, &y)| BatchSample {
            features: x,
            label: y,
            loss: cfg,
        })
        .collect();
    let (grads, _) = backward(&model, &batch).unwrap();

    for (li, layer) in model.layers.iter().enumerate() {
        let n_params = layer.weights.len() + layer.bias.len();
        for pi in 0..n_params {
            let read = |m: &MlpClassifier| {
                let l = &m.layers[li];
                if pi < l.weights.len() {
                    l.weights[pi]
                } else {
                    l.bias[pi - l.weights.len()]
                }
            };
            let mut plus = model.clone();
            let mut minus = model.clone();
            {
                let l = &mut plus.layers[li];
                if pi < l.weights.len() {
                    l.weights[pi] += STEP;
                } else {
                    l.bias[pi - l.weights.len()] += STEP;
                }
                let l = &mut minus.layers[li];
                if pi < l.weights.len() {
                    l.weights[pi] -= STEP;
                } else {
                    l.bias[pi - l.weights.len()] -= STEP;
                }
            }
            let numeric =
                (batch_loss(&plus, &xs, &ys, cfg) - batch_loss(&minus, &xs, &ys, cfg)) / (2.0 * STEP);
            let analytic = {
                let l = &grads.layers[li];
                if pi < l.weights.len() {
                    l.weights[pi]
                } else {
                    l.bias[pi - l.weights.len()]
                }
            };
            let diff = (analytic - numeric).abs();
            let bound = REL_TOL * analytic.abs().max(numeric.abs()) + ABS_FLOOR;
            assert!(
                diff <= bound,
                "seed {seed} layer {li} param {pi} (w={}): analytic {analytic}, numeric {numeric}",
                read(&model)
            );
        }
    }
}

#[test]
fn backward_matches_finite_differences_all_families() {
    let configs = [
        RobustLossConfig::ce(),
        RobustLossConfig::gce(0.7),
        RobustLossConfig::bce(1.0),
        RobustLossConfig::rce(-2.0),
        RobustLossConfig::sce(0.1, 0.01, -2.0),
        RobustLossConfig::mae(),
    ];
    // 20 random batches spread across the families
    for seed in 0..20u64 {
        let cfg = &configs[(seed % configs.len() as u64) as usize];
        check_batch(cfg, seed);
    }
}
