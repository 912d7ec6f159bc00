//! Finite-difference verification of the analytic loss gradients.
//!
//! The numerical side only ever calls `loss_value` on perturbed scores, so
//! it stays independent of `loss_grad_scores`. Used by the `gradcheck` CLI
//! command and the acceptance suite.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::losses::{self, OneHotLabel, RobustLossConfig};
use crate::parallel;

/// Central-difference step.
pub const DEFAULT_STEP: f64 = 1e-5;

/// Default relative tolerance.
pub const DEFAULT_TOLERANCE: f64 = 1e-5;

/// Absolute floor below which gradient entries are compared absolutely.
pub const ABSOLUTE_FLOOR: f64 = 1e-8;

/// Central finite differences of `loss_value(config, softmax(scores), y)`.
pub fn finite_diff_grad(
    config: &RobustLossConfig,
    scores: &[f64],
    y: OneHotLabel,
    step: f64,
) -> Result<Vec<f64>> {
    let mut grad = Vec::with_capacity(scores.len());
    let mut work = scores.to_vec();
    for j in 0..scores.len() {
        work[j] = scores[j] + step;
        let plus = losses::loss_value(config, &losses::softmax(&work)?, y)?;
        work[j] = scores[j] - step;
        let minus = losses::loss_value(config, &losses::softmax(&work)?, y)?;
        work[j] = scores[j];
        grad.push((plus - minus) / (2.0 * step));
    }
    Ok(grad)
}

/// Scaled mismatch between analytic and numeric gradient entries, built so
/// that a value <= `tolerance` means `|a - n| <= tolerance * max(|a|, |n|) + floor`.
/// The absolute floor absorbs rounding noise on near-zero entries.
pub fn scaled_error(analytic: f64, numeric: f64, tolerance: f64, floor: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()) + floor / tolerance;
    (analytic - numeric).abs() / denom
}

/// One failing point of a family check.
#[derive(Debug, Clone)]
pub struct GradCheckFailure {
    pub point: usize,
    pub num_classes: usize,
    pub component: usize,
    pub relative_error: f64,
}

/// Result of checking one loss configuration.
#[derive(Debug, Clone)]
pub struct FamilyReport {
    pub label: String,
    pub points: usize,
    pub max_relative_error: f64,
    pub failures: Vec<GradCheckFailure>,
}

impl FamilyReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Describe a configuration with the hyperparameters its family consults.
pub fn config_label(config: &RobustLossConfig) -> String {
    use crate::losses::LossFamily::*;
    match config.family {
        Ce | Mae => config.family.name().to_string(),
        Gce => format!("gce(q={})", config.q_exponent),
        Bce => format!("bce(beta={})", config.beta),
        Rce => format!("rce(A={})", config.a),
        Sce => format!("sce(alpha={}, gamma={})", config.alpha, config.gamma),
    }
}

/// Check one configuration at `points` random (scores, label) pairs with
/// class counts cycling through `class_counts`.
pub fn check_config(
    config: &RobustLossConfig,
    points: usize,
    class_counts: &[usize],
    seed: u64,
    tolerance: f64,
    floor: f64,
    step: f64,
) -> Result<FamilyReport> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // draw all points up front so evaluation order doesn't perturb the stream
    let cases: Vec<(Vec<f64>, OneHotLabel)> = (0..points)
        .map(|i| {
            let k = class_counts[i % class_counts.len()];
            let scores: Vec<f64> = (0..k)
                .map(|_| {
                    // moderate score spread keeps every class probability
                    // well above the finite-difference noise floor
                    let z: f64 = StandardNormal.sample(&mut rng);
                    0.5 * z
                })
                .collect();
            let y = OneHotLabel::new(rng.random_range(0..k), k)?;
            Ok((scores, y))
        })
        .collect::<Result<_>>()?;
    let results = parallel::map_indexed(cases.len(), |i| -> Result<(usize, (usize, f64))> {
        let (scores, y) = &cases[i];
        let analytic = losses::loss_grad_scores(config, scores, *y)?;
        let numeric = finite_diff_grad(config, scores, *y, step)?;
        let mut worst = (0usize, 0.0f64);
        for (j, (&a, &n)) in analytic.iter().zip(&numeric).enumerate() {
            let err = scaled_error(a, n, tolerance, floor);
            if err > worst.1 {
                worst = (j, err);
            }
        }
        Ok((scores.len(), worst))
    });
    let mut report = FamilyReport {
        label: config_label(config),
        points,
        max_relative_error: 0.0,
        failures: Vec::new(),
    };
    for (i, res) in results.into_iter().enumerate() {
        let (k, (component, err)) = res?;
        report.max_relative_error = report.max_relative_error.max(err);
        if err > tolerance {
            report.failures.push(GradCheckFailure {
                point: i,
                num_classes: k,
                component,
                relative_error: err,
            });
        }
    }
    Ok(report)
}

/// The configurations exercised by the standard gradient check: every
/// family at its stock hyperparameter settings.
pub fn default_suite() -> Vec<RobustLossConfig> {
    vec![
        RobustLossConfig::ce(),
        RobustLossConfig::gce(0.1),
        RobustLossConfig::gce(0.7),
        RobustLossConfig::gce(0.9),
        RobustLossConfig::bce(0.001),
        RobustLossConfig::bce(1.0),
        RobustLossConfig::bce(5.0),
        RobustLossConfig::rce(-2.0),
        RobustLossConfig::rce(-4.0),
        RobustLossConfig::sce(0.1, 0.01, -2.0),
        RobustLossConfig::sce(0.01, 1.0, -2.0),
        RobustLossConfig::mae(),
    ]
}

/// Class counts used by the standard check.
pub const DEFAULT_CLASS_COUNTS: [usize; 3] = [2, 3, 10];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes() {
        for config in default_suite() {
            let report = check_config(
                &config,
                100,
                &DEFAULT_CLASS_COUNTS,
                42,
                DEFAULT_TOLERANCE,
                ABSOLUTE_FLOOR,
                DEFAULT_STEP,
            )
            .unwrap();
            assert!(
                report.passed(),
                "{}: max rel error {:.3e}, {} failures",
                report.label,
                report.max_relative_error,
                report.failures.len()
            );
        }
    }

    #[test]
    fn impossible_tolerance_reports_failures() {
        let report = check_config(
            &RobustLossConfig::ce(),
            20,
            &[3],
            1,
            1e-12,
            1e-15,
            DEFAULT_STEP,
        )
        .unwrap();
        assert!(!report.passed());
    }
}
