//! Robust classification losses on probability vectors and their analytic
//! gradients with respect to pre-softmax scores.
//!
//! All losses operate on a clamped probability vector ([`ProbDist`]) and a
//! hard label ([`OneHotLabel`]). GCE and BCE are implemented in their
//! Box-Cox (limit-consistent) forms, so GCE recovers CE as `q -> 0` and MAE
//! at `q = 1`, and BCE recovers CE (plus the constant 1) as `beta -> 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Probability floor applied before any log or power.
pub const PROB_EPSILON: f64 = 1e-12;

/// Tolerance for the sum-to-one check on incoming probability vectors.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

/// A point on the K-simplex, entries clamped to `[PROB_EPSILON, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbDist {
    probs: Vec<f64>,
}

impl ProbDist {
    /// Build from raw probabilities. Entries must be finite, non-negative
    /// before clamping, and sum to 1 within [`SIMPLEX_TOLERANCE`].
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return Err(Error::invalid_input("ProbDist needs at least 2 classes"));
        }
        let mut sum = 0.0;
        for (k, &p) in probs.iter().enumerate() {
            if !p.is_finite() || p < -SIMPLEX_TOLERANCE || p > 1.0 + SIMPLEX_TOLERANCE {
                return Err(Error::invalid_input(format!(
                    "probability {p} at index {k} outside [0, 1]"
                )));
            }
            sum += p;
        }
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::invalid_input(format!(
                "probabilities sum to {sum}, expected 1"
            )));
        }
        Ok(Self::from_clamped(probs))
    }

    fn from_clamped(mut probs: Vec<f64>) -> Self {
        for p in &mut probs {
            *p = p.clamp(PROB_EPSILON, 1.0);
        }
        Self { probs }
    }

    pub fn num_classes(&self) -> usize {
        self.probs.len()
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Probability assigned to class `k`.
    pub fn prob(&self, k: usize) -> f64 {
        self.probs[k]
    }

    /// Index of the most probable class, ties broken by lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for k in 1..self.probs.len() {
            if self.probs[k] > self.probs[best] {
                best = k;
            }
        }
        best
    }
}

/// A hard class label together with the class count it indexes into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OneHotLabel {
    class_index: usize,
    num_classes: usize,
}

impl OneHotLabel {
    pub fn new(class_index: usize, num_classes: usize) -> Result<Self> {
        if num_classes < 2 {
            return Err(Error::invalid_input("need at least 2 classes"));
        }
        if class_index >= num_classes {
            return Err(Error::invalid_input(format!(
                "class index {class_index} out of range for {num_classes} classes"
            )));
        }
        Ok(Self {
            class_index,
            num_classes,
        })
    }

    pub fn class_index(&self) -> usize {
        self.class_index
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }
}

/// Loss family selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossFamily {
    Ce,
    Gce,
    Bce,
    Rce,
    Sce,
    Mae,
}

impl LossFamily {
    pub fn name(&self) -> &'static str {
        match self {
            LossFamily::Ce => "ce",
            LossFamily::Gce => "gce",
            LossFamily::Bce => "bce",
            LossFamily::Rce => "rce",
            LossFamily::Sce => "sce",
            LossFamily::Mae => "mae",
        }
    }

    pub const ALL: [LossFamily; 6] = [
        LossFamily::Ce,
        LossFamily::Gce,
        LossFamily::Bce,
        LossFamily::Rce,
        LossFamily::Sce,
        LossFamily::Mae,
    ];
}

impl std::str::FromStr for LossFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ce" => Ok(LossFamily::Ce),
            "gce" => Ok(LossFamily::Gce),
            "bce" => Ok(LossFamily::Bce),
            "rce" => Ok(LossFamily::Rce),
            "sce" => Ok(LossFamily::Sce),
            "mae" => Ok(LossFamily::Mae),
            other => Err(Error::Config(format!("unknown loss family '{other}'"))),
        }
    }
}

/// Loss family plus hyperparameters. Only the fields relevant to `family`
/// are consulted when evaluating.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RobustLossConfig {
    pub family: LossFamily,
    /// GCE exponent, in (0, 1].
    pub q_exponent: f64,
    /// BCE exponent, strictly positive.
    pub beta: f64,
    /// RCE clipping constant, strictly negative. Defaults to -2, where RCE
    /// coincides with MAE.
    pub a: f64,
    /// SCE weight on the CE term.
    pub alpha: f64,
    /// SCE weight on the RCE term.
    pub gamma: f64,
    /// Evaluate BCE with the verbatim `(1 - p(y))^beta` numerator instead of
    /// the limit-consistent `1 - p(y)^beta`. Off by default; the verbatim
    /// form diverges as `beta -> 0`.
    pub bce_verbatim: bool,
}

impl Default for RobustLossConfig {
    fn default() -> Self {
        Self {
            family: LossFamily::Ce,
            q_exponent: 0.9,
            beta: 1.0,
            a: -2.0,
            alpha: 0.1,
            gamma: 0.01,
            bce_verbatim: false,
        }
    }
}

impl RobustLossConfig {
    pub fn ce() -> Self {
        Self {
            family: LossFamily::Ce,
            ..Self::default()
        }
    }

    pub fn gce(q_exponent: f64) -> Self {
        Self {
            family: LossFamily::Gce,
            q_exponent,
            ..Self::default()
        }
    }

    pub fn bce(beta: f64) -> Self {
        Self {
            family: LossFamily::Bce,
            beta,
            ..Self::default()
        }
    }

    pub fn rce(a: f64) -> Self {
        Self {
            family: LossFamily::Rce,
            a,
            ..Self::default()
        }
    }

    pub fn sce(alpha: f64, gamma: f64, a: f64) -> Self {
        Self {
            family: LossFamily::Sce,
            alpha,
            gamma,
            a,
            ..Self::default()
        }
    }

    pub fn mae() -> Self {
        Self {
            family: LossFamily::Mae,
            ..Self::default()
        }
    }

    /// Check the hyperparameters the configured family consults.
    pub fn validate(&self) -> Result<()> {
        match self.family {
            LossFamily::Ce | LossFamily::Mae => Ok(()),
            LossFamily::Gce => {
                if self.q_exponent > 0.0 && self.q_exponent <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::invalid_hyperparameter(format!(
                        "q_exponent must lie in (0, 1], got {}",
                        self.q_exponent
                    )))
                }
            }
            LossFamily::Bce => {
                if self.beta > 0.0 {
                    Ok(())
                } else {
                    Err(Error::invalid_hyperparameter(format!(
                        "beta must be > 0, got {}",
                        self.beta
                    )))
                }
            }
            LossFamily::Rce => {
                if self.a < 0.0 {
                    Ok(())
                } else {
                    Err(Error::invalid_hyperparameter(format!(
                        "A must be < 0, got {}",
                        self.a
                    )))
                }
            }
            LossFamily::Sce => {
                if self.a >= 0.0 {
                    return Err(Error::invalid_hyperparameter(format!(
                        "A must be < 0, got {}",
                        self.a
                    )));
                }
                if self.alpha < 0.0 || self.gamma < 0.0 {
                    return Err(Error::invalid_hyperparameter(
                        "alpha and gamma must be non-negative",
                    ));
                }
                if self.alpha == 0.0 && self.gamma == 0.0 {
                    return Err(Error::invalid_hyperparameter(
                        "alpha and gamma cannot both be zero",
                    ));
                }
                Ok(())
            }
        }
    }
}

fn check_dims(p: &ProbDist, y: OneHotLabel) -> Result<()> {
    if p.num_classes() != y.num_classes() {
        return Err(Error::invalid_input(format!(
            "dimension mismatch: distribution has {} classes, label expects {}",
            p.num_classes(),
            y.num_classes()
        )));
    }
    Ok(())
}

/// Numerically stable softmax over pre-activation scores.
pub fn softmax(scores: &[f64]) -> Result<ProbDist> {
    if scores.len() < 2 {
        return Err(Error::invalid_input("softmax needs at least 2 scores"));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::invalid_input("softmax input contains NaN or Inf"));
    }
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut exps: Vec<f64> = scores.iter().map(|&s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    for e in &mut exps {
        *e /= sum;
    }
    Ok(ProbDist::from_clamped(exps))
}

/// Multivariate cross-entropy `-log p(y)`.
pub fn ce_loss(p: &ProbDist, y: OneHotLabel) -> Result<f64> {
    check_dims(p, y)?;
    Ok(-p.prob(y.class_index()).ln())
}

/// Generalized cross-entropy in Box-Cox form, `(1 - p(y)^q) / q`.
pub fn gce_loss(p: &ProbDist, y: OneHotLabel, q_exponent: f64) -> Result<f64> {
    check_dims(p, y)?;
    RobustLossConfig::gce(q_exponent).validate()?;
    let py = p.prob(y.class_index());
    if q_exponent == 1.0 {
        Ok(1.0 - py)
    } else {
        Ok((1.0 - py.powf(q_exponent)) / q_exponent)
    }
}

/// Beta cross-entropy, `((beta+1)/beta) (1 - p(y)^beta) + sum_k p(k)^(beta+1)`.
pub fn bce_loss(p: &ProbDist, y: OneHotLabel, beta: f64) -> Result<f64> {
    check_dims(p, y)?;
    RobustLossConfig::bce(beta).validate()?;
    let py = p.prob(y.class_index());
    let reg: f64 = p.probs().iter().map(|&pk| pk.powf(beta + 1.0)).sum();
    Ok((beta + 1.0) / beta * (1.0 - py.powf(beta)) + reg)
}

/// Beta cross-entropy with the verbatim `(1 - p(y))^beta` numerator.
/// Diverges as `beta -> 0`; kept for comparison only.
pub fn bce_loss_verbatim(p: &ProbDist, y: OneHotLabel, beta: f64) -> Result<f64> {
    check_dims(p, y)?;
    RobustLossConfig::bce(beta).validate()?;
    let py = p.prob(y.class_index());
    let reg: f64 = p.probs().iter().map(|&pk| pk.powf(beta + 1.0)).sum();
    Ok((beta + 1.0) / beta * (1.0 - py).powf(beta) + reg)
}

/// Reverse cross-entropy `-A (1 - p(y))`, with `A < 0` the clipped stand-in
/// for `log 0`.
pub fn rce_loss(p: &ProbDist, y: OneHotLabel, a: f64) -> Result<f64> {
    check_dims(p, y)?;
    RobustLossConfig::rce(a).validate()?;
    Ok(-a * (1.0 - p.prob(y.class_index())))
}

/// Mean absolute error against the one-hot label, `2 (1 - p(y))`.
///
/// Computed in closed form so that `mae_loss == rce_loss` at `A = -2`
/// bit-for-bit; for a one-hot target the closed form equals
/// `sum_k |p(k) - q(k)|`.
pub fn mae_loss(p: &ProbDist, y: OneHotLabel) -> Result<f64> {
    check_dims(p, y)?;
    Ok(2.0 * (1.0 - p.prob(y.class_index())))
}

/// Symmetric cross-entropy `alpha * CE + gamma * RCE`.
pub fn sce_loss(p: &ProbDist, y: OneHotLabel, alpha: f64, gamma: f64, a: f64) -> Result<f64> {
    RobustLossConfig::sce(alpha, gamma, a).validate()?;
    Ok(alpha * ce_loss(p, y)? + gamma * rce_loss(p, y, a)?)
}

/// Dispatch to the loss selected by `config.family`.
pub fn loss_value(config: &RobustLossConfig, p: &ProbDist, y: OneHotLabel) -> Result<f64> {
    config.validate()?;
    match config.family {
        LossFamily::Ce => ce_loss(p, y),
        LossFamily::Gce => gce_loss(p, y, config.q_exponent),
        LossFamily::Bce => {
            if config.bce_verbatim {
                bce_loss_verbatim(p, y, config.beta)
            } else {
                bce_loss(p, y, config.beta)
            }
        }
        LossFamily::Rce => rce_loss(p, y, config.a),
        LossFamily::Sce => sce_loss(p, y, config.alpha, config.gamma, config.a),
        LossFamily::Mae => mae_loss(p, y),
    }
}

/// Gradient of the loss with respect to the (clamped) probability vector.
fn dloss_dprob(config: &RobustLossConfig, p: &ProbDist, y: OneHotLabel) -> Vec<f64> {
    let k = p.num_classes();
    let yi = y.class_index();
    let py = p.prob(yi);
    let mut g = vec![0.0; k];
    match config.family {
        LossFamily::Ce => {
            g[yi] = -1.0 / py;
        }
        LossFamily::Gce => {
            let q = config.q_exponent;
            g[yi] = if q == 1.0 { -1.0 } else { -py.powf(q - 1.0) };
        }
        LossFamily::Bce => {
            let b = config.beta;
            for (j, gj) in g.iter_mut().enumerate() {
                *gj = (b + 1.0) * p.prob(j).powf(b);
            }
            if config.bce_verbatim {
                g[yi] += -(b + 1.0) * (1.0 - py).powf(b - 1.0);
            } else {
                g[yi] += -(b + 1.0) * py.powf(b - 1.0);
            }
        }
        LossFamily::Rce => {
            g[yi] = config.a;
        }
        LossFamily::Mae => {
            g[yi] = -2.0;
        }
        LossFamily::Sce => {
            g[yi] = config.alpha * (-1.0 / py) + config.gamma * config.a;
        }
    }
    g
}

/// Analytic gradient of `loss_value(config, softmax(scores), y)` with respect
/// to the scores, via the softmax Jacobian. For CE this reduces to
/// `p - onehot(y)`.
pub fn loss_grad_scores(
    config: &RobustLossConfig,
    scores: &[f64],
    y: OneHotLabel,
) -> Result<Vec<f64>> {
    config.validate()?;
    let p = softmax(scores)?;
    check_dims(&p, y)?;
    let gp = dloss_dprob(config, &p, y);
    let inner: f64 = gp
        .iter()
        .zip(p.probs())
        .map(|(&g, &pk)| g * pk)
        .sum();
    let grad: Vec<f64> = gp
        .iter()
        .zip(p.probs())
        .map(|(&g, &pk)| pk * (g - inner))
        .collect();
    if let Some(j) = grad.iter().position(|g| !g.is_finite()) {
        return Err(Error::numeric(
            format!("loss_grad_scores[{j}]", j = j),
            format!("non-finite gradient for family {}", config.family.name()),
        ));
    }
    Ok(grad)
}
