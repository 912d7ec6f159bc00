//! Minimal dense feed-forward classifier with SGD training.
//!
//! A [`MlpClassifier`] is a stack of [`DenseLayer`]s with an identity or
//! ReLU hidden activation and a softmax head supplied by the loss. Training
//! is plain backprop + SGD with momentum and weight decay, deterministic
//! per seed, and each sample carries its own loss configuration via its
//! provenance flag (CE on true labels, a robust loss on pseudo-labels).

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::datagen::{LabeledDataset, Provenance};
use crate::error::{Error, Result};
use crate::losses::{self, OneHotLabel, RobustLossConfig};
use crate::parallel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Identity,
    Relu,
}

impl Activation {
    fn apply(&self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Relu => z.max(0.0),
        }
    }

    fn derivative(&self, z: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// One dense layer, weights stored row-major as `out_dim x in_dim`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseLayer {
    fn zeros(in_dim: usize, out_dim: usize) -> Self {
        Self {
            in_dim,
            out_dim,
            weights: vec![0.0; in_dim * out_dim],
            bias: vec![0.0; out_dim],
        }
    }

    fn apply(&self, input: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.out_dim {
            let row = &self.weights[o * self.in_dim..(o + 1) * self.in_dim];
            let z: f64 = row.iter().zip(input).map(|(w, x)| w * x).sum();
            out.push(z + self.bias[o]);
        }
    }
}

/// Architecture of a classifier, used to build fresh models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub layer_dims: Vec<usize>,
    pub hidden_activation: Activation,
}

impl ModelSpec {
    pub fn build(&self, seed: u64) -> Result<MlpClassifier> {
        init_model(&self.layer_dims, self.hidden_activation, seed)
    }
}

/// Dense feed-forward classifier; the last layer's `out_dim` is the class
/// count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpClassifier {
    pub layers: Vec<DenseLayer>,
    pub hidden_activation: Activation,
}

impl MlpClassifier {
    pub fn input_dim(&self) -> usize {
        self.layers[0].in_dim
    }

    pub fn num_classes(&self) -> usize {
        self.layers.last().unwrap().out_dim
    }

    pub fn layer_dims(&self) -> Vec<usize> {
        let mut dims = vec![self.layers[0].in_dim];
        dims.extend(self.layers.iter().map(|l| l.out_dim));
        dims
    }

    fn check_finite(&self, location: &str) -> Result<()> {
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.weights.iter().chain(&layer.bias).any(|v| !v.is_finite()) {
                return Err(Error::numeric(
                    format!("{location} layer {i}"),
                    "non-finite parameter",
                ));
            }
        }
        Ok(())
    }
}

/// Glorot-uniform initialization: weights from `U(-s, s)` with
/// `s = sqrt(6 / (fan_in + fan_out))`, biases zero. Deterministic per seed.
pub fn init_model(layer_dims: &[usize], activation: Activation, seed: u64) -> Result<MlpClassifier> {
    if layer_dims.len() < 2 {
        return Err(Error::invalid_input("need at least input and output dims"));
    }
    if layer_dims.iter().any(|&d| d == 0) {
        return Err(Error::invalid_input("layer dims must be positive"));
    }
    if *layer_dims.last().unwrap() < 2 {
        return Err(Error::invalid_input("need at least 2 output classes"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut layers = Vec::with_capacity(layer_dims.len() - 1);
    for w in layer_dims.windows(2) {
        let (fan_in, fan_out) = (w[0], w[1]);
        let s = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let mut layer = DenseLayer::zeros(fan_in, fan_out);
        for v in &mut layer.weights {
            *v = rng.random_range(-s..s);
        }
        layers.push(layer);
    }
    Ok(MlpClassifier {
        layers,
        hidden_activation: activation,
    })
}

/// Pre-softmax scores for one input.
pub fn forward(model: &MlpClassifier, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != model.input_dim() {
        return Err(Error::invalid_input(format!(
            "input has {} features, model expects {}",
            x.len(),
            model.input_dim()
        )));
    }
    let mut current = x.to_vec();
    let mut next = Vec::new();
    let last = model.layers.len() - 1;
    for (i, layer) in model.layers.iter().enumerate() {
        layer.apply(&current, &mut next);
        if i < last {
            for v in &mut next {
                *v = model.hidden_activation.apply(*v);
            }
        }
        std::mem::swap(&mut current, &mut next);
    }
    Ok(current)
}

/// Predicted class: argmax of scores, ties broken by lowest index.
pub fn predict(model: &MlpClassifier, x: &[f64]) -> Result<usize> {
    let scores = forward(model, x)?;
    let mut best = 0;
    for k in 1..scores.len() {
        if scores[k] > scores[best] {
            best = k;
        }
    }
    Ok(best)
}

/// Gradients with the same shapes as the model parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<DenseLayer>,
}

impl Gradients {
    fn zeros_like(model: &MlpClassifier) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|l| DenseLayer::zeros(l.in_dim, l.out_dim))
                .collect(),
        }
    }

    fn scale(&mut self, s: f64) {
        for layer in &mut self.layers {
            for v in layer.weights.iter_mut().chain(&mut layer.bias) {
                *v *= s;
            }
        }
    }
}

/// One sample of a training batch: features, label, and the loss to apply.
pub struct BatchSample<'a> {
    pub features: &'a [f64],
    pub label: OneHotLabel,
    pub loss: &'a RobustLossConfig,
}

/// Exact backprop of the batch-mean loss. Returns the gradients and the
/// mean per-sample loss value.
pub fn backward(model: &MlpClassifier, batch: &[BatchSample<'_>]) -> Result<(Gradients, f64)> {
    if batch.is_empty() {
        return Err(Error::invalid_input("empty batch"));
    }
    let mut grads = Gradients::zeros_like(model);
    let mut loss_sum = 0.0;
    let num_layers = model.layers.len();
    for sample in batch {
        if sample.features.len() != model.input_dim() {
            return Err(Error::invalid_input("batch feature dimension mismatch"));
        }
        // forward pass, caching per-layer inputs and pre-activations
        let mut inputs: Vec<Vec<f64>> = Vec::with_capacity(num_layers);
        let mut pre_acts: Vec<Vec<f64>> = Vec::with_capacity(num_layers);
        let mut current = sample.features.to_vec();
        for (i, layer) in model.layers.iter().enumerate() {
            let mut z = Vec::new();
            layer.apply(&current, &mut z);
            inputs.push(current);
            pre_acts.push(z.clone());
            if i < num_layers - 1 {
                for v in &mut z {
                    *v = model.hidden_activation.apply(*v);
                }
            }
            current = z;
        }
        let scores = &current;
        let p = losses::softmax(scores)?;
        loss_sum += losses::loss_value(sample.loss, &p, sample.label)?;
        // delta at the scores, then propagate back
        let mut delta = losses::loss_grad_scores(sample.loss, scores, sample.label)?;
        for i in (0..num_layers).rev() {
            let layer = &model.layers[i];
            let glayer = &mut grads.layers[i];
            let input = &inputs[i];
            for o in 0..layer.out_dim {
                glayer.bias[o] += delta[o];
                let grow = &mut glayer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                for (g, x) in grow.iter_mut().zip(input) {
                    *g += delta[o] * x;
                }
            }
            if i > 0 {
                let mut prev = vec![0.0; layer.in_dim];
                for o in 0..layer.out_dim {
                    let row = &layer.weights[o * layer.in_dim..(o + 1) * layer.in_dim];
                    for (p_j, w) in prev.iter_mut().zip(row) {
                        *p_j += w * delta[o];
                    }
                }
                for (p_j, z) in prev.iter_mut().zip(&pre_acts[i - 1]) {
                    *p_j *= model.hidden_activation.derivative(*z);
                }
                delta = prev;
            }
        }
    }
    let inv = 1.0 / batch.len() as f64;
    grads.scale(inv);
    for (i, layer) in grads.layers.iter().enumerate() {
        if layer.weights.iter().chain(&layer.bias).any(|v| !v.is_finite()) {
            return Err(Error::numeric(format!("backward layer {i}"), "non-finite gradient"));
        }
    }
    Ok((grads, loss_sum * inv))
}

/// SGD hyperparameters and loop settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SgdConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    /// `(epoch, new_rate)` steps; strictly increasing epochs below `epochs`.
    pub lr_schedule: Vec<(usize, f64)>,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for SgdConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            momentum: 0.9,
            weight_decay: 1e-4,
            lr_schedule: Vec::new(),
            epochs: 100,
            batch_size: 32,
            seed: 0,
        }
    }
}

impl SgdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.learning_rate <= 0.0 {
            return Err(Error::invalid_input("learning_rate must be > 0"));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::invalid_input("momentum must lie in [0, 1)"));
        }
        if self.weight_decay < 0.0 {
            return Err(Error::invalid_input("weight_decay must be >= 0"));
        }
        if self.batch_size == 0 {
            return Err(Error::invalid_input("batch_size must be positive"));
        }
        let mut prev: Option<usize> = None;
        for &(epoch, rate) in &self.lr_schedule {
            if epoch >= self.epochs {
                return Err(Error::invalid_input("lr_schedule epoch beyond training length"));
            }
            if let Some(p) = prev {
                if epoch <= p {
                    return Err(Error::invalid_input("lr_schedule epochs must strictly increase"));
                }
            }
            if rate <= 0.0 {
                return Err(Error::invalid_input("lr_schedule rate must be > 0"));
            }
            prev = Some(epoch);
        }
        Ok(())
    }

    /// Learning rate in force at a given epoch.
    pub fn rate_at(&self, epoch: usize) -> f64 {
        let mut rate = self.learning_rate;
        for &(e, r) in &self.lr_schedule {
            if epoch >= e {
                rate = r;
            }
        }
        rate
    }
}

/// Momentum buffers, same shapes as the model.
#[derive(Debug, Clone)]
pub struct Velocity {
    pub layers: Vec<DenseLayer>,
}

impl Velocity {
    pub fn zeros_like(model: &MlpClassifier) -> Self {
        Self {
            layers: model
                .layers
                .iter()
                .map(|l| DenseLayer::zeros(l.in_dim, l.out_dim))
                .collect(),
        }
    }
}

/// Classical SGD with momentum and weight decay folded into the gradient:
/// `v <- momentum * v + grad + weight_decay * w; w <- w - lr * v`.
pub fn sgd_step(
    model: &mut MlpClassifier,
    grads: &Gradients,
    velocity: &mut Velocity,
    learning_rate: f64,
    momentum: f64,
    weight_decay: f64,
) -> Result<()> {
    for ((layer, glayer), vlayer) in model
        .layers
        .iter_mut()
        .zip(&grads.layers)
        .zip(&mut velocity.layers)
    {
        for ((w, g), v) in layer
            .weights
            .iter_mut()
            .zip(&glayer.weights)
            .zip(&mut vlayer.weights)
        {
            *v = momentum * *v + g + weight_decay * *w;
            *w -= learning_rate * *v;
        }
        for ((b, g), v) in layer.bias.iter_mut().zip(&glayer.bias).zip(&mut vlayer.bias) {
            *v = momentum * *v + g;
            *b -= learning_rate * *v;
        }
    }
    model.check_finite("sgd_step")
}

/// Maps each provenance flag to the loss applied to samples carrying it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossMap {
    pub true_label: RobustLossConfig,
    pub pseudo_label: RobustLossConfig,
}

impl LossMap {
    /// CE everywhere.
    pub fn ce_only() -> Self {
        Self {
            true_label: RobustLossConfig::ce(),
            pseudo_label: RobustLossConfig::ce(),
        }
    }

    /// CE on true labels, the given robust loss on pseudo-labels.
    pub fn ce_with_robust(pseudo: RobustLossConfig) -> Self {
        Self {
            true_label: RobustLossConfig::ce(),
            pseudo_label: pseudo,
        }
    }

    pub fn for_provenance(&self, provenance: Provenance) -> &RobustLossConfig {
        match provenance {
            Provenance::TrueLabel => &self.true_label,
            Provenance::PseudoLabel => &self.pseudo_label,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.true_label.validate()?;
        self.pseudo_label.validate()
    }
}

/// Per-epoch training diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub mean_loss: f64,
    pub train_accuracy: f64,
    pub learning_rate: f64,
}

/// One record per completed epoch.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainRecord {
    pub epochs: Vec<EpochRecord>,
}

/// SGD training loop: per-epoch full shuffles from a dedicated stream of
/// `config.seed`, mini-batches with the last short batch kept, per-sample
/// loss dispatch via provenance.
pub fn train(
    mut model: MlpClassifier,
    dataset: &LabeledDataset,
    loss_map: &LossMap,
    config: &SgdConfig,
) -> Result<(MlpClassifier, TrainRecord)> {
    if dataset.is_empty() {
        return Err(Error::invalid_input("cannot train on empty dataset"));
    }
    if dataset.num_features() != model.input_dim() || dataset.num_classes() != model.num_classes() {
        return Err(Error::invalid_input("dataset shape does not match model"));
    }
    config.validate()?;
    loss_map.validate()?;
    let k = dataset.num_classes();
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut velocity = Velocity::zeros_like(&model);
    let mut record = TrainRecord::default();
    let mut indices: Vec<usize> = (0..dataset.len()).collect();
    for epoch in 0..config.epochs {
        let rate = config.rate_at(epoch);
        indices.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for (batch_no, chunk) in indices.chunks(config.batch_size).enumerate() {
            let batch: Vec<BatchSample<'_>> = chunk
                .iter()
                .map(|&i| {
                    Ok(BatchSample {
                        features: dataset.row(i),
                        label: OneHotLabel::new(dataset.label(i), k)?,
                        loss: loss_map.for_provenance(dataset.provenance(i)),
                    })
                })
                .collect::<Result<_>>()?;
            let (grads, mean_loss) = backward(&model, &batch).map_err(|e| {
                Error::numeric(format!("epoch {epoch} batch {batch_no}"), e.to_string())
            })?;
            sgd_step(
                &mut model,
                &grads,
                &mut velocity,
                rate,
                config.momentum,
                config.weight_decay,
            )
            .map_err(|e| Error::numeric(format!("epoch {epoch} batch {batch_no}"), e.to_string()))?;
            loss_sum += mean_loss;
            batches += 1;
        }
        let train_accuracy = evaluate_accuracy(&model, dataset)?;
        record.epochs.push(EpochRecord {
            mean_loss: loss_sum / batches as f64,
            train_accuracy,
            learning_rate: rate,
        });
    }
    Ok((model, record))
}

/// Fraction of samples whose prediction matches the stored label.
pub fn evaluate_accuracy(model: &MlpClassifier, dataset: &LabeledDataset) -> Result<f64> {
    if dataset.is_empty() {
        return Err(Error::invalid_input("cannot evaluate on empty dataset"));
    }
    let hits = parallel::map_indexed(dataset.len(), |i| {
        match predict(model, dataset.row(i)) {
            Ok(pred) => Ok(pred == dataset.label(i)),
            Err(e) => Err(e),
        }
    });
    let mut correct = 0usize;
    for h in hits {
        if h? {
            correct += 1;
        }
    }
    Ok(correct as f64 / dataset.len() as f64)
}

const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    version: u32,
    layer_dims: Vec<usize>,
    hidden_activation: Activation,
    layers: Vec<DenseLayer>,
}

/// Write a model checkpoint as versioned JSON. `write -> read -> write` is
/// byte-identical.
pub fn save_checkpoint(model: &MlpClassifier, path: &Path) -> Result<()> {
    let ckpt = Checkpoint {
        version: CHECKPOINT_VERSION,
        layer_dims: model.layer_dims(),
        hidden_activation: model.hidden_activation,
        layers: model.layers.clone(),
    };
    std::fs::write(path, serde_json::to_string_pretty(&ckpt)? + "\n")?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<MlpClassifier> {
    let ckpt: Checkpoint = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    if ckpt.version != CHECKPOINT_VERSION {
        return Err(Error::invalid_input(format!(
            "unsupported checkpoint version {}",
            ckpt.version
        )));
    }
    let model = MlpClassifier {
        layers: ckpt.layers,
        hidden_activation: ckpt.hidden_activation,
    };
    if model.layers.is_empty() || model.layer_dims() != ckpt.layer_dims {
        return Err(Error::invalid_input("checkpoint layer dims inconsistent"));
    }
    for w in model.layer_dims().windows(2) {
        if w[0] == 0 || w[1] == 0 {
            return Err(Error::invalid_input("checkpoint has zero-sized layer"));
        }
    }
    model.check_finite("load_checkpoint")?;
    Ok(model)
}
