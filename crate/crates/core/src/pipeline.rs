//! Teacher-student semi-supervised training protocol with lower/upper-bound
//! baselines, repeat-run statistics, and evaluation metrics (accuracy and
//! multi-class Dice).
//!
//! The protocol: train a teacher with CE on the labeled subset, pseudo-label
//! the unlabeled pool with its argmax predictions, then train a fresh
//! student on the union using CE for true labels and a robust loss for
//! pseudo-labels.

use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

use crate::datagen::{
    gen_gaussian_mixture, inject_label_noise, split_labeled_unlabeled, LabeledDataset, MixtureSpec,
    NoiseSpec, Provenance, SegScene, UnlabeledSet,
};
use crate::error::{Error, Result};
use crate::losses::{softmax, RobustLossConfig};
use crate::model::{
    evaluate_accuracy, forward, train, LossMap, MlpClassifier, ModelSpec, SgdConfig,
};
use crate::parallel;

/// Pseudo-labels produced by a teacher: hard argmax labels plus the
/// teacher's confidence (max softmax probability) per sample.
#[derive(Debug, Clone)]
pub struct PseudoLabeledSet {
    features: Vec<f64>,
    pseudo_labels: Vec<usize>,
    confidence: Vec<f64>,
    num_features: usize,
    num_classes: usize,
}

impl PseudoLabeledSet {
    pub fn len(&self) -> usize {
        self.pseudo_labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pseudo_labels.is_empty()
    }

    pub fn pseudo_labels(&self) -> &[usize] {
        &self.pseudo_labels
    }

    pub fn confidence(&self) -> &[f64] {
        &self.confidence
    }

    /// View as a training dataset with all-pseudo provenance.
    pub fn to_dataset(&self) -> Result<LabeledDataset> {
        LabeledDataset::new(
            self.features.clone(),
            self.pseudo_labels.clone(),
            vec![Provenance::PseudoLabel; self.len()],
            self.num_features,
            self.num_classes,
        )
    }

    /// Flip each pseudo-label with probability `flip_rate` to a uniformly
    /// random different class (controlled extra corruption on top of
    /// teacher-induced noise).
    pub fn with_injected_noise(&self, flip_rate: f64, seed: u64) -> Result<PseudoLabeledSet> {
        let noisy = inject_label_noise(&self.to_dataset()?, &NoiseSpec { flip_rate }, seed)?;
        Ok(PseudoLabeledSet {
            features: self.features.clone(),
            pseudo_labels: noisy.labels().to_vec(),
            confidence: self.confidence.clone(),
            num_features: self.num_features,
            num_classes: self.num_classes,
        })
    }
}

/// Train the teacher: CE only, on samples whose provenance is all
/// `true_label`.
pub fn train_teacher(
    arch: &ModelSpec,
    labeled: &LabeledDataset,
    cfg: &SgdConfig,
) -> Result<MlpClassifier> {
    if labeled.is_empty() {
        return Err(Error::invalid_input("teacher needs a non-empty labeled set"));
    }
    for i in 0..labeled.len() {
        if labeled.provenance(i) != Provenance::TrueLabel {
            return Err(Error::invalid_input(
                "teacher training set contains pseudo-labeled samples",
            ));
        }
    }
    let model = arch.build(cfg.seed)?;
    let (model, _) = train(model, labeled, &LossMap::ce_only(), cfg)?;
    Ok(model)
}

/// Argmax pseudo-labels with recorded confidence; no filtering.
pub fn generate_pseudo_labels(
    teacher: &MlpClassifier,
    unlabeled: &UnlabeledSet,
) -> Result<PseudoLabeledSet> {
    if unlabeled.num_features() != teacher.input_dim() {
        return Err(Error::invalid_input(format!(
            "unlabeled features have dim {}, teacher expects {}",
            unlabeled.num_features(),
            teacher.input_dim()
        )));
    }
    let rows = parallel::map_indexed(unlabeled.len(), |i| -> Result<(usize, f64)> {
        let scores = forward(teacher, unlabeled.row(i))?;
        let p = softmax(&scores)?;
        let label = p.argmax();
        Ok((label, p.prob(label)))
    });
    let mut pseudo_labels = Vec::with_capacity(unlabeled.len());
    let mut confidence = Vec::with_capacity(unlabeled.len());
    let mut features = Vec::with_capacity(unlabeled.len() * unlabeled.num_features());
    for (i, row) in rows.into_iter().enumerate() {
        let (label, conf) = row?;
        pseudo_labels.push(label);
        confidence.push(conf);
        features.extend_from_slice(unlabeled.row(i));
    }
    Ok(PseudoLabeledSet {
        features,
        pseudo_labels,
        confidence,
        num_features: unlabeled.num_features(),
        num_classes: unlabeled.num_classes(),
    })
}

/// Diagnostic: fraction of pseudo-labels disagreeing with the held-back
/// ground truth. Never feeds back into training.
pub fn pseudo_error_rate(pseudo: &PseudoLabeledSet, unlabeled: &UnlabeledSet) -> Result<f64> {
    if pseudo.len() != unlabeled.len() {
        return Err(Error::invalid_input("pseudo set and unlabeled set sizes disagree"));
    }
    if pseudo.is_empty() {
        return Ok(0.0);
    }
    let wrong = pseudo
        .pseudo_labels()
        .iter()
        .zip(unlabeled.held_back_truth())
        .filter(|(a, b)| a != b)
        .count();
    Ok(wrong as f64 / pseudo.len() as f64)
}

/// Train the student from fresh initialization on the union of the labeled
/// set (CE) and the pseudo-labeled set (the given robust loss).
pub fn train_student(
    arch: &ModelSpec,
    labeled: &LabeledDataset,
    pseudo: &PseudoLabeledSet,
    robust_cfg: &RobustLossConfig,
    cfg: &SgdConfig,
) -> Result<MlpClassifier> {
    robust_cfg.validate()?;
    let union = if pseudo.is_empty() {
        labeled.clone()
    } else {
        labeled.concat(&pseudo.to_dataset()?)?
    };
    let model = arch.build(cfg.seed)?;
    let (model, _) = train(model, &union, &LossMap::ce_with_robust(*robust_cfg), cfg)?;
    Ok(model)
}

/// The two CE baselines bracketing the semi-supervised arms: lower trained
/// on the labeled subset only, upper on the full ground-truth set.
pub fn run_bounds(
    arch: &ModelSpec,
    labeled_subset: &LabeledDataset,
    full: &LabeledDataset,
    cfg: &SgdConfig,
) -> Result<(MlpClassifier, MlpClassifier)> {
    let lower = train_teacher(arch, labeled_subset, cfg)?;
    let upper = train_teacher(arch, full, cfg)?;
    Ok((lower, upper))
}

/// Full experiment specification. All randomness derives from `master_seed`
/// except the test set, which uses the reserved `test_seed` so every arm and
/// repeat shares one test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub train_spec: MixtureSpec,
    pub test_spec: MixtureSpec,
    pub labeled_fraction: f64,
    pub repeats: usize,
    pub master_seed: u64,
    pub test_seed: u64,
    /// Extra uniform flips applied to pseudo-labels after the teacher
    /// generates them (0 disables).
    #[serde(default)]
    pub pseudo_flip_rate: f64,
    pub arch: ModelSpec,
    pub teacher_sgd: SgdConfig,
    pub student_sgd: SgdConfig,
    pub robust_loss: RobustLossConfig,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.train_spec.validate()?;
        self.test_spec.validate()?;
        if !(self.labeled_fraction > 0.0 && self.labeled_fraction < 1.0) {
            return Err(Error::Config(format!(
                "labeled_fraction must lie in (0, 1), got {}",
                self.labeled_fraction
            )));
        }
        if self.repeats == 0 {
            return Err(Error::Config("repeats must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.pseudo_flip_rate) {
            return Err(Error::Config("pseudo_flip_rate must lie in [0, 1)".into()));
        }
        self.teacher_sgd.validate()?;
        self.student_sgd.validate()?;
        self.robust_loss.validate()?;
        Ok(())
    }
}

/// splitmix64; used to derive independent sub-seeds from the master seed.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    let mut z = master
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-repeat test accuracies of the four arms plus the pseudo-label
/// error-rate diagnostic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RepeatOutcome {
    pub repeat: usize,
    pub lower_bound: f64,
    pub student_ce: f64,
    pub student_robust: f64,
    pub upper_bound: f64,
    pub pseudo_error_rate: f64,
}

/// Per-repeat values with their mean and sample standard deviation
/// (absent when fewer than two repeats).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmStats {
    pub values: Vec<f64>,
    pub mean: f64,
    pub std: Option<f64>,
}

impl ArmStats {
    pub fn from_values(values: Vec<f64>) -> Self {
        let n = values.len();
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n >= 2 {
            let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
            Some(var.sqrt())
        } else {
            None
        };
        Self { values, mean, std }
    }
}

/// Aggregated result of an experiment run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub repeats: Vec<RepeatOutcome>,
    pub lower_bound: ArmStats,
    pub student_ce: ArmStats,
    pub student_robust: ArmStats,
    pub upper_bound: ArmStats,
    pub pseudo_error_rate: ArmStats,
}

pub const ARM_NAMES: [&str; 4] = ["lower_bound", "student_ce", "student_robust", "upper_bound"];

fn run_repeat(
    cfg: &ExperimentConfig,
    full: &LabeledDataset,
    test: &LabeledDataset,
    repeat: usize,
) -> Result<RepeatOutcome> {
    let r = repeat as u64;
    let split_seed = derive_seed(cfg.master_seed, 100 + r);
    let (labeled, unlabeled) = split_labeled_unlabeled(full, cfg.labeled_fraction, split_seed)?;

    let mut teacher_sgd = cfg.teacher_sgd.clone();
    teacher_sgd.seed = derive_seed(cfg.master_seed, 200 + r);
    let teacher = train_teacher(&cfg.arch, &labeled, &teacher_sgd)?;

    let mut pseudo = generate_pseudo_labels(&teacher, &unlabeled)?;
    if cfg.pseudo_flip_rate > 0.0 {
        pseudo = pseudo.with_injected_noise(cfg.pseudo_flip_rate, derive_seed(cfg.master_seed, 300 + r))?;
    }
    let error_rate = pseudo_error_rate(&pseudo, &unlabeled)?;

    let mut student_ce_sgd = cfg.student_sgd.clone();
    student_ce_sgd.seed = derive_seed(cfg.master_seed, 400 + r);
    let student_ce = train_student(&cfg.arch, &labeled, &pseudo, &RobustLossConfig::ce(), &student_ce_sgd)?;

    let mut student_robust_sgd = cfg.student_sgd.clone();
    student_robust_sgd.seed = derive_seed(cfg.master_seed, 400 + r);
    let student_robust =
        train_student(&cfg.arch, &labeled, &pseudo, &cfg.robust_loss, &student_robust_sgd)?;

    let mut upper_sgd = cfg.teacher_sgd.clone();
    upper_sgd.seed = derive_seed(cfg.master_seed, 600 + r);
    let upper = train_teacher(&cfg.arch, full, &upper_sgd)?;

    Ok(RepeatOutcome {
        repeat,
        lower_bound: evaluate_accuracy(&teacher, test)?,
        student_ce: evaluate_accuracy(&student_ce, test)?,
        student_robust: evaluate_accuracy(&student_robust, test)?,
        upper_bound: evaluate_accuracy(&upper, test)?,
        pseudo_error_rate: error_rate,
    })
}

/// Run all four arms for every repeat (repeats may run concurrently) and
/// aggregate mean/std per arm, reducing in repeat order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentResult> {
    cfg.validate()?;
    let full = gen_gaussian_mixture(&cfg.train_spec, derive_seed(cfg.master_seed, 1))?;
    let test = gen_gaussian_mixture(&cfg.test_spec, cfg.test_seed)?;
    let outcomes = parallel::map_indexed(cfg.repeats, |r| {
        run_repeat(cfg, &full, &test, r).map_err(|e| {
            Error::Config(format!("repeat {r} failed: {e}"))
        })
    });
    let repeats: Vec<RepeatOutcome> = outcomes.into_iter().collect::<Result<_>>()?;
    Ok(ExperimentResult {
        config: cfg.clone(),
        lower_bound: ArmStats::from_values(repeats.iter().map(|o| o.lower_bound).collect()),
        student_ce: ArmStats::from_values(repeats.iter().map(|o| o.student_ce).collect()),
        student_robust: ArmStats::from_values(repeats.iter().map(|o| o.student_robust).collect()),
        upper_bound: ArmStats::from_values(repeats.iter().map(|o| o.upper_bound).collect()),
        pseudo_error_rate: ArmStats::from_values(
            repeats.iter().map(|o| o.pseudo_error_rate).collect(),
        ),
        repeats,
    })
}

/// Write the flat CSV companion of a result: `repeat,arm,metric,value`.
pub fn write_result_csv(result: &ExperimentResult, path: &Path) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "repeat,arm,metric,value")?;
    for o in &result.repeats {
        writeln!(out, "{},lower_bound,accuracy,{}", o.repeat, o.lower_bound)?;
        writeln!(out, "{},student_ce,accuracy,{}", o.repeat, o.student_ce)?;
        writeln!(out, "{},student_robust,accuracy,{}", o.repeat, o.student_robust)?;
        writeln!(out, "{},upper_bound,accuracy,{}", o.repeat, o.upper_bound)?;
        writeln!(out, "{},pseudo,error_rate,{}", o.repeat, o.pseudo_error_rate)?;
    }
    let arms = [
        ("lower_bound", &result.lower_bound),
        ("student_ce", &result.student_ce),
        ("student_robust", &result.student_robust),
        ("upper_bound", &result.upper_bound),
        ("pseudo", &result.pseudo_error_rate),
    ];
    for (name, stats) in arms {
        let metric = if name == "pseudo" { "error_rate" } else { "accuracy" };
        writeln!(out, "mean,{name},{metric},{}", stats.mean)?;
        if let Some(std) = stats.std {
            writeln!(out, "std,{name},{metric},{std}")?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Dice overlap `2|P ∩ T| / (|P| + |T|)` between the pixel sets whose label
/// falls in `class_set`. Both-empty convention: 1.0.
pub fn dice_score(pred: &[usize], truth: &[usize], class_set: &[usize]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::invalid_input(format!(
            "grid shapes disagree: {} vs {}",
            pred.len(),
            truth.len()
        )));
    }
    let in_set = |l: usize| class_set.contains(&l);
    let mut p_count = 0usize;
    let mut t_count = 0usize;
    let mut both = 0usize;
    for (&p, &t) in pred.iter().zip(truth) {
        let pi = in_set(p);
        let ti = in_set(t);
        p_count += pi as usize;
        t_count += ti as usize;
        both += (pi && ti) as usize;
    }
    if p_count + t_count == 0 {
        Ok(1.0)
    } else {
        Ok(2.0 * both as f64 / (p_count + t_count) as f64)
    }
}

/// Anything that can label a pixel of a scene.
pub trait PixelClassifier: Sync {
    fn classify_pixel(&self, scene: &SegScene, row: usize, col: usize) -> Result<usize>;
}

impl PixelClassifier for MlpClassifier {
    fn classify_pixel(&self, scene: &SegScene, row: usize, col: usize) -> Result<usize> {
        crate::model::predict(self, &scene.pixel_features(row, col))
    }
}

/// Reads the ground truth directly; test fixture for metric plumbing.
pub struct OraclePixelClassifier;

impl PixelClassifier for OraclePixelClassifier {
    fn classify_pixel(&self, scene: &SegScene, row: usize, col: usize) -> Result<usize> {
        Ok(scene.label(row, col))
    }
}

/// Always predicts the background class.
pub struct ConstantBackgroundClassifier;

impl PixelClassifier for ConstantBackgroundClassifier {
    fn classify_pixel(&self, _scene: &SegScene, _row: usize, _col: usize) -> Result<usize> {
        Ok(0)
    }
}

/// Per-grouping Dice, averaged over scenes.
pub fn evaluate_segmentation<C: PixelClassifier>(
    classifier: &C,
    scenes: &[SegScene],
    groupings: &[Vec<usize>],
) -> Result<Vec<f64>> {
    if scenes.is_empty() {
        return Err(Error::invalid_input("no scenes to evaluate"));
    }
    let per_scene = parallel::map_indexed(scenes.len(), |i| -> Result<Vec<f64>> {
        let scene = &scenes[i];
        let mut pred = Vec::with_capacity(scene.height() * scene.width());
        for r in 0..scene.height() {
            for c in 0..scene.width() {
                pred.push(classifier.classify_pixel(scene, r, c)?);
            }
        }
        groupings
            .iter()
            .map(|g| dice_score(&pred, scene.label_grid(), g))
            .collect()
    });
    let mut sums = vec![0.0; groupings.len()];
    let mut count = 0usize;
    for scene_scores in per_scene {
        for (s, v) in sums.iter_mut().zip(scene_scores?) {
            *s += v;
        }
        count += 1;
    }
    Ok(sums.into_iter().map(|s| s / count as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::{gen_toy_segmentation, MixtureComponent};
    use crate::model::Activation;

    fn three_blob_spec() -> MixtureSpec {
        let cov = vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        MixtureSpec {
            num_classes: 3,
            components: vec![
                MixtureComponent {
                    mean: vec![0.0, 0.0],
                    covariance: cov.clone(),
                    count: 120,
                    assigned_label: 0,
                },
                MixtureComponent {
                    mean: vec![5.0, 0.0],
                    covariance: cov.clone(),
                    count: 120,
                    assigned_label: 1,
                },
                MixtureComponent {
                    mean: vec![2.5, 4.0],
                    covariance: cov,
                    count: 120,
                    assigned_label: 2,
                },
            ],
        }
    }

    fn arch() -> ModelSpec {
        ModelSpec {
            layer_dims: vec![2, 3],
            hidden_activation: Activation::Identity,
        }
    }

    fn fast_sgd(seed: u64) -> SgdConfig {
        SgdConfig {
            learning_rate: 0.2,
            momentum: 0.9,
            weight_decay: 0.0,
            lr_schedule: Vec::new(),
            epochs: 40,
            batch_size: 32,
            seed,
        }
    }

    #[test]
    fn teacher_rejects_pseudo_provenance() {
        let ds = gen_gaussian_mixture(&three_blob_spec(), 1).unwrap();
        let pseudo_ds = LabeledDataset::new(
            ds.features_flat().to_vec(),
            ds.labels().to_vec(),
            vec![Provenance::PseudoLabel; ds.len()],
            2,
            3,
        )
        .unwrap();
        assert!(train_teacher(&arch(), &pseudo_ds, &fast_sgd(0)).is_err());
    }

    #[test]
    fn teacher_fits_subset_and_is_deterministic() {
        let ds = gen_gaussian_mixture(&three_blob_spec(), 2).unwrap();
        let (labeled, _) = split_labeled_unlabeled(&ds, 0.3, 5).unwrap();
        let t1 = train_teacher(&arch(), &labeled, &fast_sgd(1)).unwrap();
        let t2 = train_teacher(&arch(), &labeled, &fast_sgd(1)).unwrap();
        assert_eq!(t1, t2);
        assert!(evaluate_accuracy(&t1, &labeled).unwrap() >= 0.95);
    }

    #[test]
    fn pseudo_labels_match_good_teacher() {
        let ds = gen_gaussian_mixture(&three_blob_spec(), 3).unwrap();
        let (labeled, unlabeled) = split_labeled_unlabeled(&ds, 0.5, 7).unwrap();
        let teacher = train_teacher(&arch(), &labeled, &fast_sgd(2)).unwrap();
        let pseudo = generate_pseudo_labels(&teacher, &unlabeled).unwrap();
        let err = pseudo_error_rate(&pseudo, &unlabeled).unwrap();
        assert!(err < 0.1, "pseudo-label error {err}");
        for &c in pseudo.confidence() {
            assert!((1.0 / 3.0..=1.0).contains(&c));
        }
    }

    #[test]
    fn uniform_teacher_confidence_is_one_over_k() {
        let mut teacher = arch().build(0).unwrap();
        for w in &mut teacher.layers[0].weights {
            *w = 0.0;
        }
        let ds = gen_gaussian_mixture(&three_blob_spec(), 4).unwrap();
        let (_, unlabeled) = split_labeled_unlabeled(&ds, 0.5, 1).unwrap();
        let pseudo = generate_pseudo_labels(&teacher, &unlabeled).unwrap();
        for &c in pseudo.confidence() {
            assert!((c - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn student_with_empty_pseudo_set_equals_lower_bound() {
        let ds = gen_gaussian_mixture(&three_blob_spec(), 5).unwrap();
        let (labeled, unlabeled) = split_labeled_unlabeled(&ds, 0.3, 9).unwrap();
        let teacher = train_teacher(&arch(), &labeled, &fast_sgd(3)).unwrap();
        let empty = PseudoLabeledSet {
            features: Vec::new(),
            pseudo_labels: Vec::new(),
            confidence: Vec::new(),
            num_features: unlabeled.num_features(),
            num_classes: unlabeled.num_classes(),
        };
        let student =
            train_student(&arch(), &labeled, &empty, &RobustLossConfig::bce(1.0), &fast_sgd(3))
                .unwrap();
        assert_eq!(student, teacher);
    }

    #[test]
    fn firewall_held_back_truth_cannot_reach_training() {
        // scramble the labels of the pool; features are untouched, so the
        // split (same seed) yields identical unlabeled features but different
        // held-back truth. Trained students must be identical.
        let ds = gen_gaussian_mixture(&three_blob_spec(), 6).unwrap();
        let scrambled = inject_label_noise(&ds, &NoiseSpec { flip_rate: 0.9 }, 123).unwrap();
        let (labeled, unlabeled) = split_labeled_unlabeled(&ds, 0.3, 11).unwrap();
        let (_, unlabeled_scrambled) = split_labeled_unlabeled(&scrambled, 0.3, 11).unwrap();
        let teacher = train_teacher(&arch(), &labeled, &fast_sgd(4)).unwrap();
        let p1 = generate_pseudo_labels(&teacher, &unlabeled).unwrap();
        let p2 = generate_pseudo_labels(&teacher, &unlabeled_scrambled).unwrap();
        let s1 = train_student(&arch(), &labeled, &p1, &RobustLossConfig::gce(0.7), &fast_sgd(5))
            .unwrap();
        let s2 = train_student(&arch(), &labeled, &p2, &RobustLossConfig::gce(0.7), &fast_sgd(5))
            .unwrap();
        assert_eq!(s1, s2);
        // but the diagnostic does see the difference
        let e1 = pseudo_error_rate(&p1, &unlabeled).unwrap();
        let e2 = pseudo_error_rate(&p2, &unlabeled_scrambled).unwrap();
        assert!((e1 - e2).abs() > 0.1);
    }

    #[test]
    fn bounds_on_full_set_coincide() {
        let ds = gen_gaussian_mixture(&three_blob_spec(), 7).unwrap();
        let (lower, upper) = run_bounds(&arch(), &ds, &ds, &fast_sgd(6)).unwrap();
        assert_eq!(lower, upper);
    }

    #[test]
    fn experiment_determinism_and_stats() {
        let cfg = ExperimentConfig {
            train_spec: three_blob_spec(),
            test_spec: three_blob_spec(),
            labeled_fraction: 0.3,
            repeats: 2,
            master_seed: 42,
            test_seed: 999,
            pseudo_flip_rate: 0.0,
            arch: arch(),
            teacher_sgd: fast_sgd(0),
            student_sgd: fast_sgd(0),
            robust_loss: RobustLossConfig::bce(1.0),
        };
        let r1 = run_experiment(&cfg).unwrap();
        let r2 = run_experiment(&cfg).unwrap();
        assert_eq!(r1, r2);
        assert_eq!(r1.repeats.len(), 2);
        // mean is the exact arithmetic mean
        let mean = (r1.repeats[0].lower_bound + r1.repeats[1].lower_bound) / 2.0;
        assert_eq!(r1.lower_bound.mean, mean);
        assert!(r1.lower_bound.std.is_some());
        let single = ExperimentConfig { repeats: 1, ..cfg };
        let r = run_experiment(&single).unwrap();
        assert!(r.lower_bound.std.is_none());
    }

    #[test]
    fn dice_basics() {
        let truth = vec![0, 1, 1, 0];
        assert_eq!(dice_score(&truth, &truth, &[1]).unwrap(), 1.0);
        let disjoint = vec![1, 0, 0, 1];
        assert_eq!(dice_score(&disjoint, &truth, &[1]).unwrap(), 0.0);
        // |P|=4, |T|=4, |P∩T|=2 -> 0.5
        let pred = vec![1, 1, 0, 0, 1, 1, 0, 0];
        let tr = vec![1, 1, 1, 1, 0, 0, 0, 0];
        assert_eq!(dice_score(&pred, &tr, &[1]).unwrap(), 0.5);
        // both empty
        assert_eq!(dice_score(&[0, 0], &[0, 0], &[1]).unwrap(), 1.0);
        assert!(dice_score(&[0], &[0, 0], &[1]).is_err());
    }

    #[test]
    fn dice_symmetry() {
        let a = vec![0, 1, 2, 1, 0, 2];
        let b = vec![1, 1, 2, 0, 0, 0];
        for set in [vec![1], vec![2], vec![1, 2]] {
            assert_eq!(
                dice_score(&a, &b, &set).unwrap(),
                dice_score(&b, &a, &set).unwrap()
            );
        }
    }

    #[test]
    fn segmentation_oracle_and_background() {
        let scenes = gen_toy_segmentation(5, 32, 32, 17).unwrap();
        let groupings = vec![vec![1], vec![1, 2], vec![1, 2, 3], vec![0, 1, 2, 3]];
        let oracle = evaluate_segmentation(&OraclePixelClassifier, &scenes, &groupings).unwrap();
        for d in oracle {
            assert_eq!(d, 1.0);
        }
        let bg = evaluate_segmentation(&ConstantBackgroundClassifier, &scenes, &[vec![1, 2, 3]])
            .unwrap();
        assert_eq!(bg[0], 0.0);
    }

    #[test]
    fn result_csv_lists_all_arms() {
        let cfg = ExperimentConfig {
            train_spec: three_blob_spec(),
            test_spec: three_blob_spec(),
            labeled_fraction: 0.3,
            repeats: 1,
            master_seed: 4,
            test_seed: 5,
            pseudo_flip_rate: 0.0,
            arch: arch(),
            teacher_sgd: fast_sgd(0),
            student_sgd: fast_sgd(0),
            robust_loss: RobustLossConfig::mae(),
        };
        let result = run_experiment(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("result.csv");
        write_result_csv(&result, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        for arm in ARM_NAMES {
            assert!(text.contains(arm), "missing {arm}");
        }
        assert!(text.starts_with("repeat,arm,metric,value\n"));
    }
}
