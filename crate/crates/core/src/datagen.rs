//! Deterministic synthetic data: Gaussian-mixture classification scenes
//! (including the three-class-plus-mislabeled-outliers illustration),
//! uniform label-noise injection, labeled/unlabeled splits, and toy
//! per-pixel segmentation grids.
//!
//! Every generator is a pure function of its spec and seed.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// Whether a sample's label came from ground truth or from a teacher model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    TrueLabel,
    PseudoLabel,
}

impl Provenance {
    pub fn as_str(&self) -> &'static str {
        match self {
            Provenance::TrueLabel => "true_label",
            Provenance::PseudoLabel => "pseudo_label",
        }
    }
}

impl std::str::FromStr for Provenance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "true_label" => Ok(Provenance::TrueLabel),
            "pseudo_label" => Ok(Provenance::PseudoLabel),
            other => Err(Error::invalid_input(format!("unknown provenance '{other}'"))),
        }
    }
}

/// A feature matrix with class labels and per-sample provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    features: Vec<f64>, // row-major, n x d
    labels: Vec<usize>,
    provenance: Vec<Provenance>,
    num_features: usize,
    num_classes: usize,
}

impl LabeledDataset {
    pub fn new(
        features: Vec<f64>,
        labels: Vec<usize>,
        provenance: Vec<Provenance>,
        num_features: usize,
        num_classes: usize,
    ) -> Result<Self> {
        if num_features == 0 || num_classes < 2 {
            return Err(Error::invalid_input("need d >= 1 and K >= 2"));
        }
        let n = labels.len();
        if features.len() != n * num_features || provenance.len() != n {
            return Err(Error::invalid_input("feature/label/provenance lengths disagree"));
        }
        if features.iter().any(|f| !f.is_finite()) {
            return Err(Error::invalid_input("non-finite feature value"));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= num_classes) {
            return Err(Error::invalid_input(format!(
                "label {bad} out of range for {num_classes} classes"
            )));
        }
        Ok(Self {
            features,
            labels,
            provenance,
            num_features,
            num_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.num_features;
        &self.features[i * d..(i + 1) * d]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn provenance(&self, i: usize) -> Provenance {
        self.provenance[i]
    }

    pub fn features_flat(&self) -> &[f64] {
        &self.features
    }

    /// Concatenate two datasets with matching dimensions.
    pub fn concat(&self, other: &LabeledDataset) -> Result<LabeledDataset> {
        if self.num_features != other.num_features || self.num_classes != other.num_classes {
            return Err(Error::invalid_input("cannot concat datasets of different shape"));
        }
        let mut features = self.features.clone();
        features.extend_from_slice(&other.features);
        let mut labels = self.labels.clone();
        labels.extend_from_slice(&other.labels);
        let mut provenance = self.provenance.clone();
        provenance.extend_from_slice(&other.provenance);
        LabeledDataset::new(features, labels, provenance, self.num_features, self.num_classes)
    }

    /// Subset by row indices, in the order given.
    pub fn select(&self, indices: &[usize]) -> Result<LabeledDataset> {
        let d = self.num_features;
        let mut features = Vec::with_capacity(indices.len() * d);
        let mut labels = Vec::with_capacity(indices.len());
        let mut provenance = Vec::with_capacity(indices.len());
        for &i in indices {
            if i >= self.len() {
                return Err(Error::invalid_input(format!("row index {i} out of range")));
            }
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
            provenance.push(self.provenance[i]);
        }
        LabeledDataset::new(features, labels, provenance, d, self.num_classes)
    }
}

/// Features whose labels were stripped by a labeled/unlabeled split.
///
/// The ground-truth labels are retained only behind [`UnlabeledSet::held_back_truth`]
/// for diagnostics (pseudo-label error rate); no training entry point accepts
/// this type.
#[derive(Debug, Clone)]
pub struct UnlabeledSet {
    features: Vec<f64>,
    held_back_truth: Vec<usize>,
    num_features: usize,
    num_classes: usize,
}

impl UnlabeledSet {
    pub fn len(&self) -> usize {
        self.held_back_truth.len()
    }

    pub fn is_empty(&self) -> bool {
        self.held_back_truth.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.num_features
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.num_features;
        &self.features[i * d..(i + 1) * d]
    }

    /// Diagnostics-only view of the stripped labels. Never feed this back
    /// into training.
    pub fn held_back_truth(&self) -> &[usize] {
        &self.held_back_truth
    }
}

/// One Gaussian blob: samples are drawn from `N(mean, covariance)` and all
/// receive `assigned_label`, which may differ from the class the blob
/// geometrically belongs to (a mislabeled outlier cluster).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureComponent {
    pub mean: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    pub count: usize,
    pub assigned_label: usize,
}

/// Specification of a Gaussian mixture classification dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub num_classes: usize,
    pub components: Vec<MixtureComponent>,
}

impl MixtureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::invalid_input("mixture needs at least 2 classes"));
        }
        if self.components.is_empty() {
            return Err(Error::invalid_input("mixture needs at least one component"));
        }
        let d = self.components[0].mean.len();
        for (i, c) in self.components.iter().enumerate() {
            if c.mean.len() != d {
                return Err(Error::invalid_input(format!("component {i}: mean dimension mismatch")));
            }
            if c.count == 0 {
                return Err(Error::invalid_input(format!("component {i}: count must be positive")));
            }
            if c.assigned_label >= self.num_classes {
                return Err(Error::invalid_input(format!("component {i}: label out of range")));
            }
            cholesky(&c.covariance, d)
                .map_err(|e| Error::invalid_input(format!("component {i}: {e}")))?;
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.components.first().map_or(0, |c| c.mean.len())
    }

    pub fn total_count(&self) -> usize {
        self.components.iter().map(|c| c.count).sum()
    }
}

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
fn cholesky(cov: &[Vec<f64>], d: usize) -> Result<Vec<Vec<f64>>> {
    if cov.len() != d || cov.iter().any(|row| row.len() != d) {
        return Err(Error::invalid_input("covariance must be d x d"));
    }
    for i in 0..d {
        for j in 0..i {
            if (cov[i][j] - cov[j][i]).abs() > 1e-9 {
                return Err(Error::invalid_input("covariance not symmetric"));
            }
        }
    }
    let mut l = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..=i {
            let mut sum = cov[i][j];
            for k in 0..j {
                sum -= l[i][k] * l[j][k];
            }
            if i == j {
                if sum <= 0.0 {
                    return Err(Error::invalid_input("covariance not positive definite"));
                }
                l[i][j] = sum.sqrt();
            } else {
                l[i][j] = sum / l[j][j];
            }
        }
    }
    Ok(l)
}

/// Sample a labeled dataset from a Gaussian mixture spec. Components are
/// drawn in spec order from a single seeded stream, so output is a pure
/// function of `(spec, seed)`. All provenance flags are `true_label`.
pub fn gen_gaussian_mixture(spec: &MixtureSpec, seed: u64) -> Result<LabeledDataset> {
    spec.validate()?;
    let d = spec.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = spec.total_count();
    let mut features = Vec::with_capacity(n * d);
    let mut labels = Vec::with_capacity(n);
    for c in &spec.components {
        let l = cholesky(&c.covariance, d)?;
        for _ in 0..c.count {
            let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            for i in 0..d {
                let mut x = c.mean[i];
                for j in 0..=i {
                    x += l[i][j] * z[j];
                }
                features.push(x);
            }
            labels.push(c.assigned_label);
        }
    }
    let provenance = vec![Provenance::TrueLabel; n];
    LabeledDataset::new(features, labels, provenance, d, spec.num_classes)
}

fn diag_cov(d: usize, var: f64) -> Vec<Vec<f64>> {
    let mut cov = vec![vec![0.0; d]; d];
    for (i, row) in cov.iter_mut().enumerate() {
        row[i] = var;
    }
    cov
}

/// The three-class illustration scene: three unit-covariance classes with
/// means on a triangle of side 6, 300 points each, plus a tight cluster of
/// 60 points sitting in class 0's territory but labeled class 1.
///
/// The coordinates are constants of this artifact.
pub fn default_fig2_spec() -> MixtureSpec {
    MixtureSpec {
        num_classes: 3,
        components: vec![
            MixtureComponent {
                mean: vec![0.0, 0.0],
                covariance: diag_cov(2, 1.0),
                count: 300,
                assigned_label: 0,
            },
            MixtureComponent {
                mean: vec![6.0, 0.0],
                covariance: diag_cov(2, 1.0),
                count: 300,
                assigned_label: 1,
            },
            MixtureComponent {
                mean: vec![3.0, 5.196],
                covariance: diag_cov(2, 1.0),
                count: 300,
                assigned_label: 2,
            },
            // mislabeled subcluster: geometrically class 0, labeled class 1
            MixtureComponent {
                mean: vec![-1.2, -1.2],
                covariance: diag_cov(2, 0.09),
                count: 60,
                assigned_label: 1,
            },
        ],
    }
}

/// The same scene without the mislabeled cluster, for clean held-out tests.
pub fn default_fig2_clean_spec() -> MixtureSpec {
    let mut spec = default_fig2_spec();
    spec.components.truncate(3);
    spec
}

/// Uniform symmetric label noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// Per-sample flip probability, in `[0, 1)`.
    pub flip_rate: f64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.flip_rate) {
            return Err(Error::invalid_input(format!(
                "flip_rate must lie in [0, 1), got {}",
                self.flip_rate
            )));
        }
        Ok(())
    }
}

/// Flip each label independently with probability `noise.flip_rate` to a
/// uniformly random *different* class. Features and provenance are untouched.
pub fn inject_label_noise(
    ds: &LabeledDataset,
    noise: &NoiseSpec,
    seed: u64,
) -> Result<LabeledDataset> {
    noise.validate()?;
    let k = ds.num_classes();
    if k < 2 {
        return Err(Error::invalid_input("need at least 2 classes to flip labels"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut labels = ds.labels.clone();
    for label in &mut labels {
        if rng.random::<f64>() < noise.flip_rate {
            let shift = rng.random_range(1..k);
            *label = (*label + shift) % k;
        }
    }
    LabeledDataset::new(
        ds.features.clone(),
        labels,
        ds.provenance.clone(),
        ds.num_features,
        k,
    )
}

/// Uniformly partition a dataset into a labeled part of size `ceil(n * p)`
/// and an unlabeled remainder whose labels are stripped (kept only for
/// diagnostics inside [`UnlabeledSet`]).
pub fn split_labeled_unlabeled(
    ds: &LabeledDataset,
    p: f64,
    seed: u64,
) -> Result<(LabeledDataset, UnlabeledSet)> {
    if !(0.0..1.0).contains(&p) || p <= 0.0 {
        return Err(Error::invalid_input(format!("labeled fraction must lie in (0, 1), got {p}")));
    }
    let n = ds.len();
    let n_labeled = (n as f64 * p).ceil() as usize;
    if n_labeled == 0 || n_labeled >= n {
        return Err(Error::invalid_input(format!(
            "degenerate split: {n_labeled} labeled of {n}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut indices: Vec<usize> = (0..n).collect();
    indices.shuffle(&mut rng);
    let (labeled_idx, unlabeled_idx) = indices.split_at(n_labeled);
    let labeled = ds.select(labeled_idx)?;
    let d = ds.num_features();
    let mut features = Vec::with_capacity(unlabeled_idx.len() * d);
    let mut truth = Vec::with_capacity(unlabeled_idx.len());
    for &i in unlabeled_idx {
        features.extend_from_slice(ds.row(i));
        truth.push(ds.label(i));
    }
    let unlabeled = UnlabeledSet {
        features,
        held_back_truth: truth,
        num_features: d,
        num_classes: ds.num_classes(),
    };
    Ok((labeled, unlabeled))
}

/// An axis-aligned ellipse lesion, recorded so tests can re-derive pixel
/// membership independently of the label grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lesion {
    pub center_row: f64,
    pub center_col: f64,
    pub radius_row: f64,
    pub radius_col: f64,
    pub class: usize,
}

impl Lesion {
    pub fn contains(&self, r: usize, c: usize) -> bool {
        let dy = (r as f64 - self.center_row) / self.radius_row;
        let dx = (c as f64 - self.center_col) / self.radius_col;
        dy * dy + dx * dx <= 1.0
    }
}

/// A toy segmentation scene: an intensity grid plus a per-pixel label grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SegScene {
    image: Vec<f64>,
    labels: Vec<usize>,
    lesions: Vec<Lesion>,
    height: usize,
    width: usize,
    num_classes: usize,
}

impl SegScene {
    pub fn new(
        image: Vec<f64>,
        labels: Vec<usize>,
        height: usize,
        width: usize,
        num_classes: usize,
    ) -> Result<Self> {
        if image.len() != height * width || labels.len() != height * width {
            return Err(Error::invalid_input("grid shapes disagree"));
        }
        if labels.iter().any(|&l| l >= num_classes) {
            return Err(Error::invalid_input("label grid entry out of range"));
        }
        Ok(Self {
            image,
            labels,
            lesions: Vec::new(),
            height,
            width,
            num_classes,
        })
    }

    /// All-background scene of the given shape.
    pub fn background(height: usize, width: usize, num_classes: usize) -> Self {
        Self {
            image: vec![0.0; height * width],
            labels: vec![0; height * width],
            lesions: Vec::new(),
            height,
            width,
            num_classes,
        }
    }

    pub fn lesions(&self) -> &[Lesion] {
        &self.lesions
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn intensity(&self, r: usize, c: usize) -> f64 {
        self.image[r * self.width + c]
    }

    pub fn label(&self, r: usize, c: usize) -> usize {
        self.labels[r * self.width + c]
    }

    pub fn label_grid(&self) -> &[usize] {
        &self.labels
    }

    /// Features for the per-pixel classifier: intensity and normalized
    /// row/column coordinates.
    pub fn pixel_features(&self, r: usize, c: usize) -> [f64; 3] {
        [
            self.intensity(r, c),
            r as f64 / self.height as f64,
            c as f64 / self.width as f64,
        ]
    }
}

/// Intensity offset added inside a lesion of the given class (background is 0).
pub const LESION_INTENSITY_STEP: f64 = 0.75;

/// Standard deviation of the additive pixel noise.
pub const PIXEL_NOISE_STD: f64 = 0.05;

/// Number of foreground classes in generated scenes (labels 1..=3).
pub const SEG_NUM_LESION_CLASSES: usize = 3;

/// Generate toy segmentation scenes: each holds 1..=3 non-overlapping
/// axis-aligned ellipse lesions over a noisy background. Lesion class `c`
/// raises intensity by `c * LESION_INTENSITY_STEP`.
pub fn gen_toy_segmentation(
    num_scenes: usize,
    height: usize,
    width: usize,
    seed: u64,
) -> Result<Vec<SegScene>> {
    if height < 8 || width < 8 {
        return Err(Error::invalid_input("segmentation grid must be at least 8x8"));
    }
    let num_classes = SEG_NUM_LESION_CLASSES + 1;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scenes = Vec::with_capacity(num_scenes);
    for _ in 0..num_scenes {
        let mut labels = vec![0usize; height * width];
        let num_lesions = rng.random_range(1..=3usize);
        let mut placed: Vec<Lesion> = Vec::new();
        for _ in 0..num_lesions {
            // rejection-sample an ellipse that clears the ones already placed
            for _attempt in 0..50 {
                let ry = rng.random_range(2.0..height as f64 / 5.0);
                let rx = rng.random_range(2.0..width as f64 / 5.0);
                let cy = rng.random_range(ry..height as f64 - ry);
                let cx = rng.random_range(rx..width as f64 - rx);
                let clear = placed.iter().all(|p| {
                    let dy = cy - p.center_row;
                    let dx = cx - p.center_col;
                    (dy * dy + dx * dx).sqrt()
                        > (ry + p.radius_row).max(rx + p.radius_col) + 1.0
                });
                if !clear {
                    continue;
                }
                let lesion = Lesion {
                    center_row: cy,
                    center_col: cx,
                    radius_row: ry,
                    radius_col: rx,
                    class: rng.random_range(1..=SEG_NUM_LESION_CLASSES),
                };
                for r in 0..height {
                    for c in 0..width {
                        if lesion.contains(r, c) {
                            labels[r * width + c] = lesion.class;
                        }
                    }
                }
                placed.push(lesion);
                break;
            }
        }
        let image: Vec<f64> = labels
            .iter()
            .map(|&l| {
                let noise: f64 = StandardNormal.sample(&mut rng);
                l as f64 * LESION_INTENSITY_STEP + noise * PIXEL_NOISE_STD
            })
            .collect();
        let mut scene = SegScene::new(image, labels, height, width, num_classes)?;
        scene.lesions = placed;
        scenes.push(scene);
    }
    Ok(scenes)
}

/// Flatten scenes into a per-pixel classification dataset with features
/// `(intensity, row/H, col/W)`.
pub fn pixel_dataset(scenes: &[SegScene]) -> Result<LabeledDataset> {
    let num_classes = scenes
        .first()
        .map(SegScene::num_classes)
        .ok_or_else(|| Error::invalid_input("no scenes"))?;
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for scene in scenes {
        for r in 0..scene.height() {
            for c in 0..scene.width() {
                features.extend_from_slice(&scene.pixel_features(r, c));
                labels.push(scene.label(r, c));
            }
        }
    }
    let n = labels.len();
    LabeledDataset::new(features, labels, vec![Provenance::TrueLabel; n], 3, num_classes)
}

/// Sidecar manifest written next to each dataset CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub n: usize,
    pub d: usize,
    pub num_classes: usize,
    pub seed: u64,
    pub spec_digest: String,
}

/// Write a dataset as CSV (`f0,...,f{d-1},label,provenance`) plus a JSON
/// sidecar manifest.
pub fn save_dataset(
    ds: &LabeledDataset,
    manifest: &DatasetManifest,
    csv_path: &Path,
    manifest_path: &Path,
) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(csv_path)?);
    let header: Vec<String> = (0..ds.num_features())
        .map(|j| format!("f{j}"))
        .chain(["label".to_string(), "provenance".to_string()])
        .collect();
    writeln!(out, "{}", header.join(","))?;
    for i in 0..ds.len() {
        let mut fields: Vec<String> = ds.row(i).iter().map(|v| format!("{v}")).collect();
        fields.push(ds.label(i).to_string());
        fields.push(ds.provenance(i).as_str().to_string());
        writeln!(out, "{}", fields.join(","))?;
    }
    out.flush()?;
    let json = serde_json::to_string_pretty(manifest)?;
    std::fs::write(manifest_path, json + "\n")?;
    Ok(())
}

/// Load a dataset previously written by [`save_dataset`].
pub fn load_dataset(csv_path: &Path, manifest_path: &Path) -> Result<(LabeledDataset, DatasetManifest)> {
    let manifest: DatasetManifest = serde_json::from_str(&std::fs::read_to_string(manifest_path)?)?;
    let mut reader = csv::Reader::from_path(csv_path)?;
    let d = manifest.d;
    let mut features = Vec::with_capacity(manifest.n * d);
    let mut labels = Vec::with_capacity(manifest.n);
    let mut provenance = Vec::with_capacity(manifest.n);
    for record in reader.records() {
        let record = record?;
        if record.len() != d + 2 {
            return Err(Error::invalid_input(format!(
                "expected {} fields per row, got {}",
                d + 2,
                record.len()
            )));
        }
        for j in 0..d {
            let v: f64 = record[j]
                .parse()
                .map_err(|e| Error::invalid_input(format!("bad feature value: {e}")))?;
            features.push(v);
        }
        let label: usize = record[d]
            .parse()
            .map_err(|e| Error::invalid_input(format!("bad label: {e}")))?;
        labels.push(label);
        provenance.push(record[d + 1].parse()?);
    }
    if labels.len() != manifest.n {
        return Err(Error::invalid_input(format!(
            "manifest says n={}, CSV has {} rows",
            manifest.n,
            labels.len()
        )));
    }
    let ds = LabeledDataset::new(features, labels, provenance, d, manifest.num_classes)?;
    Ok((ds, manifest))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn simple_spec() -> MixtureSpec {
        MixtureSpec {
            num_classes: 2,
            components: vec![
                MixtureComponent {
                    mean: vec![0.0, 0.0],
                    covariance: diag_cov(2, 1.0),
                    count: 100,
                    assigned_label: 0,
                },
                MixtureComponent {
                    mean: vec![4.0, 0.0],
                    covariance: diag_cov(2, 1.0),
                    count: 100,
                    assigned_label: 1,
                },
            ],
        }
    }

    #[test]
    fn mixture_counts_and_determinism() {
        let ds = gen_gaussian_mixture(&simple_spec(), 7).unwrap();
        assert_eq!(ds.len(), 200);
        assert_eq!(ds.labels().iter().filter(|&&l| l == 0).count(), 100);
        let ds2 = gen_gaussian_mixture(&simple_spec(), 7).unwrap();
        assert_eq!(ds, ds2);
    }

    #[test]
    fn mixture_degenerate_covariance_sticks_to_mean() {
        let spec = MixtureSpec {
            num_classes: 2,
            components: vec![
                MixtureComponent {
                    mean: vec![1.5, -2.5],
                    covariance: diag_cov(2, 1e-12),
                    count: 50,
                    assigned_label: 0,
                },
                MixtureComponent {
                    mean: vec![0.0, 0.0],
                    covariance: diag_cov(2, 1e-12),
                    count: 1,
                    assigned_label: 1,
                },
            ],
        };
        let ds = gen_gaussian_mixture(&spec, 3).unwrap();
        for i in 0..50 {
            assert!((ds.row(i)[0] - 1.5).abs() < 1e-4);
            assert!((ds.row(i)[1] + 2.5).abs() < 1e-4);
        }
    }

    #[test]
    fn mixture_sample_mean_concentrates() {
        let spec = MixtureSpec {
            num_classes: 2,
            components: vec![
                MixtureComponent {
                    mean: vec![2.0, -1.0],
                    covariance: diag_cov(2, 1.0),
                    count: 10_000,
                    assigned_label: 0,
                },
                MixtureComponent {
                    mean: vec![0.0, 0.0],
                    covariance: diag_cov(2, 1.0),
                    count: 1,
                    assigned_label: 1,
                },
            ],
        };
        let ds = gen_gaussian_mixture(&spec, 11).unwrap();
        let n = 10_000;
        for dim in 0..2 {
            let mean: f64 = (0..n).map(|i| ds.row(i)[dim]).sum::<f64>() / n as f64;
            let bound = 3.0 / (n as f64).sqrt();
            assert!(
                (mean - spec.components[0].mean[dim]).abs() < bound,
                "dim {dim}: sample mean {mean} too far from spec"
            );
        }
    }

    #[test]
    fn mixture_rejects_non_spd() {
        let mut spec = simple_spec();
        spec.components[0].covariance = vec![vec![1.0, 2.0], vec![2.0, 1.0]]; // indefinite
        assert!(gen_gaussian_mixture(&spec, 0).is_err());
    }

    #[test]
    fn fig2_spec_shape() {
        let spec = default_fig2_spec();
        assert_eq!(spec.total_count(), 960);
        let outlier = spec.components.last().unwrap();
        // the outlier cluster sits nearest class 0's mean but is labeled 1
        assert_eq!(outlier.assigned_label, 1);
        let dist0: f64 = outlier
            .mean
            .iter()
            .zip(&spec.components[0].mean)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        let dist1: f64 = outlier
            .mean
            .iter()
            .zip(&spec.components[1].mean)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        assert!(dist0 < dist1);
    }

    #[test]
    fn noise_zero_is_identity() {
        let ds = gen_gaussian_mixture(&simple_spec(), 1).unwrap();
        let noisy = inject_label_noise(&ds, &NoiseSpec { flip_rate: 0.0 }, 5).unwrap();
        assert_eq!(ds, noisy);
    }

    #[test]
    fn noise_flip_fraction_concentrates() {
        let spec = MixtureSpec {
            num_classes: 3,
            components: vec![
                MixtureComponent {
                    mean: vec![0.0],
                    covariance: vec![vec![1.0]],
                    count: 10_000,
                    assigned_label: 0,
                },
                MixtureComponent {
                    mean: vec![0.0],
                    covariance: vec![vec![1.0]],
                    count: 1,
                    assigned_label: 1,
                },
            ],
        };
        let ds = gen_gaussian_mixture(&spec, 2).unwrap();
        let noisy = inject_label_noise(&ds, &NoiseSpec { flip_rate: 0.4 }, 9).unwrap();
        let flipped = ds
            .labels()
            .iter()
            .zip(noisy.labels())
            .filter(|(a, b)| a != b)
            .count();
        let frac = flipped as f64 / ds.len() as f64;
        assert!((frac - 0.4).abs() < 0.02, "flip fraction {frac}");
        // features untouched
        assert_eq!(ds.features_flat(), noisy.features_flat());
    }

    #[test]
    fn noise_never_flips_to_same_label() {
        let ds = gen_gaussian_mixture(&simple_spec(), 4).unwrap();
        let noisy = inject_label_noise(&ds, &NoiseSpec { flip_rate: 0.99 }, 6).unwrap();
        for (orig, new) in ds.labels().iter().zip(noisy.labels()) {
            if orig != new {
                assert!(*new < ds.num_classes());
            }
        }
    }

    #[test]
    fn split_sizes_and_partition() {
        let ds = gen_gaussian_mixture(&simple_spec(), 8).unwrap();
        let (labeled, unlabeled) = split_labeled_unlabeled(&ds, 0.5, 13).unwrap();
        assert_eq!(labeled.len(), 100);
        assert_eq!(unlabeled.len(), 100);
        let spec = default_fig2_spec();
        let big = gen_gaussian_mixture(&spec, 8).unwrap();
        let (labeled, unlabeled) = split_labeled_unlabeled(&big, 0.1, 13).unwrap();
        assert_eq!(labeled.len(), 96);
        assert_eq!(unlabeled.len(), 864);
    }

    #[test]
    fn split_rejects_degenerate_fraction() {
        let ds = gen_gaussian_mixture(&simple_spec(), 8).unwrap();
        assert!(split_labeled_unlabeled(&ds, 0.0, 1).is_err());
        assert!(split_labeled_unlabeled(&ds, 1.0, 1).is_err());
    }

    #[test]
    fn segmentation_deterministic_and_labeled() {
        let a = gen_toy_segmentation(3, 32, 32, 21).unwrap();
        let b = gen_toy_segmentation(3, 32, 32, 21).unwrap();
        assert_eq!(a, b);
        // every scene has at least one lesion pixel
        for scene in &a {
            assert!(scene.label_grid().iter().any(|&l| l > 0));
        }
    }

    #[test]
    fn segmentation_labels_match_ellipse_membership() {
        // brute-force pixel scan against the recorded ellipse parameters
        let scenes = gen_toy_segmentation(5, 32, 32, 33).unwrap();
        for scene in &scenes {
            for r in 0..scene.height() {
                for c in 0..scene.width() {
                    let expected = scene
                        .lesions()
                        .iter()
                        .rev()
                        .find(|l| l.contains(r, c))
                        .map_or(0, |l| l.class);
                    assert_eq!(scene.label(r, c), expected, "pixel ({r},{c})");
                }
            }
        }
    }

    #[test]
    fn segmentation_background_scene() {
        let scene = SegScene::background(16, 16, 4);
        assert!(scene.label_grid().iter().all(|&l| l == 0));
    }

    #[test]
    fn segmentation_rejects_small_grid() {
        assert!(gen_toy_segmentation(1, 4, 32, 0).is_err());
    }

    #[test]
    fn dataset_csv_round_trip() {
        let ds = gen_gaussian_mixture(&simple_spec(), 15).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let csv_path = dir.path().join("ds.csv");
        let manifest_path = dir.path().join("ds.manifest.json");
        let manifest = DatasetManifest {
            n: ds.len(),
            d: ds.num_features(),
            num_classes: ds.num_classes(),
            seed: 15,
            spec_digest: "test".to_string(),
        };
        save_dataset(&ds, &manifest, &csv_path, &manifest_path).unwrap();
        let first = std::fs::read(&csv_path).unwrap();
        let (loaded, loaded_manifest) = load_dataset(&csv_path, &manifest_path).unwrap();
        assert_eq!(loaded, ds);
        assert_eq!(loaded_manifest, manifest);
        save_dataset(&loaded, &loaded_manifest, &csv_path, &manifest_path).unwrap();
        let second = std::fs::read(&csv_path).unwrap();
        assert_eq!(first, second);
    }
}
