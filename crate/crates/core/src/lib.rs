//! Robust loss functions for noisy labels and a teacher-student
//! semi-supervised training pipeline, built on a small from-scratch dense
//! network.
//!
//! The crate provides:
//!
//! - [`losses`]: CE, GCE, BCE (beta cross-entropy), RCE, SCE, and MAE on
//!   probability vectors, with analytic gradients through softmax.
//! - [`model`]: dense feed-forward classifiers with SGD (momentum, weight
//!   decay, step schedules) and per-sample loss dispatch.
//! - [`datagen`]: deterministic Gaussian-mixture scenes, label-noise
//!   injection, labeled/unlabeled splits, and toy segmentation grids.
//! - [`pipeline`]: the teacher-student protocol with lower/upper-bound
//!   baselines, repeat statistics, and Dice evaluation.
//! - [`gradcheck`]: finite-difference verification of every loss gradient.
//!
//! With the default `parallel` feature, evaluation, pseudo-labeling, and
//! experiment repeats fan out over rayon; results reduce in fixed order, so
//! output is identical to the sequential build.

pub mod datagen;
pub mod error;
pub mod gradcheck;
pub mod losses;
pub mod model;
pub mod parallel;
pub mod pipeline;

pub use error::{Error, Result};
