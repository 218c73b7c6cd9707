//! Layer-wise overheating detection for laser powder bed fusion (LPBF).
//!
//! During an LPBF build a photodiode watches the melt pool and produces one
//! high-frequency intensity sequence per layer. Layers printed right above
//! deliberately unexposed blocks overhang loose powder and overheat; this
//! crate classifies each layer as nominal or anomalous from statistical
//! summaries of its signal.
//!
//! The pipeline:
//!
//! * [`dataset`] — load, label, synthesize, and subsample per-layer signal
//!   datasets,
//! * [`features`] — extract the MSMM / MSQ / MSD feature sets (mean, standard
//!   deviation, quantiles, maximum) plus train-time standardization,
//! * [`classifiers`] — four cost-sensitive classifiers (logistic regression,
//!   decision tree, random forest, RBF support vector classifier) with a
//!   uniform train/predict contract,
//! * [`evaluation`] — precision/recall/F1/accuracy, stratified splitting, and
//!   stratified k-fold cross-validation,
//! * [`ensemble`] — rank the pool by cross-validated F1, retrain the top
//!   three, and majority-vote their test predictions,
//! * [`harness`] — the repeatable multi-iteration experiment runner and its
//!   CSV/JSON reports.
//!
//! Everything is deterministic given a root seed: each stochastic step draws
//! from an independent stream derived via [`seeds`], so results do not depend
//! on thread scheduling. Data-parallel loops use rayon when the default
//! `parallel` feature is enabled and fall back to plain iteration otherwise.

pub mod classifiers;
pub mod dataset;
pub mod ensemble;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod harness;
pub mod seeds;

mod par;

pub use error::{Error, Result};
