//! Error type shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

use crate::dataset::ClassLabel;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse error class, used by the CLI to pick an exit code.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Category {
    /// Invalid configuration or invalid use of an operation.
    Config,
    /// Bad or missing input data.
    Data,
    /// A numerical procedure failed (e.g. SVM non-convergence).
    Numerical,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("block {block}: {reason}")]
    Layout { block: usize, reason: String },

    #[error("layer {layer}: {reason}")]
    Record { layer: usize, reason: String },

    #[error("layer {layer}: missing signal file {path}")]
    MissingSignal { layer: usize, path: PathBuf },

    #[error("{path}:{line}: cannot parse sample {token:?}")]
    SignalParse {
        path: PathBuf,
        line: usize,
        token: String,
    },

    #[error("manifest: {0}")]
    Manifest(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("insufficient data: {0}")]
    Insufficient(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("length mismatch: {left} vs {right}")]
    Length { left: usize, right: usize },

    #[error("class {0} has no instances")]
    MissingClass(ClassLabel),

    #[error("training data contains a single class")]
    SingleClass,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("SVM did not converge: KKT violation {violation:.6e} after {iterations} iterations")]
    SvmConvergence { violation: f64, iterations: usize },

    #[error("fold {fold}: {source}")]
    Fold {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("iteration {iteration} ({feature_set}, {stage}): {source}")]
    Iteration {
        iteration: usize,
        feature_set: String,
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn category(&self) -> Category {
        match self {
            Error::Config(_) => Category::Config,
            Error::SvmConvergence { .. } => Category::Numerical,
            Error::Fold { source, .. } | Error::Iteration { source, .. } => source.category(),
            _ => Category::Data,
        }
    }
}
