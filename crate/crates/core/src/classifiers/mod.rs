//! The four cost-sensitive classifiers behind a uniform train/predict
//! contract.
//!
//! All four accept per-class misclassification weights; "balanced" weights
//! are inversely proportional to class frequencies. Logistic regression and
//! the SVM fit a [`Standardizer`](crate::features::Standardizer) on their
//! training rows and carry it inside the model, so `predict` always takes
//! raw feature rows. Tree and forest consume raw features directly (split
//! decisions are invariant under monotone transforms).

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dataset::ClassLabel;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

pub mod forest;
pub mod logistic;
pub mod svm;
pub mod tree;

pub use forest::ForestModel;
pub use logistic::LogisticModel;
pub use svm::SvmModel;
pub use tree::TreeModel;

/// Classifier roster. The declaration order is the canonical tie-break
/// order used when ranking by cross-validated scores.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassifierKind {
    #[serde(rename = "rf")]
    RandomForest,
    #[serde(rename = "dt")]
    DecisionTree,
    #[serde(rename = "lr")]
    Logistic,
    #[serde(rename = "svc")]
    Svc,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 4] = [
        ClassifierKind::RandomForest,
        ClassifierKind::DecisionTree,
        ClassifierKind::Logistic,
        ClassifierKind::Svc,
    ];

    pub fn canonical_index(self) -> usize {
        match self {
            ClassifierKind::RandomForest => 0,
            ClassifierKind::DecisionTree => 1,
            ClassifierKind::Logistic => 2,
            ClassifierKind::Svc => 3,
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassifierKind::RandomForest => write!(f, "rf"),
            ClassifierKind::DecisionTree => write!(f, "dt"),
            ClassifierKind::Logistic => write!(f, "lr"),
            ClassifierKind::Svc => write!(f, "svc"),
        }
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rf" | "random-forest" => Ok(ClassifierKind::RandomForest),
            "dt" | "decision-tree" => Ok(ClassifierKind::DecisionTree),
            "lr" | "logistic" => Ok(ClassifierKind::Logistic),
            "svc" | "svm" => Ok(ClassifierKind::Svc),
            other => Err(Error::Config(format!("unknown classifier {other:?}"))),
        }
    }
}

/// Per-class misclassification weights (positive, dimensionless).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassWeights {
    pub nominal: f64,
    pub anomalous: f64,
}

impl ClassWeights {
    /// Explicit uniform weights; the no-cost-sensitivity mode runs through
    /// the same code path as balanced weights.
    pub fn uniform() -> Self {
        Self {
            nominal: 1.0,
            anomalous: 1.0,
        }
    }

    pub fn weight(&self, label: ClassLabel) -> f64 {
        match label {
            ClassLabel::Nominal => self.nominal,
            ClassLabel::Anomalous => self.anomalous,
        }
    }
}

/// Balanced weights `w_c = N / (K * N_c)`, so that the total weight
/// `Σ_c w_c * N_c` equals the number of labels.
pub fn balanced_weights(labels: &[ClassLabel]) -> Result<ClassWeights> {
    if labels.is_empty() {
        return Err(Error::Empty("weights of empty label set"));
    }
    let mut counts = [0usize; 2];
    for l in labels {
        counts[l.index()] += 1;
    }
    for class in ClassLabel::ALL {
        if counts[class.index()] == 0 {
            return Err(Error::MissingClass(class));
        }
    }
    let n = labels.len() as f64;
    let k = 2.0;
    Ok(ClassWeights {
        nominal: n / (k * counts[0] as f64),
        anomalous: n / (k * counts[1] as f64),
    })
}

/// Logistic-regression hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    /// Inverse of regularization strength.
    pub c: f64,
    pub max_iterations: usize,
    /// Stop when the gradient infinity-norm falls below this.
    pub tolerance: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            max_iterations: 1000,
            tolerance: 1e-6,
        }
    }
}

/// Decision-tree hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub max_depth: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_depth: 20,
            min_samples_split: 2,
            min_samples_leaf: 1,
        }
    }
}

/// Random-forest hyperparameters. `bootstrap` and `feature_subsample` exist
/// so tests can collapse a forest onto a single plain tree.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_estimators: usize,
    pub tree: TreeConfig,
    pub bootstrap: bool,
    /// Candidate features per split; `None` means `⌊√d⌋`.
    pub feature_subsample: Option<usize>,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_estimators: 200,
            tree: TreeConfig::default(),
            bootstrap: true,
            feature_subsample: None,
        }
    }
}

/// Support-vector-classifier hyperparameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmConfig {
    /// Inverse of regularization strength; the per-sample box constraint is
    /// `C * w_class`.
    pub c: f64,
    /// KKT violation below which the solver stops.
    pub tolerance: f64,
    /// Maximum number of pairwise updates before giving up.
    pub max_passes: usize,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            tolerance: 1e-3,
            max_passes: 100_000,
        }
    }
}

/// Hyperparameters for the whole pool.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub forest: ForestConfig,
    pub tree: TreeConfig,
    pub logistic: LogisticConfig,
    pub svm: SvmConfig,
}

/// A trained classifier. Models are immutable and predictions are pure
/// functions of `(model, rows)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum TrainedModel {
    Logistic(LogisticModel),
    Tree(TreeModel),
    Forest(ForestModel),
    Svm(SvmModel),
    /// Fixed-output baseline, used as a stub pool member in tests.
    Constant { label: ClassLabel },
}

impl TrainedModel {
    /// One label per row. Rows are raw feature vectors; models that were
    /// trained on standardized inputs apply their stored standardizer.
    pub fn predict(&self, rows: &FeatureMatrix) -> Result<Vec<ClassLabel>> {
        match self {
            TrainedModel::Logistic(m) => m.predict(rows),
            TrainedModel::Tree(m) => m.predict(rows),
            TrainedModel::Forest(m) => m.predict(rows),
            TrainedModel::Svm(m) => m.predict(rows),
            TrainedModel::Constant { label } => Ok(vec![*label; rows.n_rows()]),
        }
    }
}

const MODEL_FORMAT_VERSION: u32 = 1;

/// Versioned on-disk form of a trained model. `feature_set` records which
/// extraction the model expects at prediction time, when known.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelDocument {
    pub version: u32,
    pub classifier: ClassifierKind,
    pub feature_set: Option<crate::features::FeatureSetKind>,
    pub weights: ClassWeights,
    pub train_config: TrainConfig,
    pub model: TrainedModel,
}

impl ModelDocument {
    pub fn new(
        classifier: ClassifierKind,
        feature_set: Option<crate::features::FeatureSetKind>,
        weights: ClassWeights,
        train_config: TrainConfig,
        model: TrainedModel,
    ) -> Self {
        Self {
            version: MODEL_FORMAT_VERSION,
            classifier,
            feature_set,
            weights,
            train_config,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text)?;
        if doc.version != MODEL_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported model format version {}",
                doc.version
            )));
        }
        Ok(doc)
    }
}

fn check_finite(data: &FeatureMatrix) -> Result<()> {
    for row in data.rows() {
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("training features"));
        }
    }
    Ok(())
}

fn check_two_classes(labels: &[ClassLabel]) -> Result<()> {
    let first = labels.first().ok_or(Error::Empty("no training labels"))?;
    if labels.iter().all(|l| l == first) {
        return Err(Error::SingleClass);
    }
    Ok(())
}

/// Train one classifier of the pool on `data` (rows + labels).
pub fn train(
    kind: ClassifierKind,
    data: &FeatureMatrix,
    weights: &ClassWeights,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<TrainedModel> {
    if weights.nominal <= 0.0 || weights.anomalous <= 0.0 {
        return Err(Error::Config("class weights must be positive".into()));
    }
    check_finite(data)?;
    match kind {
        ClassifierKind::RandomForest => forest::train_forest(data, weights, &cfg.forest, seed),
        ClassifierKind::DecisionTree => tree::train_tree(data, weights, &cfg.tree, seed),
        ClassifierKind::Logistic => logistic::train_logistic(data, weights, &cfg.logistic),
        ClassifierKind::Svc => svm::train_svc(data, weights, &cfg.svm),
    }
}

/// Training hook: the ensemble and cross-validation are generic over this so
/// tests can substitute stub pool members.
pub trait Trainer: Sync {
    fn train(
        &self,
        kind: ClassifierKind,
        data: &FeatureMatrix,
        weights: &ClassWeights,
        cfg: &TrainConfig,
        seed: u64,
    ) -> Result<TrainedModel>;
}

/// The real pool.
#[derive(Clone, Copy, Debug, Default)]
pub struct DefaultTrainer;

impl Trainer for DefaultTrainer {
    fn train(
        &self,
        kind: ClassifierKind,
        data: &FeatureMatrix,
        weights: &ClassWeights,
        cfg: &TrainConfig,
        seed: u64,
    ) -> Result<TrainedModel> {
        train(kind, data, weights, cfg, seed)
    }
}
