//! Classification metrics, stratified splitting, and stratified k-fold
//! cross-validation.
//!
//! `Anomalous` is the positive class throughout. F1 is the primary metric:
//! with 352 nominal vs 27 anomalous layers, accuracy is dominated by the
//! majority class and a constant-nominal predictor already scores 0.93.

use serde::{Deserialize, Serialize};

use crate::classifiers::{
    balanced_weights, ClassWeights, ClassifierKind, Trainer, TrainConfig, TrainedModel,
};
use crate::dataset::ClassLabel;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::{par, seeds};

/// Binary confusion counts with `Anomalous` as positive.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.true_positives + self.false_positives + self.true_negatives + self.false_negatives
    }
}

/// Count prediction outcomes against ground truth.
pub fn confusion_counts(
    y_true: &[ClassLabel],
    y_pred: &[ClassLabel],
) -> Result<ConfusionCounts> {
    if y_true.len() != y_pred.len() {
        return Err(Error::Length {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    if y_true.is_empty() {
        return Err(Error::Empty("confusion counts of empty label sequences"));
    }
    let mut c = ConfusionCounts {
        true_positives: 0,
        false_positives: 0,
        true_negatives: 0,
        false_negatives: 0,
    };
    for (t, p) in y_true.iter().zip(y_pred) {
        match (t, p) {
            (ClassLabel::Anomalous, ClassLabel::Anomalous) => c.true_positives += 1,
            (ClassLabel::Nominal, ClassLabel::Anomalous) => c.false_positives += 1,
            (ClassLabel::Nominal, ClassLabel::Nominal) => c.true_negatives += 1,
            (ClassLabel::Anomalous, ClassLabel::Nominal) => c.false_negatives += 1,
        }
    }
    Ok(c)
}

/// Precision, recall, F1, and accuracy, all in [0, 1].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

/// Metrics from confusion counts.
///
/// Zero-division convention: precision is 0 when TP+FP = 0, recall is 0 when
/// TP+FN = 0, and F1 is 0 when P+R = 0 — the conservative choice for
/// constant predictors.
pub fn metrics_from_counts(c: &ConfusionCounts) -> Result<Metrics> {
    let total = c.total();
    if total == 0 {
        return Err(Error::Empty("metrics of all-zero confusion counts"));
    }
    let tp = c.true_positives as f64;
    let precision = match c.true_positives + c.false_positives {
        0 => 0.0,
        d => tp / d as f64,
    };
    let recall = match c.true_positives + c.false_negatives {
        0 => 0.0,
        d => tp / d as f64,
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    let accuracy = (c.true_positives + c.true_negatives) as f64 / total as f64;
    Ok(Metrics {
        precision,
        recall,
        f1,
        accuracy,
    })
}

/// Convenience: confusion counts then metrics.
pub fn evaluate(y_true: &[ClassLabel], y_pred: &[ClassLabel]) -> Result<Metrics> {
    metrics_from_counts(&confusion_counts(y_true, y_pred)?)
}

/// Disjoint train/test index sets covering the whole dataset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

fn round_half_up(x: f64) -> usize {
    (x + 0.5).floor() as usize
}

fn class_indices(labels: &[ClassLabel]) -> [Vec<usize>; 2] {
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, l) in labels.iter().enumerate() {
        by_class[l.index()].push(i);
    }
    by_class
}

/// Class-preserving random split. Per class, the test side gets
/// `round(N_c · test_fraction)` members, clamped so both sides keep at least
/// one; membership is a seeded uniform draw.
pub fn stratified_split(
    labels: &[ClassLabel],
    test_fraction: f64,
    seed: u64,
) -> Result<SplitIndices> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::Config(format!(
            "test fraction {test_fraction} outside (0, 1)"
        )));
    }
    if labels.is_empty() {
        return Err(Error::Empty("split of empty label sequence"));
    }
    let mut rng = seeds::rng(seed, "stratified-split", 0);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for mut indices in class_indices(labels) {
        let n = indices.len();
        if n == 0 {
            continue;
        }
        if n < 2 {
            return Err(Error::Insufficient(format!(
                "a class with {n} instance(s) cannot keep one on each split side"
            )));
        }
        let want = round_half_up(n as f64 * test_fraction).clamp(1, n - 1);
        shuffle(&mut indices, &mut rng);
        test.extend_from_slice(&indices[..want]);
        train.extend_from_slice(&indices[want..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test })
}

fn shuffle(indices: &mut [usize], rng: &mut rand_chacha::ChaCha8Rng) {
    use rand::seq::SliceRandom;
    indices.shuffle(rng);
}

/// Fold id per training index.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldAssignment {
    pub fold_of: Vec<usize>,
    pub k: usize,
    /// Classes with fewer instances than folds; some folds miss them.
    pub underrepresented: Vec<ClassLabel>,
}

impl FoldAssignment {
    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        self.fold_of
            .iter()
            .enumerate()
            .filter(|(_, &f)| f == fold)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        self.fold_of
            .iter()
            .enumerate()
            .filter(|(_, &f)| f != fold)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Class-preserving k folds: per class, a seeded shuffle distributed
/// round-robin, so per-class fold sizes differ by at most one. Classes are
/// offset against each other to keep total fold sizes even.
pub fn stratified_kfold(labels: &[ClassLabel], k: usize, seed: u64) -> Result<FoldAssignment> {
    if k < 2 {
        return Err(Error::Config(format!("k = {k} folds, need at least 2")));
    }
    if k > labels.len() {
        return Err(Error::Config(format!(
            "k = {k} folds exceed {} instances",
            labels.len()
        )));
    }
    let mut rng = seeds::rng(seed, "stratified-kfold", 0);
    let mut fold_of = vec![0usize; labels.len()];
    let mut underrepresented = Vec::new();
    let mut offset = 0usize;
    for (class, mut indices) in ClassLabel::ALL.into_iter().zip(class_indices(labels)) {
        if indices.is_empty() {
            continue;
        }
        if indices.len() < k {
            underrepresented.push(class);
        }
        shuffle(&mut indices, &mut rng);
        for (j, &i) in indices.iter().enumerate() {
            fold_of[i] = (j + offset) % k;
        }
        offset = (offset + indices.len()) % k;
    }
    Ok(FoldAssignment {
        fold_of,
        k,
        underrepresented,
    })
}

/// Cross-validation summary for one classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvOutcome {
    pub mean_f1: f64,
    pub mean_accuracy: f64,
    pub folds: Vec<Metrics>,
}

/// Stratified k-fold cross-validation of one classifier kind.
///
/// Per fold: train on the other k−1 folds (class weights recomputed on that
/// portion when `cost_sensitive`; LR/SVM refit their standardizer inside
/// training), evaluate on the held-out fold. Fold seeds derive from
/// `(seed, fold)`, so folds may run in parallel with identical results.
pub fn cross_validate(
    trainer: &dyn Trainer,
    kind: ClassifierKind,
    data: &FeatureMatrix,
    k: usize,
    cost_sensitive: bool,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<CvOutcome> {
    Ok(cross_validate_with_models(trainer, kind, data, k, cost_sensitive, cfg, seed)?.0)
}

/// [`cross_validate`] that also returns the per-fold trained models (used by
/// leakage audits).
pub fn cross_validate_with_models(
    trainer: &dyn Trainer,
    kind: ClassifierKind,
    data: &FeatureMatrix,
    k: usize,
    cost_sensitive: bool,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<(CvOutcome, Vec<TrainedModel>)> {
    let assignment = stratified_kfold(data.labels(), k, seeds::derive(seed, "folds", 0))?;
    let outcomes = par::map_range(k, |fold| -> Result<(Metrics, TrainedModel)> {
        let run = || -> Result<(Metrics, TrainedModel)> {
            let train_idx = assignment.train_indices(fold);
            let test_idx = assignment.test_indices(fold);
            let train_m = data.subset(&train_idx);
            let test_m = data.subset(&test_idx);
            let weights = if cost_sensitive {
                balanced_weights(train_m.labels())?
            } else {
                ClassWeights::uniform()
            };
            let model = trainer.train(
                kind,
                &train_m,
                &weights,
                cfg,
                seeds::derive(seed, "fold-train", fold as u64),
            )?;
            let preds = model.predict(&test_m)?;
            Ok((evaluate(test_m.labels(), &preds)?, model))
        };
        run().map_err(|e| Error::Fold {
            fold,
            source: Box::new(e),
        })
    });
    let mut folds = Vec::with_capacity(k);
    let mut models = Vec::with_capacity(k);
    for outcome in outcomes {
        let (m, model) = outcome?;
        folds.push(m);
        models.push(model);
    }
    let n = folds.len() as f64;
    let outcome = CvOutcome {
        mean_f1: folds.iter().map(|m| m.f1).sum::<f64>() / n,
        mean_accuracy: folds.iter().map(|m| m.accuracy).sum::<f64>() / n,
        folds,
    };
    Ok((outcome, models))
}
