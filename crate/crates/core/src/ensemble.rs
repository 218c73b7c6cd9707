//! Majority-voting ensemble framework.
//!
//! One iteration: stratified 70/30 split, k-fold cross-validation of every
//! pool classifier on the training portion only, ranking by mean CV F1,
//! retraining the top three on the whole training portion, and a hard
//! majority vote over their test predictions. Individual test metrics are
//! computed for every pool member so report tables can include them all.

use serde::{Deserialize, Serialize};

use crate::classifiers::{
    balanced_weights, ClassWeights, ClassifierKind, DefaultTrainer, Trainer, TrainConfig,
};
use crate::dataset::{ClassLabel, LayerRecord};
use crate::error::{Error, Result};
use crate::evaluation::{
    cross_validate, evaluate, stratified_split, CvOutcome, Metrics,
};
use crate::features::{build_matrix, FeatureMatrix, FeatureSetKind};
use crate::seeds;

/// Configuration of one framework iteration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrameworkConfig {
    /// Candidate classifiers; must hold more than three distinct kinds, all
    /// capable of cost-sensitive training.
    pub pool: Vec<ClassifierKind>,
    pub k: usize,
    pub test_fraction: f64,
    pub cost_sensitive: bool,
    pub feature_set: FeatureSetKind,
    pub seed: u64,
    pub train: TrainConfig,
}

impl FrameworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.pool.len() <= 3 {
            return Err(Error::Config(format!(
                "classifier pool holds {} kinds, need more than 3",
                self.pool.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for kind in &self.pool {
            if !seen.insert(kind) {
                return Err(Error::Config(format!("duplicate pool member {kind}")));
            }
        }
        if self.k < 2 {
            return Err(Error::Config(format!("k = {} folds, need at least 2", self.k)));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config(format!(
                "test fraction {} outside (0, 1)",
                self.test_fraction
            )));
        }
        Ok(())
    }
}

/// One classifier's cross-validation scores.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvScore {
    pub kind: ClassifierKind,
    pub mean_f1: f64,
    pub mean_accuracy: f64,
}

/// Classifiers sorted by mean CV F1 (descending), ties broken by higher mean
/// CV accuracy, then by the canonical order RF, DT, LR, SVC.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RankedPool {
    pub ranking: Vec<CvScore>,
}

impl RankedPool {
    pub fn top3(&self) -> [ClassifierKind; 3] {
        [
            self.ranking[0].kind,
            self.ranking[1].kind,
            self.ranking[2].kind,
        ]
    }
}

/// Rank pool classifiers by their cross-validation scores.
pub fn rank_top3(scores: &[CvScore]) -> Result<RankedPool> {
    if scores.len() <= 3 {
        return Err(Error::Config(format!(
            "ranking needs more than 3 classifiers, got {}",
            scores.len()
        )));
    }
    let mut ranking = scores.to_vec();
    ranking.sort_by(|a, b| {
        b.mean_f1
            .total_cmp(&a.mean_f1)
            .then(b.mean_accuracy.total_cmp(&a.mean_accuracy))
            .then(a.kind.canonical_index().cmp(&b.kind.canonical_index()))
    });
    Ok(RankedPool { ranking })
}

/// Hard majority vote over exactly three prediction sequences.
pub fn majority_vote(predictions: &[Vec<ClassLabel>]) -> Result<Vec<ClassLabel>> {
    if predictions.len() != 3 {
        return Err(Error::Config(format!(
            "majority vote needs exactly 3 voters, got {}",
            predictions.len()
        )));
    }
    let n = predictions[0].len();
    for p in predictions {
        if p.len() != n {
            return Err(Error::Length {
                left: n,
                right: p.len(),
            });
        }
    }
    Ok((0..n)
        .map(|i| {
            let votes = predictions
                .iter()
                .filter(|p| p[i] == ClassLabel::Anomalous)
                .count();
            // two classes, three voters: a strict majority always exists
            if votes >= 2 {
                ClassLabel::Anomalous
            } else {
                ClassLabel::Nominal
            }
        })
        .collect())
}

/// Test metrics and predictions for one pool member.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberResult {
    pub kind: ClassifierKind,
    pub metrics: Metrics,
    pub predictions: Vec<ClassLabel>,
    pub cv: CvOutcome,
}

/// Output of one framework iteration. All metrics refer to the same test
/// split, recomputable from `split_seed`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationResult {
    pub split_seed: u64,
    pub ranked: RankedPool,
    pub members: Vec<MemberResult>,
    pub mve_metrics: Metrics,
    pub mve_predictions: Vec<ClassLabel>,
}

impl IterationResult {
    pub fn member(&self, kind: ClassifierKind) -> Option<&MemberResult> {
        self.members.iter().find(|m| m.kind == kind)
    }
}

/// Run one framework iteration on records (features are extracted here).
pub fn run_framework(records: &[LayerRecord], cfg: &FrameworkConfig) -> Result<IterationResult> {
    let matrix = build_matrix(records, cfg.feature_set)?;
    run_framework_on_matrix(&matrix, cfg)
}

/// Run one framework iteration on a prebuilt feature matrix.
pub fn run_framework_on_matrix(
    matrix: &FeatureMatrix,
    cfg: &FrameworkConfig,
) -> Result<IterationResult> {
    run_framework_with(&DefaultTrainer, matrix, cfg)
}

/// [`run_framework_on_matrix`] with an injectable trainer (test hook).
pub fn run_framework_with(
    trainer: &dyn Trainer,
    matrix: &FeatureMatrix,
    cfg: &FrameworkConfig,
) -> Result<IterationResult> {
    cfg.validate()?;
    let split_seed = seeds::derive(cfg.seed, "split", 0);
    let split = stratified_split(matrix.labels(), cfg.test_fraction, split_seed)?;
    let train_m = matrix.subset(&split.train);
    let test_m = matrix.subset(&split.test);

    // Cross-validation strictly on the training portion.
    let mut scores = Vec::with_capacity(cfg.pool.len());
    let mut cv_outcomes = Vec::with_capacity(cfg.pool.len());
    for &kind in &cfg.pool {
        let cv = cross_validate(
            trainer,
            kind,
            &train_m,
            cfg.k,
            cfg.cost_sensitive,
            &cfg.train,
            seeds::derive(cfg.seed, "cv", kind.canonical_index() as u64),
        )?;
        scores.push(CvScore {
            kind,
            mean_f1: cv.mean_f1,
            mean_accuracy: cv.mean_accuracy,
        });
        cv_outcomes.push(cv);
    }
    let ranked = rank_top3(&scores)?;

    // Retrain every pool member on the full training portion; the top three
    // feed the vote, the rest only report individual test metrics.
    let weights = if cfg.cost_sensitive {
        balanced_weights(train_m.labels())?
    } else {
        ClassWeights::uniform()
    };
    let mut members = Vec::with_capacity(cfg.pool.len());
    for (&kind, cv) in cfg.pool.iter().zip(cv_outcomes) {
        let model = trainer.train(
            kind,
            &train_m,
            &weights,
            &cfg.train,
            seeds::derive(cfg.seed, "retrain", kind.canonical_index() as u64),
        )?;
        let predictions = model.predict(&test_m)?;
        let metrics = evaluate(test_m.labels(), &predictions)?;
        members.push(MemberResult {
            kind,
            metrics,
            predictions,
            cv,
        });
    }

    let top3 = ranked.top3();
    let top3_preds: Vec<Vec<ClassLabel>> = top3
        .iter()
        .map(|kind| {
            members
                .iter()
                .find(|m| m.kind == *kind)
                .expect("top3 kind is a pool member")
                .predictions
                .clone()
        })
        .collect();
    let mve_predictions = majority_vote(&top3_preds)?;
    let mve_metrics = evaluate(test_m.labels(), &mve_predictions)?;

    Ok(IterationResult {
        split_seed,
        ranked,
        members,
        mve_metrics,
        mve_predictions,
    })
}
