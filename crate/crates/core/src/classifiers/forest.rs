//! Random forest of weighted CART trees.
//!
//! Each tree trains on an N-sized bootstrap resample with `⌊√d⌋` candidate
//! features per split. Class weights are the ones computed on the full
//! training set, applied inside every tree's Gini. Prediction averages the
//! per-tree leaf class-proportion distributions and takes the argmax, with
//! ties going to `Anomalous`.
//!
//! Tree `t` draws from a stream derived from `(seed, t)`, so training is
//! schedule-independent and may run data-parallel.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::ClassLabel;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;
use crate::{par, seeds};

use super::tree::{argmax_label, fit_tree_on, TreeModel};
use super::{ClassWeights, ForestConfig, TrainedModel};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<TreeModel>,
    /// Seed of each tree's bootstrap/subsampling stream.
    pub tree_seeds: Vec<u64>,
    pub dim: usize,
}

impl ForestModel {
    /// Mean over trees of the leaf class-proportion distribution.
    pub fn mean_distribution(&self, row: &[f64]) -> Result<[f64; 2]> {
        let mut acc = [0.0f64; 2];
        for tree in &self.trees {
            let counts = tree.weighted_counts(row)?;
            let total = counts[0] + counts[1];
            if total > 0.0 {
                acc[0] += counts[0] / total;
                acc[1] += counts[1] / total;
            }
        }
        let n = self.trees.len() as f64;
        Ok([acc[0] / n, acc[1] / n])
    }

    pub fn predict_row(&self, row: &[f64]) -> Result<ClassLabel> {
        Ok(argmax_label(self.mean_distribution(row)?))
    }

    pub fn predict(&self, rows: &FeatureMatrix) -> Result<Vec<ClassLabel>> {
        rows.rows().map(|r| self.predict_row(r)).collect()
    }
}

pub fn train_forest(
    data: &FeatureMatrix,
    weights: &ClassWeights,
    cfg: &ForestConfig,
    seed: u64,
) -> Result<TrainedModel> {
    if data.n_rows() == 0 {
        return Err(Error::Empty("forest training on no samples"));
    }
    if cfg.n_estimators == 0 {
        return Err(Error::Config("forest with zero estimators".into()));
    }
    let d = data.dim();
    let subsample = cfg
        .feature_subsample
        .unwrap_or_else(|| (d as f64).sqrt().floor() as usize)
        .clamp(1, d);
    let n = data.n_rows();
    let tree_seeds: Vec<u64> = (0..cfg.n_estimators)
        .map(|t| seeds::derive(seed, "forest-tree", t as u64))
        .collect();
    let trees: Vec<Result<TreeModel>> = par::map_range(cfg.n_estimators, |t| {
        let mut rng = seeds::rng(tree_seeds[t], "bootstrap", 0);
        let indices: Vec<usize> = if cfg.bootstrap {
            (0..n).map(|_| rng.random_range(0..n)).collect()
        } else {
            (0..n).collect()
        };
        // Feature subsampling continues on the same per-tree stream.
        fit_tree_on(data, &indices, weights, &cfg.tree, Some(subsample), rng)
    });
    let trees: Vec<TreeModel> = trees.into_iter().collect::<Result<_>>()?;
    Ok(TrainedModel::Forest(ForestModel {
        trees,
        tree_seeds,
        dim: d,
    }))
}
