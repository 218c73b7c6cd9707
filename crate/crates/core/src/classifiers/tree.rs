//! Weighted CART decision tree.
//!
//! Greedy binary splitting on the weighted Gini impurity, where each
//! sample's weight is its class weight. Candidate thresholds are midpoints
//! of consecutive distinct sorted feature values; the split maximizing the
//! weighted impurity decrease wins, with ties broken by (lowest feature
//! index, lowest threshold). Growth stops on max depth, min samples to
//! split, min samples per leaf, or purity. Leaves predict the class with the
//! greater weighted count; exact ties go to `Anomalous`.

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::ClassLabel;
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

use super::{ClassWeights, TreeConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        /// Weighted class counts, indexed by [`ClassLabel::index`].
        weighted_counts: [f64; 2],
        n_samples: usize,
    },
}

/// A fitted decision tree. Nodes live in an arena; index 0 is the root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeModel {
    pub nodes: Vec<TreeNode>,
    pub dim: usize,
}

impl TreeModel {
    /// Weighted class counts at the leaf a row lands in.
    pub fn weighted_counts(&self, row: &[f64]) -> Result<[f64; 2]> {
        if row.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                actual: row.len(),
            });
        }
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                TreeNode::Leaf {
                    weighted_counts, ..
                } => return Ok(*weighted_counts),
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> Result<ClassLabel> {
        let counts = self.weighted_counts(row)?;
        Ok(argmax_label(counts))
    }

    pub fn predict(&self, rows: &FeatureMatrix) -> Result<Vec<ClassLabel>> {
        rows.rows().map(|r| self.predict_row(r)).collect()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[TreeNode], idx: usize) -> usize {
            match &nodes[idx] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => {
                    1 + walk(nodes, *left).max(walk(nodes, *right))
                }
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Greater weighted count wins; exact tie predicts `Anomalous` to favor
/// recall on the safety-critical class.
pub(crate) fn argmax_label(counts: [f64; 2]) -> ClassLabel {
    if counts[ClassLabel::Anomalous.index()] >= counts[ClassLabel::Nominal.index()] {
        ClassLabel::Anomalous
    } else {
        ClassLabel::Nominal
    }
}

pub(super) struct TreeBuilder<'a> {
    data: &'a FeatureMatrix,
    weights: &'a ClassWeights,
    cfg: &'a TreeConfig,
    /// `Some(k)` samples k candidate features per split (forest mode).
    feature_subsample: Option<usize>,
    rng: ChaCha8Rng,
    nodes: Vec<TreeNode>,
}

impl<'a> TreeBuilder<'a> {
    pub(super) fn new(
        data: &'a FeatureMatrix,
        weights: &'a ClassWeights,
        cfg: &'a TreeConfig,
        feature_subsample: Option<usize>,
        rng: ChaCha8Rng,
    ) -> Self {
        Self {
            data,
            weights,
            cfg,
            feature_subsample,
            rng,
            nodes: Vec::new(),
        }
    }

    pub(super) fn fit(mut self, indices: &[usize]) -> Result<TreeModel> {
        if indices.is_empty() {
            return Err(Error::Empty("tree training on no samples"));
        }
        self.grow(indices, 0);
        Ok(TreeModel {
            nodes: self.nodes,
            dim: self.data.dim(),
        })
    }

    fn weighted_counts(&self, indices: &[usize]) -> [f64; 2] {
        let mut counts = [0.0; 2];
        for &i in indices {
            let label = self.data.labels()[i];
            counts[label.index()] += self.weights.weight(label);
        }
        counts
    }

    fn grow(&mut self, indices: &[usize], depth: usize) -> usize {
        let counts = self.weighted_counts(indices);
        let pure = counts[0] == 0.0 || counts[1] == 0.0;
        let stop = depth >= self.cfg.max_depth
            || indices.len() < self.cfg.min_samples_split
            || pure;
        let split = if stop { None } else { self.best_split(indices) };
        match split {
            None => {
                self.nodes.push(TreeNode::Leaf {
                    weighted_counts: counts,
                    n_samples: indices.len(),
                });
                self.nodes.len() - 1
            }
            Some((feature, threshold)) => {
                let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
                    .iter()
                    .partition(|&&i| self.data.row(i)[feature] <= threshold);
                // Reserve the slot so child indices are known after recursion.
                let slot = self.nodes.len();
                self.nodes.push(TreeNode::Leaf {
                    weighted_counts: counts,
                    n_samples: indices.len(),
                });
                let left = self.grow(&left_idx, depth + 1);
                let right = self.grow(&right_idx, depth + 1);
                self.nodes[slot] = TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                };
                slot
            }
        }
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.data.dim();
        match self.feature_subsample {
            None => (0..d).collect(),
            Some(k) => {
                let k = k.clamp(1, d);
                let mut chosen = rand::seq::index::sample(&mut self.rng, d, k).into_vec();
                // Ascending order keeps the lowest-feature-index tie-break
                // meaningful under subsampling.
                chosen.sort_unstable();
                chosen
            }
        }
    }

    /// Exhaustive search over candidate features and all midpoints between
    /// consecutive distinct sorted values; returns the split minimizing the
    /// summed weighted child Gini (equivalently maximizing the decrease).
    fn best_split(&mut self, indices: &[usize]) -> Option<(usize, f64)> {
        let features = self.candidate_features();
        let msl = self.cfg.min_samples_leaf;
        let mut best: Option<(f64, usize, f64)> = None;
        let mut column: Vec<(f64, ClassLabel)> = Vec::with_capacity(indices.len());
        for feature in features {
            column.clear();
            column.extend(
                indices
                    .iter()
                    .map(|&i| (self.data.row(i)[feature], self.data.labels()[i])),
            );
            column.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            let mut left = [0.0f64; 2];
            let mut right = self.weighted_counts(indices);
            for pos in 0..column.len() - 1 {
                let (value, label) = column[pos];
                let w = self.weights.weight(label);
                left[label.index()] += w;
                right[label.index()] -= w;
                let next_value = column[pos + 1].0;
                if value == next_value {
                    continue;
                }
                let n_left = pos + 1;
                let n_right = column.len() - n_left;
                if n_left < msl || n_right < msl {
                    continue;
                }
                let cost = weighted_gini_cost(left) + weighted_gini_cost(right);
                // Strict `<` keeps the first (lowest feature, lowest
                // threshold) among equally good splits.
                if best.is_none_or(|(b, _, _)| cost < b) {
                    let mut threshold = 0.5 * (value + next_value);
                    // Guard against the midpoint rounding up to the next
                    // value, which would send both sides left.
                    if threshold >= next_value {
                        threshold = value;
                    }
                    best = Some((cost, feature, threshold));
                }
            }
        }
        best.map(|(_, feature, threshold)| (feature, threshold))
    }
}

/// `W * gini(W) = W - (W_0² + W_1²) / W` for weighted counts `W_c`.
fn weighted_gini_cost(counts: [f64; 2]) -> f64 {
    let total = counts[0] + counts[1];
    if total <= 0.0 {
        return 0.0;
    }
    total - (counts[0] * counts[0] + counts[1] * counts[1]) / total
}

/// Fit a CART tree on all features.
///
/// `seed` feeds the per-split feature subsampling used by forests; the plain
/// tree considers every feature, so its output does not depend on it.
pub fn train_tree(
    data: &FeatureMatrix,
    weights: &ClassWeights,
    cfg: &TreeConfig,
    seed: u64,
) -> Result<super::TrainedModel> {
    let indices: Vec<usize> = (0..data.n_rows()).collect();
    let rng = crate::seeds::rng(seed, "tree", 0);
    let model = TreeBuilder::new(data, weights, cfg, None, rng).fit(&indices)?;
    Ok(super::TrainedModel::Tree(model))
}

pub(super) fn fit_tree_on(
    data: &FeatureMatrix,
    indices: &[usize],
    weights: &ClassWeights,
    cfg: &TreeConfig,
    feature_subsample: Option<usize>,
    rng: ChaCha8Rng,
) -> Result<TreeModel> {
    TreeBuilder::new(data, weights, cfg, feature_subsample, rng).fit(indices)
}
