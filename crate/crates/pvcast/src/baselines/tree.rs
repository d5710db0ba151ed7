//! Greedy variance-reduction regression trees and their boosted ensemble.
//!
//! Splits are evaluated at midpoints of consecutive sorted unique feature
//! values; ties break to the lowest feature index, then lowest threshold.
//! Samples with feature value ≤ threshold go left.

use serde::{Deserialize, Serialize};

use crate::dataset::PreparedDataset;
use crate::tensor::TensorError;
use crate::training::Forecaster;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CartConfig {
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for CartConfig {
    fn default() -> Self {
        CartConfig {
            max_depth: 8,
            min_samples_leaf: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Leaf {
        value: f64,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Binary regression tree stored as an explicit node list; index 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    pub nodes: Vec<TreeNode>,
}

impl RegressionTree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                TreeNode::Leaf { value } => return *value,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }

    /// The root's (feature, threshold) if the tree split at all.
    pub fn root_split(&self) -> Option<(usize, f64)> {
        match self.nodes[0] {
            TreeNode::Split {
                feature, threshold, ..
            } => Some((feature, threshold)),
            TreeNode::Leaf { .. } => None,
        }
    }
}

impl Forecaster for RegressionTree {
    fn predict_norm(&self, window: &[f64]) -> Result<f64, TensorError> {
        Ok(self.predict(window))
    }
}

fn mean(values: impl Iterator<Item = f64>, n: usize) -> f64 {
    values.sum::<f64>() / n as f64
}

/// Sum of squared errors around the mean of the indexed targets.
fn sse(indices: &[usize], ys: &[f64]) -> f64 {
    let m = mean(indices.iter().map(|&i| ys[i]), indices.len());
    indices.iter().map(|&i| (ys[i] - m) * (ys[i] - m)).sum()
}

/// Best (feature, threshold) split by total child SSE; `None` when no split
/// satisfies the leaf-size minimum or reduces SSE.
fn best_split(
    xs: &[Vec<f64>],
    ys: &[f64],
    indices: &[usize],
    min_samples_leaf: usize,
) -> Option<(usize, f64)> {
    let n_features = xs[0].len();
    let parent_sse = sse(indices, ys);
    let mut best: Option<(f64, usize, f64)> = None; // (score, feature, threshold)
    for feature in 0..n_features {
        let mut vals: Vec<f64> = indices.iter().map(|&i| xs[i][feature]).collect();
        vals.sort_by(f64::total_cmp);
        vals.dedup();
        for pair in vals.windows(2) {
            let threshold = (pair[0] + pair[1]) / 2.0;
            let (left, right): (Vec<usize>, Vec<usize>) = indices
                .iter()
                .partition(|&&i| xs[i][feature] <= threshold);
            if left.len() < min_samples_leaf || right.len() < min_samples_leaf {
                continue;
            }
            let score = sse(&left, ys) + sse(&right, ys);
            let better = match best {
                None => score < parent_sse - 1e-12,
                // strict improvement keeps the earliest feature/threshold on ties
                Some((b, _, _)) => score < b - 1e-12,
            };
            if better {
                best = Some((score, feature, threshold));
            }
        }
    }
    best.map(|(_, f, t)| (f, t))
}

fn grow(
    xs: &[Vec<f64>],
    ys: &[f64],
    indices: Vec<usize>,
    depth: usize,
    cfg: &CartConfig,
    nodes: &mut Vec<TreeNode>,
) -> usize {
    let leaf_value = mean(indices.iter().map(|&i| ys[i]), indices.len());
    let pure = indices.iter().all(|&i| ys[i] == ys[indices[0]]);
    if depth >= cfg.max_depth || pure || indices.len() < 2 * cfg.min_samples_leaf {
        nodes.push(TreeNode::Leaf { value: leaf_value });
        return nodes.len() - 1;
    }
    match best_split(xs, ys, &indices, cfg.min_samples_leaf) {
        None => {
            nodes.push(TreeNode::Leaf { value: leaf_value });
            nodes.len() - 1
        }
        Some((feature, threshold)) => {
            let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
                .iter()
                .partition(|&&i| xs[i][feature] <= threshold);
            let slot = nodes.len();
            nodes.push(TreeNode::Leaf { value: leaf_value }); // placeholder
            let left = grow(xs, ys, left_idx, depth + 1, cfg, nodes);
            let right = grow(xs, ys, right_idx, depth + 1, cfg, nodes);
            nodes[slot] = TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            };
            slot
        }
    }
}

pub fn fit_tree(xs: &[Vec<f64>], ys: &[f64], cfg: &CartConfig) -> RegressionTree {
    assert!(!xs.is_empty(), "CART needs nonempty data");
    let mut nodes = Vec::new();
    grow(xs, ys, (0..xs.len()).collect(), 0, cfg, &mut nodes);
    RegressionTree { nodes }
}

pub fn train_cart(dataset: &PreparedDataset, cfg: &CartConfig) -> RegressionTree {
    let (xs, ys) = super::training_rows(dataset);
    fit_tree(&xs, &ys, cfg)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GbdtConfig {
    pub n_trees: usize,
    pub shrinkage: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
}

impl Default for GbdtConfig {
    fn default() -> Self {
        GbdtConfig {
            n_trees: 100,
            shrinkage: 0.1,
            max_depth: 3,
            min_samples_leaf: 1,
        }
    }
}

/// Stagewise boosted trees on squared-loss residuals:
/// prediction = init + shrinkage · Σ tree outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GbdtModel {
    pub trees: Vec<RegressionTree>,
    pub shrinkage: f64,
    /// Global target mean.
    pub init: f64,
    /// Training MSE after each stage.
    pub stage_mse: Vec<f64>,
}

impl GbdtModel {
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.init + self.shrinkage * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }
}

impl Forecaster for GbdtModel {
    fn predict_norm(&self, window: &[f64]) -> Result<f64, TensorError> {
        Ok(self.predict(window))
    }
}

pub fn fit_gbdt(xs: &[Vec<f64>], ys: &[f64], cfg: &GbdtConfig) -> GbdtModel {
    assert!(cfg.n_trees >= 1, "GBDT needs at least one tree");
    assert!(!xs.is_empty(), "GBDT needs nonempty data");
    let init = mean(ys.iter().copied(), ys.len());
    let tree_cfg = CartConfig {
        max_depth: cfg.max_depth,
        min_samples_leaf: cfg.min_samples_leaf,
    };
    let mut preds = vec![init; ys.len()];
    let mut trees = Vec::with_capacity(cfg.n_trees);
    let mut stage_mse = Vec::with_capacity(cfg.n_trees);
    for _ in 0..cfg.n_trees {
        let residuals: Vec<f64> = ys.iter().zip(&preds).map(|(y, p)| y - p).collect();
        let tree = fit_tree(xs, &residuals, &tree_cfg);
        for (p, x) in preds.iter_mut().zip(xs) {
            *p += cfg.shrinkage * tree.predict(x);
        }
        stage_mse.push(
            ys.iter()
                .zip(&preds)
                .map(|(y, p)| (y - p) * (y - p))
                .sum::<f64>()
                / ys.len() as f64,
        );
        trees.push(tree);
    }
    GbdtModel {
        trees,
        shrinkage: cfg.shrinkage,
        init,
        stage_mse,
    }
}

pub fn train_gbdt(dataset: &PreparedDataset, cfg: &GbdtConfig) -> GbdtModel {
    let (xs, ys) = super::training_rows(dataset);
    fit_gbdt(&xs, &ys, cfg)
}
