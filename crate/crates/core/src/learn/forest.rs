//! Random forest: bagged Gini decision trees with per-node random feature
//! subsets, trained in parallel from per-tree derived seeds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{labeled_xy, require_both_classes, TrainError};
use crate::features::Dataset;
use crate::rng::{derive, rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Candidate features per split; `None` means ⌈√p⌉.
    pub features_per_split: Option<usize>,
    pub min_leaf: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 1000,
            features_per_split: None,
            min_leaf: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        /// Fraction of positive training rows that reached this leaf.
        fraction: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    /// Leaf fraction for one feature vector; splits route `x ≤ threshold`
    /// left.
    pub fn traverse(&self, x: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                TreeNode::Leaf { fraction } => return *fraction,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x[*feature] <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestModel {
    pub trees: Vec<Tree>,
    pub features_per_split: usize,
    pub min_leaf: usize,
    pub seed: u64,
    pub feature_names: Vec<String>,
}

impl RandomForestModel {
    /// Average positive-leaf fraction over all trees.
    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.traverse(x)).sum();
        sum / self.trees.len() as f64
    }
}

/// Grows `n_trees` bootstrap trees. Tree `t` draws everything from the
/// derived seed `(seed, t)`, so the result is independent of scheduling.
pub fn train_random_forest(
    data: &Dataset,
    params: &ForestParams,
) -> Result<RandomForestModel, TrainError> {
    let (x, y) = labeled_xy(data)?;
    if x.len() < 2 {
        return Err(TrainError::TooFewRows {
            needed: 2,
            got: x.len(),
        });
    }
    let p = x[0].len();
    if p == 0 {
        return Err(TrainError::NoFeatures);
    }
    require_both_classes(&y)?;
    let m = params
        .features_per_split
        .unwrap_or_else(|| (p as f64).sqrt().ceil() as usize)
        .clamp(1, p);

    let trees: Vec<Tree> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| grow_tree(&x, &y, m, params.min_leaf, derive(params.seed, t as u64)))
        .collect();
    Ok(RandomForestModel {
        trees,
        features_per_split: m,
        min_leaf: params.min_leaf,
        seed: params.seed,
        feature_names: data.feature_names.clone(),
    })
}

fn grow_tree(x: &[Vec<f64>], y: &[u8], m: usize, min_leaf: usize, seed: u64) -> Tree {
    let mut rng = rng(seed);
    let n = x.len();
    let sample: Vec<usize> = (0..n)
        .map(|_| rand::Rng::random_range(&mut rng, 0..n))
        .collect();
    let mut nodes = Vec::new();
    grow_node(x, y, &sample, m, min_leaf, &mut rng, &mut nodes);
    Tree { nodes }
}

fn grow_node(
    x: &[Vec<f64>],
    y: &[u8],
    idx: &[usize],
    m: usize,
    min_leaf: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
    nodes: &mut Vec<TreeNode>,
) -> usize {
    let n = idx.len();
    let positives = idx.iter().filter(|&&i| y[i] == 1).count();
    let leaf = |nodes: &mut Vec<TreeNode>| {
        nodes.push(TreeNode::Leaf {
            fraction: positives as f64 / n as f64,
        });
        nodes.len() - 1
    };
    if positives == 0 || positives == n || n < 2 * min_leaf {
        return leaf(nodes);
    }

    let p = x[0].len();
    let candidates = rand::seq::index::sample(rng, p, m.min(p));
    let mut best: Option<(f64, usize, f64)> = None;
    for feature in candidates {
        if let Some((score, threshold)) = best_threshold(x, y, idx, feature, min_leaf) {
            if best.is_none_or(|(s, _, _)| score < s) {
                best = Some((score, feature, threshold));
            }
        }
    }
    let Some((_, feature, threshold)) = best else {
        return leaf(nodes);
    };

    // Placeholder first so this node's index precedes its children.
    nodes.push(TreeNode::Leaf { fraction: 0.0 });
    let at = nodes.len() - 1;
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) =
        idx.iter().partition(|&&i| x[i][feature] <= threshold);
    let left = grow_node(x, y, &left_idx, m, min_leaf, rng, nodes);
    let right = grow_node(x, y, &right_idx, m, min_leaf, rng, nodes);
    nodes[at] = TreeNode::Split {
        feature,
        threshold,
        left,
        right,
    };
    at
}

/// Best Gini split of `idx` on one feature: scans midpoints between distinct
/// sorted values, honoring `min_leaf` on both sides. Returns (weighted
/// impurity, threshold).
fn best_threshold(
    x: &[Vec<f64>],
    y: &[u8],
    idx: &[usize],
    feature: usize,
    min_leaf: usize,
) -> Option<(f64, f64)> {
    let n = idx.len();
    let mut pairs: Vec<(f64, u8)> = idx.iter().map(|&i| (x[i][feature], y[i])).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite feature values"));
    let total_pos: usize = pairs.iter().filter(|(_, l)| *l == 1).count();

    let gini = |pos: usize, cnt: usize| -> f64 {
        let p = pos as f64 / cnt as f64;
        let q = 1.0 - p;
        1.0 - p * p - q * q
    };

    let mut best: Option<(f64, f64)> = None;
    let mut left_pos = 0usize;
    for k in 1..n {
        if pairs[k - 1].1 == 1 {
            left_pos += 1;
        }
        if pairs[k - 1].0 == pairs[k].0 {
            continue;
        }
        if k < min_leaf || n - k < min_leaf {
            continue;
        }
        let score = (k as f64 * gini(left_pos, k)
            + (n - k) as f64 * gini(total_pos - left_pos, n - k))
            / n as f64;
        if best.is_none_or(|(s, _)| score < s) {
            best = Some((score, (pairs[k - 1].0 + pairs[k].0) / 2.0));
        }
    }
    best
}
