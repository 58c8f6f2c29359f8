//! CART trees with Gini impurity, bagged into a random forest.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_training, Classifier, ModelError};
use crate::matrix::Matrix;
use crate::seed;

/// Splits must lower the weighted impurity by more than this.
const MIN_DECREASE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// `None` grows trees until leaves are pure.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Candidate features per split; `None` means `ceil(sqrt(n_features))`.
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self { n_trees: 100, max_depth: None, min_samples_leaf: 1, features_per_split: None, bootstrap: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        n_samples: usize,
        impurity: f64,
    },
    Leaf {
        /// Class fractions of the training samples that reached the leaf.
        distribution: Vec<f64>,
        n_samples: usize,
        impurity: f64,
    },
}

impl Node {
    fn n_samples(&self) -> usize {
        match self {
            Node::Split { n_samples, .. } | Node::Leaf { n_samples, .. } => *n_samples,
        }
    }

    fn impurity(&self) -> f64 {
        match self {
            Node::Split { impurity, .. } | Node::Leaf { impurity, .. } => *impurity,
        }
    }
}

/// Nodes stored in an arena; index 0 is the root. Samples with
/// `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn leaf_distribution(&self, x: &[f64]) -> &[f64] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Split { feature, threshold, left, right, .. } => {
                    at = if x[*feature] <= *threshold { *left } else { *right };
                }
                Node::Leaf { distribution, .. } => return distribution,
            }
        }
    }

    pub fn n_splits(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Split { .. })).count()
    }

    pub fn depth(&self) -> usize {
        fn walk(t: &DecisionTree, at: usize) -> usize {
            match &t.nodes[at] {
                Node::Split { left, right, .. } => 1 + walk(t, *left).max(walk(t, *right)),
                Node::Leaf { .. } => 0,
            }
        }
        walk(self, 0)
    }

    /// Per-feature sum of `(n_node / n_root) * impurity decrease`.
    pub fn impurity_importances(&self, n_features: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_features];
        let root = self.nodes[0].n_samples() as f64;
        for node in &self.nodes {
            if let Node::Split { feature, left, right, n_samples, impurity, .. } = node {
                let (l, r) = (&self.nodes[*left], &self.nodes[*right]);
                let weighted = *n_samples as f64 * impurity
                    - l.n_samples() as f64 * l.impurity()
                    - r.n_samples() as f64 * r.impurity();
                out[*feature] += weighted / root;
            }
        }
        out
    }
}

/// Impurity-based feature importances of a forest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Importances {
    /// Tree average of the per-tree sums, before normalization.
    pub unnormalized: Vec<f64>,
    /// `unnormalized` scaled to sum to one.
    pub normalized: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub params: ForestParams,
    pub n_features: usize,
    pub n_classes: usize,
    pub tree_seeds: Vec<u64>,
    pub trees: Vec<DecisionTree>,
}

impl ForestModel {
    pub fn fit(
        x: &Matrix,
        y: &[usize],
        n_classes: usize,
        params: &ForestParams,
        seed: u64,
    ) -> Result<Self, ModelError> {
        check_training(x, y, n_classes)?;
        if params.n_trees == 0 || params.min_samples_leaf == 0 {
            return Err(ModelError::InvalidParams("n_trees and min_samples_leaf must be positive".into()));
        }
        let n_features = x.cols();
        let per_split = params
            .features_per_split
            .unwrap_or_else(|| (n_features as f64).sqrt().ceil() as usize)
            .clamp(1, n_features.max(1));
        let tree_seeds: Vec<u64> =
            (0..params.n_trees).map(|t| seed::derive(seed, &format!("tree/{t}"))).collect();
        let trees = tree_seeds
            .par_iter()
            .map(|&s| {
                let mut rng = seed::rng(s);
                let sample: Vec<usize> = if params.bootstrap {
                    (0..x.rows()).map(|_| rng.random_range(0..x.rows())).collect()
                } else {
                    (0..x.rows()).collect()
                };
                TreeBuilder { x, y, n_classes, params, per_split, nodes: Vec::new() }.build(sample, &mut rng)
            })
            .collect();
        Ok(Self { params: params.clone(), n_features, n_classes, tree_seeds, trees })
    }

    pub fn importances(&self) -> Result<Importances, ModelError> {
        if self.trees.iter().all(|t| t.n_splits() == 0) {
            return Err(ModelError::NoSplits);
        }
        let mut sum = vec![0.0; self.n_features];
        for t in &self.trees {
            for (s, v) in sum.iter_mut().zip(t.impurity_importances(self.n_features)) {
                *s += v;
            }
        }
        let unnormalized: Vec<f64> = sum.iter().map(|s| s / self.trees.len() as f64).collect();
        let total: f64 = unnormalized.iter().sum();
        let normalized = unnormalized.iter().map(|v| v / total).collect();
        Ok(Importances { unnormalized, normalized })
    }
}

impl Classifier for ForestModel {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict_scores(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_classes];
        for t in &self.trees {
            for (o, p) in out.iter_mut().zip(t.leaf_distribution(x)) {
                *o += p;
            }
        }
        let n = self.trees.len() as f64;
        out.iter_mut().for_each(|o| *o /= n);
        out
    }
}

/// `n * gini` from class counts: `n - sum(c^2) / n`.
fn weighted_gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let sq: f64 = counts.iter().map(|&c| (c * c) as f64).sum();
    n as f64 - sq / n as f64
}

struct TreeBuilder<'a> {
    x: &'a Matrix,
    y: &'a [usize],
    n_classes: usize,
    params: &'a ForestParams,
    per_split: usize,
    nodes: Vec<Node>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    children_impurity: f64,
}

impl TreeBuilder<'_> {
    fn build(mut self, mut sample: Vec<usize>, rng: &mut impl Rng) -> DecisionTree {
        self.grow(&mut sample, 0, rng);
        DecisionTree { nodes: self.nodes }
    }

    fn counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.n_classes];
        for &i in idx {
            c[self.y[i]] += 1;
        }
        c
    }

    fn grow(&mut self, idx: &mut [usize], depth: usize, rng: &mut impl Rng) -> usize {
        let n = idx.len();
        let counts = self.counts(idx);
        let node_impurity = weighted_gini(&counts, n);
        let at = self.nodes.len();
        let leaf = |counts: &[usize]| Node::Leaf {
            distribution: counts.iter().map(|&c| c as f64 / n as f64).collect(),
            n_samples: n,
            impurity: node_impurity / n as f64,
        };
        let depth_reached = self.params.max_depth.is_some_and(|d| depth >= d);
        if node_impurity <= 0.0 || depth_reached || n < 2 * self.params.min_samples_leaf {
            self.nodes.push(leaf(&counts));
            return at;
        }
        let Some(best) = self.best_split(idx, &counts, node_impurity, rng) else {
            self.nodes.push(leaf(&counts));
            return at;
        };
        // reserve the slot, children are appended after it
        self.nodes.push(Node::Leaf { distribution: Vec::new(), n_samples: 0, impurity: 0.0 });
        let mid = partition(idx, |i| self.x.get(i, best.feature) <= best.threshold);
        let (l_idx, r_idx) = idx.split_at_mut(mid);
        let left = self.grow(l_idx, depth + 1, rng);
        let right = self.grow(r_idx, depth + 1, rng);
        self.nodes[at] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
            n_samples: n,
            impurity: node_impurity / n as f64,
        };
        at
    }

    /// Scans a random permutation of the features. The first `per_split`
    /// are always evaluated; later ones only while no valid split is found.
    fn best_split(
        &self,
        idx: &[usize],
        counts: &[usize],
        node_impurity: f64,
        rng: &mut impl Rng,
    ) -> Option<BestSplit> {
        let mut features: Vec<usize> = (0..self.x.cols()).collect();
        features.shuffle(rng);
        let min_leaf = self.params.min_samples_leaf;
        let n = idx.len();
        let mut best: Option<BestSplit> = None;
        let mut pairs: Vec<(f64, usize)> = Vec::with_capacity(n);
        for (rank, &f) in features.iter().enumerate() {
            if rank >= self.per_split && best.is_some() {
                break;
            }
            pairs.clear();
            pairs.extend(idx.iter().map(|&i| (self.x.get(i, f), self.y[i])));
            pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            if pairs[0].0 == pairs[n - 1].0 {
                continue;
            }
            let mut left = vec![0usize; self.n_classes];
            let mut right = counts.to_vec();
            let mut sq_left = 0.0f64;
            let mut sq_right: f64 = counts.iter().map(|&c| (c * c) as f64).sum();
            for i in 1..n {
                let c = pairs[i - 1].1;
                sq_left += (2 * left[c] + 1) as f64;
                sq_right -= (2 * right[c] - 1) as f64;
                left[c] += 1;
                right[c] -= 1;
                if i < min_leaf || n - i < min_leaf || pairs[i - 1].0 == pairs[i].0 {
                    continue;
                }
                let children = (i as f64 - sq_left / i as f64) + ((n - i) as f64 - sq_right / (n - i) as f64);
                if node_impurity - children <= MIN_DECREASE * n as f64 {
                    continue;
                }
                if best.as_ref().is_none_or(|b| children < b.children_impurity) {
                    let (lo, hi) = (pairs[i - 1].0, pairs[i].0);
                    let mut threshold = lo + (hi - lo) / 2.0;
                    if threshold >= hi {
                        threshold = lo;
                    }
                    best = Some(BestSplit { feature: f, threshold, children_impurity: children });
                }
            }
        }
        best
    }
}

/// Reorders `idx` so that elements satisfying `pred` come first; returns
/// their count. Not stable, but deterministic.
fn partition(idx: &mut [usize], pred: impl Fn(usize) -> bool) -> usize {
    let mut first = 0;
    for i in 0..idx.len() {
        if pred(idx[i]) {
            idx.swap(first, i);
            first += 1;
        }
    }
    first
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pure_node_is_a_one_hot_leaf() {
        let x = Matrix::from_rows(&[[0.0], [1.0], [2.0], [3.0]], 1);
        let y = [0, 0, 1, 1];
        let params = ForestParams { n_trees: 1, bootstrap: false, ..Default::default() };
        let f = ForestModel::fit(&x, &y, 2, &params, 1).unwrap();
        let t = &f.trees[0];
        assert_eq!(t.n_splits(), 1);
        for n in &t.nodes {
            if let Node::Leaf { distribution, .. } = n {
                assert!(distribution == &vec![1.0, 0.0] || distribution == &vec![0.0, 1.0]);
            }
        }
        assert_eq!(f.predict_scores(&[0.4]), vec![1.0, 0.0]);
        assert_eq!(f.predict_scores(&[2.6]), vec![0.0, 1.0]);
    }

    #[test]
    fn single_class_is_degenerate() {
        let x = Matrix::from_rows(&[[0.0], [1.0]], 1);
        assert_eq!(
            ForestModel::fit(&x, &[1, 1], 2, &ForestParams::default(), 0),
            Err(ModelError::DegenerateTraining)
        );
    }

    #[test]
    fn unused_feature_gets_zero_importance() {
        let x = Matrix::from_rows(&[[0.0, 5.0], [1.0, 5.0], [2.0, 5.0], [3.0, 5.0]], 2);
        let f = ForestModel::fit(&x, &[0, 0, 1, 1], 2, &ForestParams { n_trees: 10, ..Default::default() }, 3)
            .unwrap();
        let imp = f.importances().unwrap();
        assert_eq!(imp.normalized[1], 0.0);
        assert!((imp.normalized.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn importances_without_splits_error() {
        let x = Matrix::from_rows(&[[0.0], [0.0], [0.0]], 1);
        let f = ForestModel::fit(&x, &[0, 1, 0], 2, &ForestParams { n_trees: 2, ..Default::default() }, 0).unwrap();
        assert_eq!(f.importances(), Err(ModelError::NoSplits));
    }

    #[test]
    fn depth_limit_is_respected() {
        let x = Matrix::from_rows(&(0..64).map(|i| [i as f64]).collect::<Vec<_>>(), 1);
        let y: Vec<usize> = (0..64).map(|i| i % 2).collect();
        let p = ForestParams { n_trees: 3, max_depth: Some(3), ..Default::default() };
        let f = ForestModel::fit(&x, &y, 2, &p, 0).unwrap();
        assert!(f.trees.iter().all(|t| t.depth() <= 3));
    }

    #[test]
    fn min_samples_leaf_is_respected() {
        let x = Matrix::from_rows(&(0..40).map(|i| [i as f64]).collect::<Vec<_>>(), 1);
        let y: Vec<usize> = (0..40).map(|i| usize::from(i % 3 == 0)).collect();
        let p = ForestParams { n_trees: 3, min_samples_leaf: 5, ..Default::default() };
        let f = ForestModel::fit(&x, &y, 2, &p, 0).unwrap();
        for t in &f.trees {
            for n in &t.nodes {
                if let Node::Leaf { n_samples, .. } = n {
                    assert!(*n_samples >= 5);
                }
            }
        }
    }
}
