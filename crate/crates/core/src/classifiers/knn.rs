use serde::{Deserialize, Serialize};
use std::cmp::Ordering;

use super::{Classifier, ModelError};
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnParams {
    pub k: usize,
}

/// Euclidean k-nearest-neighbour vote. Class scores are vote fractions;
/// equidistant neighbours are ranked by training index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub n_classes: usize,
    pub train: Matrix,
    pub labels: Vec<usize>,
}

/// Euclidean distance.
pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn by_distance_then_index(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

impl KnnModel {
    pub fn fit(x: &Matrix, y: &[usize], n_classes: usize, k: usize) -> Result<Self, ModelError> {
        if x.is_empty() {
            return Err(ModelError::EmptyTraining);
        }
        if k == 0 {
            return Err(ModelError::InvalidParams("k must be positive".into()));
        }
        if k > x.rows() {
            return Err(ModelError::KTooLarge { k, n: x.rows() });
        }
        assert_eq!(x.rows(), y.len());
        Ok(Self { k, n_classes, train: x.clone(), labels: y.to_vec() })
    }

    /// Training indices of the `k` nearest neighbours, closest first.
    pub fn neighbors(&self, x: &[f64]) -> Vec<usize> {
        let mut d: Vec<(f64, usize)> =
            self.train.iter_rows().enumerate().map(|(i, r)| (euclidean(r, x), i)).collect();
        if self.k < d.len() {
            d.select_nth_unstable_by(self.k - 1, by_distance_then_index);
            d.truncate(self.k);
        }
        d.sort_unstable_by(by_distance_then_index);
        d.into_iter().map(|(_, i)| i).collect()
    }
}

impl Classifier for KnnModel {
    fn n_classes(&self) -> usize {
        self.n_classes
    }

    fn predict_scores(&self, x: &[f64]) -> Vec<f64> {
        let mut votes = vec![0.0; self.n_classes];
        for i in self.neighbors(x) {
            votes[self.labels[i]] += 1.0;
        }
        votes.iter_mut().for_each(|v| *v /= self.k as f64);
        votes
    }
}
