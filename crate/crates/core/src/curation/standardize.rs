use serde::{Deserialize, Serialize};

use crate::matrix::Matrix;

/// Per-feature z-score transform. Statistics use the population standard
/// deviation; a feature with zero deviation maps to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Panics on an empty matrix.
    pub fn fit(train: &Matrix) -> Self {
        assert!(!train.is_empty(), "standardizer needs training rows");
        let n = train.rows() as f64;
        let d = train.cols();
        let mut mean = vec![0.0; d];
        for r in train.iter_rows() {
            for (m, &x) in mean.iter_mut().zip(r) {
                *m += x;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for r in train.iter_rows() {
            for ((v, &x), &m) in var.iter_mut().zip(r).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        let std = var.into_iter().map(|v| (v / n).sqrt()).collect();
        Self { mean, std }
    }

    /// Fits on rows given as slices.
    pub fn fit_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let width = rows.first().map_or(0, |r| r.as_ref().len());
        Self::fit(&Matrix::from_rows(rows, width))
    }

    pub fn n_features(&self) -> usize {
        self.mean.len()
    }

    pub fn zero_variance_features(&self) -> Vec<usize> {
        self.std.iter().enumerate().filter(|(_, &s)| s == 0.0).map(|(i, _)| i).collect()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        self.apply_in_place(&mut out);
        out
    }

    pub fn apply_in_place(&self, x: &mut [f64]) {
        for ((v, &m), &s) in x.iter_mut().zip(&self.mean).zip(&self.std) {
            *v = if s == 0.0 { 0.0 } else { (*v - m) / s };
        }
    }

    pub fn transform(&self, x: &Matrix) -> Matrix {
        let mut out = x.clone();
        for i in 0..out.rows() {
            self.apply_in_place(out.row_mut(i));
        }
        out
    }
}
