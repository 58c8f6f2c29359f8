use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::{AnalysisError, AnalysisWarning};
use crate::matrix::Matrix;

/// Principal axes of a centered sample. `components[j]` is the j-th unit
/// eigenvector of the sample covariance (denominator `n - 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    pub components: Vec<Vec<f64>>,
    pub eigenvalues: Vec<f64>,
    pub explained_variance_ratio: Vec<f64>,
    /// Trace of the covariance, i.e. the total variance.
    pub total_variance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PcaFit {
    pub model: PcaModel,
    pub warnings: Vec<AnalysisWarning>,
}

/// Fits `r` components. Each component is oriented so that its entry of
/// largest magnitude is positive (first such entry on ties).
pub fn pca_fit(x: &Matrix, r: usize) -> Result<PcaFit, AnalysisError> {
    let (n, d) = (x.rows(), x.cols());
    if n < 2 {
        return Err(AnalysisError::TooFewSamples { needed: 2, got: n });
    }
    if r == 0 || r > d {
        return Err(AnalysisError::TooManyComponents { requested: r, dims: d });
    }
    let mut mean = vec![0.0; d];
    for row in x.iter_rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let mut cov = DMatrix::<f64>::zeros(d, d);
    let mut centered = vec![0.0; d];
    for row in x.iter_rows() {
        for j in 0..d {
            centered[j] = row[j] - mean[j];
        }
        for a in 0..d {
            for b in a..d {
                cov[(a, b)] += centered[a] * centered[b];
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            let v = cov[(a, b)] / (n - 1) as f64;
            cov[(a, b)] = v;
            cov[(b, a)] = v;
        }
    }
    let total_variance: f64 = (0..d).map(|j| cov[(j, j)]).sum();

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let top = eig.eigenvalues[order[0]].max(0.0);
    let positive = order.iter().filter(|&&i| eig.eigenvalues[i] > 1e-10 * top.max(1e-300)).count();

    let mut components = Vec::with_capacity(r);
    let mut eigenvalues = Vec::with_capacity(r);
    for &i in order.iter().take(r) {
        let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        let mut lead = 0;
        for (j, c) in v.iter().enumerate() {
            if c.abs() > v[lead].abs() {
                lead = j;
            }
        }
        if v[lead] < 0.0 {
            v.iter_mut().for_each(|c| *c = -*c);
        }
        components.push(v);
        eigenvalues.push(eig.eigenvalues[i].max(0.0));
    }
    let explained_variance_ratio = eigenvalues
        .iter()
        .map(|&l| if total_variance > 0.0 { l / total_variance } else { 0.0 })
        .collect();
    let mut warnings = Vec::new();
    if positive < r {
        log::warn!("PCA: only {positive} positive eigenvalues for {r} components");
        warnings.push(AnalysisWarning::RankDeficient { requested: r, positive });
    }
    Ok(PcaFit { model: PcaModel { mean, components, eigenvalues, explained_variance_ratio, total_variance }, warnings })
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    /// Centered rows times the component matrix.
    pub fn project(&self, x: &Matrix) -> Matrix {
        let r = self.n_components();
        let mut out = Matrix::zeros(x.rows(), r);
        for (i, row) in x.iter_rows().enumerate() {
            let dst = out.row_mut(i);
            for (k, comp) in self.components.iter().enumerate() {
                dst[k] = row.iter().zip(&self.mean).zip(comp).map(|((v, m), c)| (v - m) * c).sum();
            }
        }
        out
    }

    /// Maps projected points back into feature space.
    pub fn reconstruct(&self, z: &Matrix) -> Matrix {
        let d = self.mean.len();
        let mut out = Matrix::zeros(z.rows(), d);
        for (i, p) in z.iter_rows().enumerate() {
            let dst = out.row_mut(i);
            dst.copy_from_slice(&self.mean);
            for (k, comp) in self.components.iter().enumerate() {
                for j in 0..d {
                    dst[j] += p[k] * comp[j];
                }
            }
        }
        out
    }
}
