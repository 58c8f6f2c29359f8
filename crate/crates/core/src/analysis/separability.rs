use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{pca_fit, AnalysisError};
use crate::classifiers::euclidean;
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidDistance {
    pub a: usize,
    pub b: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeparabilityReport {
    /// Mean silhouette over all points, full feature space.
    pub silhouette: f64,
    /// First two principal coordinates of every point.
    pub projection: Vec<[f64; 2]>,
    pub labels: Vec<usize>,
    pub explained_variance_ratio: [f64; 2],
    pub centroid_distances: Vec<CentroidDistance>,
}

/// Mean silhouette with Euclidean distances. A point alone in its class
/// scores 0. Classes are the distinct values of `labels`.
pub fn silhouette(x: &Matrix, labels: &[usize]) -> Result<f64, AnalysisError> {
    assert_eq!(x.rows(), labels.len());
    let n_classes = labels.iter().max().map_or(0, |&m| m + 1);
    let mut sizes = vec![0usize; n_classes];
    for &l in labels {
        sizes[l] += 1;
    }
    if sizes.iter().filter(|&&s| s > 0).count() < 2 {
        return Err(AnalysisError::SingleClass);
    }
    let per_point: Vec<f64> = (0..x.rows())
        .into_par_iter()
        .map(|i| {
            let own = labels[i];
            if sizes[own] < 2 {
                return 0.0;
            }
            let mut sums = vec![0.0; n_classes];
            let xi = x.row(i);
            for (j, row) in x.iter_rows().enumerate() {
                if j != i {
                    sums[labels[j]] += euclidean(xi, row);
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..n_classes)
                .filter(|&c| c != own && sizes[c] > 0)
                .map(|c| sums[c] / sizes[c] as f64)
                .fold(f64::INFINITY, f64::min);
            let m = a.max(b);
            if m > 0.0 { (b - a) / m } else { 0.0 }
        })
        .collect();
    Ok(per_point.iter().sum::<f64>() / per_point.len() as f64)
}

/// Silhouette, pairwise centroid distances and a 2-D PCA projection of
/// (already standardized) features.
pub fn separability(x: &Matrix, labels: &[usize]) -> Result<SeparabilityReport, AnalysisError> {
    let s = silhouette(x, labels)?;
    let n_classes = labels.iter().max().map_or(0, |&m| m + 1);
    let d = x.cols();
    let mut centroids = vec![vec![0.0; d]; n_classes];
    let mut sizes = vec![0usize; n_classes];
    for (row, &l) in x.iter_rows().zip(labels) {
        sizes[l] += 1;
        for (c, v) in centroids[l].iter_mut().zip(row) {
            *c += v;
        }
    }
    for (c, &n) in centroids.iter_mut().zip(&sizes) {
        if n > 0 {
            c.iter_mut().for_each(|v| *v /= n as f64);
        }
    }
    let mut centroid_distances = Vec::new();
    for a in 0..n_classes {
        for b in a + 1..n_classes {
            if sizes[a] > 0 && sizes[b] > 0 {
                centroid_distances.push(CentroidDistance { a, b, distance: euclidean(&centroids[a], &centroids[b]) });
            }
        }
    }
    let r = d.min(2);
    let fit = pca_fit(x, r)?;
    let z = fit.model.project(x);
    let projection = z.iter_rows().map(|p| [p[0], if r > 1 { p[1] } else { 0.0 }]).collect();
    let ev = &fit.model.explained_variance_ratio;
    Ok(SeparabilityReport {
        silhouette: s,
        projection,
        labels: labels.to_vec(),
        explained_variance_ratio: [ev[0], ev.get(1).copied().unwrap_or(0.0)],
        centroid_distances,
    })
}
