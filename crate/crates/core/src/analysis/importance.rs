use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

use super::AnalysisError;
use crate::classifiers::ForestModel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedFeature {
    pub rank: usize,
    pub index: usize,
    pub name: String,
    pub importance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRanking {
    pub subject: String,
    pub features: Vec<RankedFeature>,
}

impl FeatureRanking {
    pub fn top(&self, k: usize) -> BTreeSet<usize> {
        self.features.iter().take(k).map(|f| f.index).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairOverlap {
    pub a: String,
    pub b: String,
    /// Size of the intersection of the two top-k sets.
    pub overlap: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceComparison {
    pub k: usize,
    pub rankings: Vec<FeatureRanking>,
    pub overlaps: Vec<PairOverlap>,
}

/// Features by importance, descending; equal importances keep schema order.
pub fn rank_features(importances: &[f64], names: &[String]) -> Vec<RankedFeature> {
    let mut order: Vec<usize> = (0..importances.len()).collect();
    order.sort_by(|&a, &b| importances[b].total_cmp(&importances[a]).then(a.cmp(&b)));
    order
        .into_iter()
        .enumerate()
        .map(|(rank, index)| RankedFeature { rank: rank + 1, index, name: names[index].clone(), importance: importances[index] })
        .collect()
}

/// Rankings from normalized importance vectors keyed by subject, with
/// the top-`k` overlap of every pair of subjects.
pub fn compare_importances(
    importances: &BTreeMap<String, Vec<f64>>,
    names: &[String],
    k: usize,
) -> Result<ImportanceComparison, AnalysisError> {
    for (subject, v) in importances {
        if v.len() != names.len() {
            return Err(AnalysisError::SchemaMismatch { subject: subject.clone(), found: v.len(), expected: names.len() });
        }
    }
    let rankings: Vec<FeatureRanking> = importances
        .iter()
        .map(|(s, v)| FeatureRanking { subject: s.clone(), features: rank_features(v, names) })
        .collect();
    let mut overlaps = Vec::new();
    for (i, a) in rankings.iter().enumerate() {
        let ta = a.top(k);
        for b in &rankings[i + 1..] {
            let overlap = ta.intersection(&b.top(k)).count();
            overlaps.push(PairOverlap { a: a.subject.clone(), b: b.subject.clone(), overlap });
        }
    }
    Ok(ImportanceComparison { k, rankings, overlaps })
}

/// [`compare_importances`] over fitted forests.
pub fn importance_comparison(
    models: &BTreeMap<String, ForestModel>,
    names: &[String],
    k: usize,
) -> Result<ImportanceComparison, AnalysisError> {
    let mut imps = BTreeMap::new();
    for (subject, m) in models {
        if m.n_features != names.len() {
            return Err(AnalysisError::SchemaMismatch { subject: subject.clone(), found: m.n_features, expected: names.len() });
        }
        let imp = m
            .importances()
            .map_err(|e| AnalysisError::Importance { subject: subject.clone(), reason: e.to_string() })?;
        imps.insert(subject.clone(), imp.normalized);
    }
    compare_importances(&imps, names, k)
}
