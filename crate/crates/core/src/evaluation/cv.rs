//! Fold construction, inner grid search, hold-out and nested evaluation.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{EvalError, EvalReport};
use crate::classifiers::{ModelConfig, TrainedClassifier};
use crate::curation::SplitPlan;
use crate::labels::Emotion;
use crate::matrix::Matrix;
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CvPlan {
    pub outer_folds: usize,
    pub inner_folds: usize,
    pub stratified: bool,
    pub seed: u64,
}

impl Default for CvPlan {
    fn default() -> Self {
        Self { outer_folds: 10, inner_folds: 5, stratified: true, seed: 0 }
    }
}

impl From<&SplitPlan> for CvPlan {
    fn from(p: &SplitPlan) -> Self {
        Self { outer_folds: p.outer_folds, inner_folds: p.inner_folds, stratified: p.stratified, seed: p.seed }
    }
}

/// Feature rows with class indices.
#[derive(Debug, Clone, PartialEq)]
pub struct Samples {
    pub x: Matrix,
    pub y: Vec<usize>,
}

impl Samples {
    pub fn new(x: Matrix, y: Vec<usize>) -> Self {
        assert_eq!(x.rows(), y.len(), "features and labels differ in length");
        Self { x, y }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> Samples {
        Samples { x: self.x.select(indices), y: indices.iter().map(|&i| self.y[i]).collect() }
    }
}

/// Shuffled k-fold partition of `0..n`; each fold sorted ascending.
pub fn kfold(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, EvalError> {
    if k < 2 || n < k {
        return Err(EvalError::StratificationImpossible { class: 0, count: n, folds: k });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::rng(seed));
    Ok(deal(order, k, &mut 0))
}

/// Stratified k-fold partition. Each class's indices are shuffled and dealt
/// round-robin, the dealing position carrying over from one class to the
/// next, so per-class and total fold sizes differ by at most one.
pub fn stratified_folds(y: &[usize], n_classes: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, EvalError> {
    let mut members = vec![Vec::new(); n_classes];
    for (i, &c) in y.iter().enumerate() {
        members[c].push(i);
    }
    for (c, m) in members.iter().enumerate() {
        if !m.is_empty() && m.len() < k {
            return Err(EvalError::StratificationImpossible { class: c, count: m.len(), folds: k });
        }
    }
    if k < 2 || y.len() < k {
        return Err(EvalError::StratificationImpossible { class: 0, count: y.len(), folds: k });
    }
    let mut rng = seed::rng(seed);
    let mut folds = vec![Vec::new(); k];
    let mut pos = 0;
    for mut m in members {
        m.shuffle(&mut rng);
        for (fold, part) in folds.iter_mut().zip(deal(m, k, &mut pos)) {
            fold.extend(part);
        }
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    Ok(folds)
}

fn deal(items: Vec<usize>, k: usize, pos: &mut usize) -> Vec<Vec<usize>> {
    let mut folds = vec![Vec::new(); k];
    for i in items {
        folds[*pos % k].push(i);
        *pos += 1;
    }
    for f in &mut folds {
        f.sort_unstable();
    }
    folds
}

pub fn make_folds(y: &[usize], n_classes: usize, k: usize, stratified: bool, seed: u64) -> Result<Vec<Vec<usize>>, EvalError> {
    if stratified {
        stratified_folds(y, n_classes, k, seed)
    } else {
        kfold(y.len(), k, seed)
    }
}

/// Indices of `0..n` not in the sorted `fold`.
pub fn complement(n: usize, fold: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(n - fold.len());
    let mut j = 0;
    for i in 0..n {
        if j < fold.len() && fold[j] == i {
            j += 1;
        } else {
            out.push(i);
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSearch {
    pub configs: Vec<ModelConfig>,
    /// Mean inner-validation macro-F1 per configuration.
    pub mean_scores: Vec<f64>,
    pub best: usize,
}

impl GridSearch {
    pub fn chosen(&self) -> &ModelConfig {
        &self.configs[self.best]
    }
}

/// Scores every configuration by mean macro-F1 over inner folds of `data`
/// and picks the best; ties go to the earliest in grid order.
pub fn grid_search(
    configs: &[ModelConfig],
    data: &Samples,
    classes: &[Emotion],
    folds: usize,
    stratified: bool,
    seed: u64,
) -> Result<GridSearch, EvalError> {
    if configs.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    let folds = make_folds(&data.y, classes.len(), folds, stratified, seed::derive(seed, "inner-folds"))?;
    let cells: Vec<(usize, usize)> =
        (0..configs.len()).flat_map(|c| (0..folds.len()).map(move |f| (c, f))).collect();
    let scores: Vec<f64> = cells
        .par_iter()
        .map(|&(c, f)| {
            let train = data.subset(&complement(data.len(), &folds[f]));
            let val = data.subset(&folds[f]);
            let model = TrainedClassifier::fit(
                &configs[c],
                &train.x,
                &train.y,
                classes,
                seed::derive(seed, &format!("inner/{c}/{f}")),
            )
            .map_err(|source| EvalError::Model { fold: None, source })?;
            let report = EvalReport::from_scores(classes, &val.y, &model.scores_matrix(&val.x))?;
            Ok(report.macro_f1)
        })
        .collect::<Result<_, EvalError>>()?;
    let k = folds.len();
    let mean_scores: Vec<f64> = scores.chunks(k).map(|s| s.iter().sum::<f64>() / k as f64).collect();
    let mut best = 0;
    for (i, &s) in mean_scores.iter().enumerate() {
        if s > mean_scores[best] {
            best = i;
        }
    }
    Ok(GridSearch { configs: configs.to_vec(), mean_scores, best })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoldoutResult {
    pub report: EvalReport,
    pub chosen: ModelConfig,
    /// Absent when the grid had a single configuration.
    pub search: Option<GridSearch>,
    pub model: TrainedClassifier,
    /// Class scores of every test row.
    #[serde(skip)]
    pub test_scores: Vec<Vec<f64>>,
}

/// Grid-searches on `train` (skipped for a one-entry grid), refits the
/// chosen configuration on all of `train`, and evaluates once on `test`.
pub fn holdout_eval(
    configs: &[ModelConfig],
    train: &Samples,
    test: &Samples,
    classes: &[Emotion],
    inner_folds: usize,
    stratified: bool,
    seed: u64,
) -> Result<HoldoutResult, EvalError> {
    let Some(first) = configs.first() else {
        return Err(EvalError::EmptyGrid);
    };
    if test.is_empty() {
        return Err(EvalError::EmptyTest);
    }
    let search = if configs.len() > 1 {
        Some(grid_search(configs, train, classes, inner_folds, stratified, seed)?)
    } else {
        None
    };
    let chosen = search.as_ref().map_or(first, |s| s.chosen()).clone();
    let model = TrainedClassifier::fit(&chosen, &train.x, &train.y, classes, seed::derive(seed, "refit"))
        .map_err(|source| EvalError::Model { fold: None, source })?;
    let test_scores = model.scores_matrix(&test.x);
    let report = EvalReport::from_scores(classes, &test.y, &test_scores)?;
    Ok(HoldoutResult { report, chosen, search, model, test_scores })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_test: usize,
    pub macro_f1: f64,
    pub macro_auc: Option<f64>,
    pub chosen: ModelConfig,
    pub inner_scores: Option<Vec<f64>>,
}

impl FoldResult {
    pub fn new(fold: usize, r: HoldoutResult) -> Self {
        Self {
            fold,
            n_test: r.report.n_samples,
            macro_f1: r.report.macro_f1,
            macro_auc: r.report.macro_auc,
            chosen: r.chosen,
            inner_scores: r.search.map(|s| s.mean_scores),
        }
    }
}

/// Per-fold outcomes of a nested run with their mean and (population)
/// standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvBreakdown {
    pub folds: Vec<FoldResult>,
    pub fold_mean_f1: f64,
    pub fold_std_f1: f64,
    pub fold_mean_auc: Option<f64>,
}

/// Nested cross-validation: an inner grid search inside every outer
/// training portion. The returned report's top-level metrics are those of
/// the pooled out-of-fold predictions; `cv` carries the per-fold view.
pub fn nested_cv(
    configs: &[ModelConfig],
    data: &Samples,
    classes: &[Emotion],
    plan: &CvPlan,
    seed: u64,
) -> Result<EvalReport, EvalError> {
    if configs.is_empty() {
        return Err(EvalError::EmptyGrid);
    }
    let folds = make_folds(&data.y, classes.len(), plan.outer_folds, plan.stratified, seed::derive(seed, "outer-folds"))?;
    let outcomes: Vec<(FoldResult, Vec<Vec<f64>>)> = folds
        .par_iter()
        .enumerate()
        .map(|(f, test_idx)| {
            let train = data.subset(&complement(data.len(), test_idx));
            let test = data.subset(test_idx);
            let mut r = holdout_eval(
                configs,
                &train,
                &test,
                classes,
                plan.inner_folds,
                plan.stratified,
                seed::derive(seed, &format!("outer/{f}")),
            )
            .map_err(|e| e.in_fold(f))?;
            let scores = std::mem::take(&mut r.test_scores);
            Ok((FoldResult::new(f, r), scores))
        })
        .collect::<Result<_, EvalError>>()?;

    assemble_cv(classes, &data.y, &folds, outcomes)
}

/// Combines per-fold outcomes (fold summary plus test scores, in fold
/// order) into a report over the pooled out-of-fold predictions.
pub fn assemble_cv(
    classes: &[Emotion],
    truth: &[usize],
    folds: &[Vec<usize>],
    outcomes: Vec<(FoldResult, Vec<Vec<f64>>)>,
) -> Result<EvalReport, EvalError> {
    let mut pooled = vec![Vec::new(); truth.len()];
    let mut results = Vec::with_capacity(folds.len());
    for ((fold, scores), idx) in outcomes.into_iter().zip(folds) {
        for (&i, s) in idx.iter().zip(scores) {
            pooled[i] = s;
        }
        results.push(fold);
    }
    let mut report = EvalReport::from_scores(classes, truth, &pooled)?;
    let k = results.len() as f64;
    let mean = results.iter().map(|r| r.macro_f1).sum::<f64>() / k;
    let var = results.iter().map(|r| (r.macro_f1 - mean).powi(2)).sum::<f64>() / k;
    let aucs: Option<Vec<f64>> = results.iter().map(|r| r.macro_auc).collect();
    report.cv = Some(CvBreakdown {
        fold_mean_f1: mean,
        fold_std_f1: var.sqrt(),
        fold_mean_auc: aucs.map(|a| a.iter().sum::<f64>() / k),
        folds: results,
    });
    Ok(report)
}
