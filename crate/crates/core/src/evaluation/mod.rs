//! Metrics, reports, and the cross-validation engine.

mod cv;
mod metrics;

pub use cv::{
    assemble_cv, complement, grid_search, holdout_eval, kfold, make_folds, nested_cv, stratified_folds, CvBreakdown, CvPlan,
    FoldResult, GridSearch, HoldoutResult, Samples,
};
pub use metrics::{auc_binary, f1_macro, roc_auc_ovr, roc_curve, ConfusionMatrix, OvrAuc, RocPoint};

use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use crate::classifiers::{argmax, ModelError};
use crate::labels::Emotion;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("hyperparameter grid is empty")]
    EmptyGrid,
    #[error("class {class} has {count} samples, fewer than the {folds} folds requested")]
    StratificationImpossible { class: usize, count: usize, folds: usize },
    #[error("test set is empty")]
    EmptyTest,
    #[error("{}: {source}", fold.map_or("refit".to_string(), |f| format!("outer fold {f}")))]
    Model { fold: Option<usize>, source: ModelError },
}

impl EvalError {
    pub fn model_error(&self) -> Option<&ModelError> {
        match self {
            EvalError::Model { source, .. } => Some(source),
            _ => None,
        }
    }

    /// Attaches an outer-fold id to a model error.
    pub fn in_fold(self, fold: usize) -> Self {
        match self {
            EvalError::Model { fold: None, source } => EvalError::Model { fold: Some(fold), source },
            other => other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EvalWarning {
    /// The class has no positives or no negatives in the evaluated set; its
    /// AUC is left out of the macro mean.
    UndefinedAuc { class: Emotion },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub emotion: Emotion,
    pub support: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auc: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub emotion: Emotion,
    pub points: Vec<RocPoint>,
}

/// Metrics of one set of predictions. When produced by cross-validation the
/// top-level metrics are computed on the pooled out-of-fold predictions and
/// `cv` holds the per-fold breakdown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub classes: Vec<Emotion>,
    pub n_samples: usize,
    pub accuracy: f64,
    pub macro_f1: f64,
    pub macro_auc: Option<f64>,
    pub per_class: Vec<ClassMetrics>,
    pub confusion: ConfusionMatrix,
    pub roc: Vec<RocCurve>,
    pub warnings: Vec<EvalWarning>,
    pub cv: Option<CvBreakdown>,
}

impl EvalReport {
    /// Builds the report from per-sample class scores; the prediction is
    /// the arg-max score.
    pub fn from_scores(classes: &[Emotion], truth: &[usize], scores: &[Vec<f64>]) -> Result<Self, EvalError> {
        if truth.is_empty() {
            return Err(EvalError::EmptyTest);
        }
        assert_eq!(truth.len(), scores.len());
        let n_classes = classes.len();
        let predicted: Vec<usize> = scores.iter().map(|s| argmax(s)).collect();
        let confusion = ConfusionMatrix::from_labels(truth, &predicted, n_classes);
        let auc = roc_auc_ovr(scores, truth, n_classes);
        let per_class = (0..n_classes)
            .map(|c| {
                let (precision, recall, f1) = confusion.class_scores(c);
                ClassMetrics {
                    emotion: classes[c],
                    support: confusion.support(c),
                    precision,
                    recall,
                    f1,
                    auc: auc.per_class[c],
                }
            })
            .collect();
        let roc = (0..n_classes)
            .map(|c| {
                let s: Vec<f64> = scores.iter().map(|r| r[c]).collect();
                let pos: Vec<bool> = truth.iter().map(|&t| t == c).collect();
                RocCurve { emotion: classes[c], points: roc_curve(&s, &pos) }
            })
            .collect();
        let warnings: Vec<EvalWarning> =
            auc.undefined.iter().map(|&c| EvalWarning::UndefinedAuc { class: classes[c] }).collect();
        for w in &warnings {
            let EvalWarning::UndefinedAuc { class } = w;
            log::warn!("AUC undefined for class `{class}`");
        }
        Ok(Self {
            classes: classes.to_vec(),
            n_samples: truth.len(),
            accuracy: confusion.accuracy(),
            macro_f1: f1_macro(&confusion),
            macro_auc: auc.macro_auc,
            per_class,
            confusion,
            roc,
            warnings,
            cv: None,
        })
    }

    /// ROC points as CSV with header `emotion,threshold,fpr,tpr`.
    pub fn roc_csv(&self) -> String {
        let mut out = String::from("emotion,threshold,fpr,tpr\n");
        for curve in &self.roc {
            for p in &curve.points {
                let _ = writeln!(out, "{},{:?},{:?},{:?}", curve.emotion, p.threshold, p.fpr, p.tpr);
            }
        }
        out
    }
}
