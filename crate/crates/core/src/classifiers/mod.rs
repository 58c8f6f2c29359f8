//! The three model families behind one scoring interface.
//!
//! All families work on class indices `0..n_classes`; the mapping to
//! emotions lives in [`TrainedClassifier`]. Ties in [`argmax`] resolve to the
//! lowest class index.

mod forest;
mod grid;
mod knn;
mod mlp;

pub use forest::{DecisionTree, ForestModel, ForestParams, Importances, Node};
pub use grid::{default_grid, ForestGrid, HyperGrid, KnnGrid, MlpGrid};
pub use knn::{euclidean, KnnModel, KnnParams};
pub use mlp::{MlpGradient, MlpModel, MlpParams};

use serde::{Deserialize, Serialize};
use std::fmt;

use crate::curation::Standardizer;
use crate::labels::Emotion;
use crate::matrix::Matrix;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ModelError {
    #[error("k = {k} exceeds the {n} training samples")]
    KTooLarge { k: usize, n: usize },
    #[error("training data needs at least two classes")]
    DegenerateTraining,
    #[error("training set is empty")]
    EmptyTraining,
    #[error("loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("forest has no splits")]
    NoSplits,
    #[error("invalid hyperparameters: {0}")]
    InvalidParams(String),
    #[error("unsupported model document version {0}")]
    UnsupportedVersion(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Knn,
    RandomForest,
    Mlp,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Knn, Family::RandomForest, Family::Mlp];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Knn => "knn",
            Family::RandomForest => "random_forest",
            Family::Mlp => "mlp",
        }
    }

    /// Short column heading used in tables.
    pub fn short_name(self) -> &'static str {
        match self {
            Family::Knn => "KNN",
            Family::RandomForest => "RF",
            Family::Mlp => "MLP",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "knn" => Ok(Family::Knn),
            "random_forest" | "rf" | "forest" => Ok(Family::RandomForest),
            "mlp" | "dnn" => Ok(Family::Mlp),
            other => Err(format!("unknown model family `{other}`")),
        }
    }
}

/// One fully specified hyperparameter configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModelConfig {
    Knn(KnnParams),
    RandomForest(ForestParams),
    Mlp(MlpParams),
}

impl ModelConfig {
    pub fn family(&self) -> Family {
        match self {
            ModelConfig::Knn(_) => Family::Knn,
            ModelConfig::RandomForest(_) => Family::RandomForest,
            ModelConfig::Mlp(_) => Family::Mlp,
        }
    }
}

impl fmt::Display for ModelConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelConfig::Knn(p) => write!(f, "knn(k={})", p.k),
            ModelConfig::RandomForest(p) => write!(
                f,
                "random_forest(trees={}, max_depth={})",
                p.n_trees,
                p.max_depth.map_or("none".to_string(), |d| d.to_string())
            ),
            ModelConfig::Mlp(p) => write!(f, "mlp(hidden={}, lr={})", p.hidden, p.learning_rate),
        }
    }
}

/// Per-class scoring. Scores are non-negative and sum to one.
pub trait Classifier {
    fn n_classes(&self) -> usize;

    fn predict_scores(&self, x: &[f64]) -> Vec<f64>;

    fn predict_label(&self, x: &[f64]) -> usize {
        argmax(&self.predict_scores(x))
    }
}

/// Index of the largest value; the first one wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// A fitted model of any family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "parameters", rename_all = "snake_case")]
pub enum Model {
    Knn(KnnModel),
    RandomForest(ForestModel),
    Mlp(MlpModel),
}

impl Model {
    pub fn family(&self) -> Family {
        match self {
            Model::Knn(_) => Family::Knn,
            Model::RandomForest(_) => Family::RandomForest,
            Model::Mlp(_) => Family::Mlp,
        }
    }
}

impl Classifier for Model {
    fn n_classes(&self) -> usize {
        match self {
            Model::Knn(m) => m.n_classes(),
            Model::RandomForest(m) => m.n_classes(),
            Model::Mlp(m) => m.n_classes(),
        }
    }

    fn predict_scores(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Model::Knn(m) => m.predict_scores(x),
            Model::RandomForest(m) => m.predict_scores(x),
            Model::Mlp(m) => m.predict_scores(x),
        }
    }
}

/// Fits a model on already standardized features.
pub fn fit(
    config: &ModelConfig,
    x: &Matrix,
    y: &[usize],
    n_classes: usize,
    seed: u64,
) -> Result<Model, ModelError> {
    Ok(match config {
        ModelConfig::Knn(p) => Model::Knn(KnnModel::fit(x, y, n_classes, p.k)?),
        ModelConfig::RandomForest(p) => Model::RandomForest(ForestModel::fit(x, y, n_classes, p, seed)?),
        ModelConfig::Mlp(p) => Model::Mlp(MlpModel::fit(x, y, n_classes, p, seed)?),
    })
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// Standardizer plus model, with the emotion each class index stands for.
/// This is the unit that gets trained, evaluated and serialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedClassifier {
    pub format_version: u32,
    pub classes: Vec<Emotion>,
    pub standardizer: Standardizer,
    pub model: Model,
}

impl TrainedClassifier {
    /// Fits the standardizer on `x` and the model on the standardized rows.
    pub fn fit(
        config: &ModelConfig,
        x: &Matrix,
        y: &[usize],
        classes: &[Emotion],
        seed: u64,
    ) -> Result<Self, ModelError> {
        if x.is_empty() {
            return Err(ModelError::EmptyTraining);
        }
        let standardizer = Standardizer::fit(x);
        let z = standardizer.transform(x);
        let model = fit(config, &z, y, classes.len(), seed)?;
        Ok(Self { format_version: MODEL_FORMAT_VERSION, classes: classes.to_vec(), standardizer, model })
    }

    pub fn family(&self) -> Family {
        self.model.family()
    }

    /// Scores for a raw (unstandardized) feature row.
    pub fn scores(&self, raw: &[f64]) -> Vec<f64> {
        self.model.predict_scores(&self.standardizer.apply(raw))
    }

    pub fn predict(&self, raw: &[f64]) -> Emotion {
        self.classes[argmax(&self.scores(raw))]
    }

    pub fn scores_matrix(&self, raw: &Matrix) -> Vec<Vec<f64>> {
        raw.iter_rows().map(|r| self.scores(r)).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, Box<dyn std::error::Error + Send + Sync>> {
        let m: TrainedClassifier = serde_json::from_str(text)?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Box::new(ModelError::UnsupportedVersion(m.format_version)));
        }
        Ok(m)
    }
}

pub(crate) fn check_training(x: &Matrix, y: &[usize], n_classes: usize) -> Result<(), ModelError> {
    if x.is_empty() {
        return Err(ModelError::EmptyTraining);
    }
    assert_eq!(x.rows(), y.len(), "features and labels differ in length");
    assert!(y.iter().all(|&c| c < n_classes), "label out of range");
    let first = y[0];
    if n_classes < 2 || y.iter().all(|&c| c == first) {
        return Err(ModelError::DegenerateTraining);
    }
    Ok(())
}
