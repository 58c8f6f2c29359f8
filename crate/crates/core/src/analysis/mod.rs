//! Correlation, PCA, separability and importance-ranking analytics.

mod correlation;
mod importance;
mod pca;
mod separability;

pub use correlation::{correlation_matrix, CorrelationMatrix, CorrelationMethod};
pub use importance::{
    compare_importances, importance_comparison, rank_features, FeatureRanking, ImportanceComparison,
    PairOverlap, RankedFeature,
};
pub use pca::{pca_fit, PcaFit, PcaModel};
pub use separability::{separability, silhouette, CentroidDistance, SeparabilityReport};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("{requested} components requested from {dims}-dimensional data")]
    TooManyComponents { requested: usize, dims: usize },
    #[error("separability needs at least two classes")]
    SingleClass,
    #[error("`{subject}` has {found} features, expected {expected}")]
    SchemaMismatch { subject: String, found: usize, expected: usize },
    #[error("importances unavailable for `{subject}`: {reason}")]
    Importance { subject: String, reason: String },
}

/// A non-fatal observation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AnalysisWarning {
    /// Fewer strictly positive eigenvalues than components requested.
    RankDeficient { requested: usize, positive: usize },
}
