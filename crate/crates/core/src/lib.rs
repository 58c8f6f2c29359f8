//! Personalized versus generic emotion classification from per-frame facial
//! features.
//!
//! The crate covers the whole workflow: parsing OpenFace-style frame tables
//! into a fixed 51-feature representation ([`ingest`]), building per-subject
//! and pooled training sets ([`curation`]), three native classifier families
//! ([`classifiers`]), metrics and nested cross-validation ([`evaluation`]),
//! exploratory analytics ([`analysis`]), the per-subject comparison
//! experiment ([`protocol`]) and a seeded synthetic cohort generator
//! ([`synthgen`]).
//!
//! Every stochastic step draws from a ChaCha stream whose seed is derived from
//! a master seed and a textual tag (see [`seed`]), so results never depend on
//! thread count or scheduling order.

pub mod analysis;
pub mod classifiers;
pub mod curation;
pub mod evaluation;
pub mod ingest;
pub mod labels;
pub mod matrix;
pub mod protocol;
pub mod seed;
pub mod svg;
pub mod synthgen;

pub use labels::{Emotion, Stimulus};
pub use matrix::Matrix;

/// Lowercase hex SHA-256 of `bytes`.
pub fn fingerprint(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}
