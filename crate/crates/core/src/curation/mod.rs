//! Building personalized and pooled training sets.

mod split;
mod standardize;

pub use split::{temporal_split, SplitMode, SplitPlan};
pub use standardize::Standardizer;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

use crate::ingest::{AggregationPlan, FeatureSchema, FeatureVector, FrameRecord};
use crate::labels::Emotion;
use crate::matrix::Matrix;
use crate::seed;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CurationError {
    #[error("subject `{subject}` has {found} eligible emotion(s), {required} required")]
    InsufficientEmotions { subject: String, found: usize, required: usize },
    #[error("no frames labeled `{0}`")]
    EmptyClass(Emotion),
    #[error("generic pool is empty")]
    EmptyPool,
    #[error("dataset `{0}` is empty")]
    EmptyDataset(String),
    #[error("degenerate split: {0}")]
    DegenerateSplit(String),
    #[error("frame {index} of clip `{clip}` (subject `{subject}`) is out of order or repeated")]
    Unordered { subject: String, clip: String, index: u64 },
    #[error("invalid policy: {0}")]
    InvalidPolicy(String),
}

/// One labeled frame after aggregation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledFrame {
    pub subject_id: String,
    pub clip_id: String,
    pub frame_index: u64,
    pub label: Emotion,
    pub features: FeatureVector,
}

/// Temporally ordered labeled frames of one subject, or of a pool of
/// subjects. Frames are sorted by `(subject, clip, frame)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectDataset {
    pub subject_id: String,
    pub frames: Vec<LabeledFrame>,
    pub label_histogram: BTreeMap<Emotion, usize>,
}

impl SubjectDataset {
    /// Sorts the frames and recomputes the histogram. Fails when a
    /// `(subject, clip, frame)` key repeats.
    pub fn new(subject_id: impl Into<String>, mut frames: Vec<LabeledFrame>) -> Result<Self, CurationError> {
        frames.sort_by(|a, b| {
            (&a.subject_id, &a.clip_id, a.frame_index).cmp(&(&b.subject_id, &b.clip_id, b.frame_index))
        });
        for w in frames.windows(2) {
            if (&w[0].subject_id, &w[0].clip_id, w[0].frame_index)
                == (&w[1].subject_id, &w[1].clip_id, w[1].frame_index)
            {
                return Err(CurationError::Unordered {
                    subject: w[1].subject_id.clone(),
                    clip: w[1].clip_id.clone(),
                    index: w[1].frame_index,
                });
            }
        }
        let label_histogram = histogram(&frames);
        Ok(Self { subject_id: subject_id.into(), frames, label_histogram })
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.frames.first().map_or(0, |f| f.features.len())
    }

    pub fn labels(&self) -> BTreeSet<Emotion> {
        self.label_histogram.keys().copied().collect()
    }

    /// Checks the documented invariants (histogram matches frames, strictly
    /// increasing frame index within each clip stream).
    pub fn validate(&self) -> Result<(), CurationError> {
        if histogram(&self.frames) != self.label_histogram {
            return Err(CurationError::InvalidPolicy("label histogram out of sync".into()));
        }
        for w in self.frames.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if a.subject_id == b.subject_id && a.clip_id == b.clip_id && a.frame_index >= b.frame_index {
                return Err(CurationError::Unordered {
                    subject: b.subject_id.clone(),
                    clip: b.clip_id.clone(),
                    index: b.frame_index,
                });
            }
        }
        Ok(())
    }

    /// Feature matrix and class indices (positions in `classes`) of the
    /// selected frames. Frames whose label is not in `classes` are skipped.
    pub fn to_samples(&self, indices: &[usize], classes: &[Emotion]) -> (Matrix, Vec<usize>) {
        let d = self.n_features();
        let mut rows = Vec::with_capacity(indices.len() * d);
        let mut y = Vec::with_capacity(indices.len());
        for &i in indices {
            let f = &self.frames[i];
            if let Some(c) = classes.iter().position(|&e| e == f.label) {
                rows.extend_from_slice(f.features.as_slice());
                y.push(c);
            }
        }
        (Matrix::from_vec(y.len(), d, rows), y)
    }

    /// All frames as samples.
    pub fn all_samples(&self, classes: &[Emotion]) -> (Matrix, Vec<usize>) {
        let idx: Vec<usize> = (0..self.len()).collect();
        self.to_samples(&idx, classes)
    }

    /// New dataset holding the selected frames.
    pub fn subset(&self, indices: &[usize]) -> SubjectDataset {
        let frames: Vec<LabeledFrame> = indices.iter().map(|&i| self.frames[i].clone()).collect();
        SubjectDataset::new(self.subject_id.clone(), frames).expect("subset of a valid dataset")
    }

    /// Frames restricted to the given labels.
    pub fn restrict(&self, emotions: &BTreeSet<Emotion>) -> SubjectDataset {
        let frames = self.frames.iter().filter(|f| emotions.contains(&f.label)).cloned().collect();
        SubjectDataset::new(self.subject_id.clone(), frames).expect("restriction of a valid dataset")
    }
}

fn histogram(frames: &[LabeledFrame]) -> BTreeMap<Emotion, usize> {
    let mut h = BTreeMap::new();
    for f in frames {
        *h.entry(f.label).or_insert(0) += 1;
    }
    h
}

/// Groups records by subject, drops unlabeled frames and aggregates the raw
/// columns. Subjects come back in id order.
pub fn datasets_from_records(records: &[FrameRecord], schema: &FeatureSchema) -> Vec<SubjectDataset> {
    let plan = AggregationPlan::new(schema);
    let mut by_subject: BTreeMap<&str, Vec<&FrameRecord>> = BTreeMap::new();
    for r in records {
        by_subject.entry(r.subject_id.as_str()).or_default().push(r);
    }
    by_subject
        .into_par_iter()
        .map(|(subject, recs)| {
            let frames = recs
                .into_iter()
                .filter_map(|r| {
                    r.actual_emotion.map(|label| LabeledFrame {
                        subject_id: r.subject_id.clone(),
                        clip_id: r.clip_id.clone(),
                        frame_index: r.frame_index,
                        label,
                        features: plan.apply(&r.raw),
                    })
                })
                .collect();
            SubjectDataset::new(subject, frames).expect("ingest guarantees unique frames")
        })
        .collect()
}

/// Thresholds and sampling seed for dataset curation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CurationPolicy {
    /// Labels with at least this many frames are eligible.
    pub min_labels_per_emotion: usize,
    /// Frames retained per class by balanced subsampling.
    pub target_per_class: usize,
    /// Subjects with fewer eligible emotions are excluded.
    pub min_emotions: usize,
    pub seed: u64,
}

impl Default for CurationPolicy {
    fn default() -> Self {
        Self { min_labels_per_emotion: 1600, target_per_class: 1600, min_emotions: 2, seed: 0 }
    }
}

impl CurationPolicy {
    pub fn validate(&self) -> Result<(), CurationError> {
        if self.min_emotions < 2 {
            return Err(CurationError::InvalidPolicy("min_emotions must be at least 2".into()));
        }
        if self.min_labels_per_emotion == 0 || self.target_per_class == 0 {
            return Err(CurationError::InvalidPolicy("thresholds must be positive".into()));
        }
        Ok(())
    }

    /// Same policy with the per-subject sub-seed derived from `subject`.
    pub fn for_subject(&self, subject: &str) -> CurationPolicy {
        CurationPolicy { seed: seed::derive(self.seed, &format!("subject/{subject}")), ..self.clone() }
    }
}

/// A non-fatal observation made while curating.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CurationWarning {
    /// A class had fewer frames than the target; every class was capped at
    /// `retained` to keep the set balanced.
    UnderTarget { subject: String, emotion: Emotion, available: usize, retained: usize, target: usize },
}

impl std::fmt::Display for CurationWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CurationWarning::UnderTarget { subject, emotion, available, retained, target } => write!(
                f,
                "subject {subject}: only {available} `{emotion}` frames (target {target}); \
                 keeping {retained} per class"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curated {
    pub dataset: SubjectDataset,
    pub warnings: Vec<CurationWarning>,
}

/// Labels with at least `min_labels_per_emotion` frames.
pub fn eligible_emotions(
    ds: &SubjectDataset,
    policy: &CurationPolicy,
) -> Result<BTreeSet<Emotion>, CurationError> {
    if ds.is_empty() {
        return Err(CurationError::EmptyDataset(ds.subject_id.clone()));
    }
    let found: BTreeSet<Emotion> = ds
        .label_histogram
        .iter()
        .filter(|(_, &n)| n >= policy.min_labels_per_emotion)
        .map(|(&e, _)| e)
        .collect();
    if found.len() < policy.min_emotions {
        return Err(CurationError::InsufficientEmotions {
            subject: ds.subject_id.clone(),
            found: found.len(),
            required: policy.min_emotions,
        });
    }
    Ok(found)
}

/// Keeps `min(target, smallest class count)` frames of every class in
/// `emotions`, drawn uniformly without replacement, in original order.
/// Frames of other labels are dropped.
pub fn balanced_subsample(
    ds: &SubjectDataset,
    emotions: &BTreeSet<Emotion>,
    policy: &CurationPolicy,
) -> Result<Curated, CurationError> {
    let tag = format!("subsample/{}", ds.subject_id);
    balance(ds, emotions, policy.target_per_class, policy.seed, &tag)
}

fn balance(
    ds: &SubjectDataset,
    emotions: &BTreeSet<Emotion>,
    target: usize,
    master: u64,
    tag: &str,
) -> Result<Curated, CurationError> {
    let mut members: BTreeMap<Emotion, Vec<usize>> = emotions.iter().map(|&e| (e, Vec::new())).collect();
    for (i, f) in ds.frames.iter().enumerate() {
        if let Some(v) = members.get_mut(&f.label) {
            v.push(i);
        }
    }
    if let Some((&e, _)) = members.iter().find(|(_, v)| v.is_empty()) {
        return Err(CurationError::EmptyClass(e));
    }
    let smallest = members.values().map(Vec::len).min().unwrap_or(0);
    let keep = target.min(smallest);
    let mut warnings = Vec::new();
    let mut chosen = Vec::with_capacity(keep * members.len());
    for (&e, idx) in &members {
        if idx.len() < target {
            warnings.push(CurationWarning::UnderTarget {
                subject: ds.subject_id.clone(),
                emotion: e,
                available: idx.len(),
                retained: keep,
                target,
            });
        }
        if idx.len() == keep {
            chosen.extend_from_slice(idx);
        } else {
            let mut rng = seed::rng_for(master, &format!("{tag}/{e}"));
            let mut picked: Vec<usize> =
                rand::seq::index::sample(&mut rng, idx.len(), keep).into_iter().map(|k| idx[k]).collect();
            picked.sort_unstable();
            chosen.extend(picked);
        }
    }
    chosen.sort_unstable();
    for w in &warnings {
        log::warn!("{w}");
    }
    Ok(Curated { dataset: ds.subset(&chosen), warnings })
}

/// Id given to pooled datasets, e.g. `generic[neutral+happiness]`.
pub fn generic_id(emotions: &BTreeSet<Emotion>) -> String {
    let names: Vec<&str> = emotions.iter().map(|e| e.as_str()).collect();
    format!("generic[{}]", names.join("+"))
}

/// Pools the frames labeled within `emotions` from every subject except
/// `exclude_subject`, then balances the pooled class counts to
/// `target_per_class`.
pub fn build_generic(
    subjects: &[SubjectDataset],
    emotions: &BTreeSet<Emotion>,
    exclude_subject: Option<&str>,
    policy: &CurationPolicy,
) -> Result<Curated, CurationError> {
    let frames: Vec<LabeledFrame> = subjects
        .iter()
        .filter(|s| Some(s.subject_id.as_str()) != exclude_subject)
        .flat_map(|s| s.frames.iter())
        .filter(|f| Some(f.subject_id.as_str()) != exclude_subject && emotions.contains(&f.label))
        .cloned()
        .collect();
    if frames.is_empty() {
        return Err(CurationError::EmptyPool);
    }
    let id = generic_id(emotions);
    let pooled = SubjectDataset::new(id.clone(), frames)?;
    let tag = format!("generic/{id}/{}", exclude_subject.unwrap_or("-"));
    balance(&pooled, emotions, policy.target_per_class, policy.seed, &tag)
}
