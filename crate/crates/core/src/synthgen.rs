//! Seeded synthetic cohorts with controllable per-subject class structure.
//!
//! Each subject draws frames per emotion from a diagonal Gaussian. Class
//! centers mix a cohort-wide backbone (weight `w`) with subject-specific
//! means; the subject's separation scale `d` stretches the centers away from
//! their common mean along the informative features. An optional drift adds
//! a linear trend over each clip whose direction alternates between the
//! subject's emotions, so early and late frames of a clip differ.

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use crate::curation::{LabeledFrame, SubjectDataset};
use crate::ingest::{FeatureSchema, FeatureVector, FrameRecord, RawValues, FEATURE_COUNT};
use crate::labels::Emotion;
use crate::seed;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("invalid cohort spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectProfile {
    pub subject_id: String,
    pub emotions: Vec<Emotion>,
    /// Subject-specific mean per emotion, parallel to `emotions`.
    pub means: Vec<Vec<f64>>,
    /// Diagonal covariance per emotion, parallel to `emotions`.
    pub variances: Vec<Vec<f64>>,
    /// Offset added to every frame of the subject.
    pub baseline: Vec<f64>,
    pub separation: f64,
    /// Features whose class centers differ.
    pub informative: Vec<usize>,
    /// Frame count per emotion, parallel to `emotions`.
    pub frames: Vec<usize>,
    /// Per-frame slope of the drift; 0 disables it.
    #[serde(default)]
    pub drift_rate: f64,
    #[serde(default)]
    pub drift_features: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    pub subjects: Vec<SubjectProfile>,
    /// Shared class means; emotions without an entry use zeros.
    pub backbone: BTreeMap<Emotion, Vec<f64>>,
    /// Weight `w` of the backbone in every class center.
    pub commonality: f64,
    pub seed: u64,
}

impl CohortSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidSpec(m));
        if !(0.0..=1.0).contains(&self.commonality) {
            return bad(format!("commonality {} outside [0, 1]", self.commonality));
        }
        if self.subjects.is_empty() {
            return bad("no subjects".into());
        }
        if self.backbone.values().any(|v| v.len() != FEATURE_COUNT) {
            return bad("backbone vectors must have 51 entries".into());
        }
        let mut ids = BTreeSet::new();
        for s in &self.subjects {
            let id = &s.subject_id;
            if id.is_empty() || !ids.insert(id.as_str()) {
                return bad(format!("subject id `{id}` is empty or repeated"));
            }
            let k = s.emotions.len();
            if k == 0 || s.emotions.iter().collect::<BTreeSet<_>>().len() != k {
                return bad(format!("{id}: emotions must be non-empty and distinct"));
            }
            if s.means.len() != k || s.variances.len() != k || s.frames.len() != k {
                return bad(format!("{id}: per-emotion lists must match the emotion list"));
            }
            if s.means.iter().chain(&s.variances).any(|v| v.len() != FEATURE_COUNT) || s.baseline.len() != FEATURE_COUNT {
                return bad(format!("{id}: vectors must have 51 entries"));
            }
            if s.variances.iter().flatten().any(|&v| !(v > 0.0 && v.is_finite())) {
                return bad(format!("{id}: variances must be positive"));
            }
            if !(s.separation >= 0.0 && s.separation.is_finite()) {
                return bad(format!("{id}: separation must be non-negative"));
            }
            if s.separation > 0.0 && s.informative.is_empty() {
                return bad(format!("{id}: informative features required when separation > 0"));
            }
            if s.informative.iter().chain(&s.drift_features).any(|&j| j >= FEATURE_COUNT) {
                return bad(format!("{id}: feature index out of range"));
            }
            if !s.drift_rate.is_finite() {
                return bad(format!("{id}: drift rate must be finite"));
            }
        }
        Ok(())
    }

    /// Class means of `subject` before drift, parallel to its emotions.
    pub fn class_means(&self, subject: &SubjectProfile) -> Vec<Vec<f64>> {
        let w = self.commonality;
        let zeros = vec![0.0; FEATURE_COUNT];
        let centers: Vec<Vec<f64>> = subject
            .emotions
            .iter()
            .zip(&subject.means)
            .map(|(e, s)| {
                let b = self.backbone.get(e).unwrap_or(&zeros);
                b.iter().zip(s).map(|(b, s)| w * b + (1.0 - w) * s).collect()
            })
            .collect();
        let k = centers.len() as f64;
        let common: Vec<f64> = (0..FEATURE_COUNT).map(|j| centers.iter().map(|c| c[j]).sum::<f64>() / k).collect();
        let informative: BTreeSet<usize> = subject.informative.iter().copied().collect();
        centers
            .iter()
            .map(|c| {
                (0..FEATURE_COUNT)
                    .map(|j| {
                        let spread = if informative.contains(&j) { subject.separation * (c[j] - common[j]) } else { 0.0 };
                        subject.baseline[j] + common[j] + spread
                    })
                    .collect()
            })
            .collect()
    }
}

/// Draws every subject's frames. Frame `t` of emotion `k` lands in the clip
/// named after the emotion's typical stimulus with `frame_index = t`.
pub fn generate(spec: &CohortSpec) -> Result<Vec<SubjectDataset>, SynthError> {
    spec.validate()?;
    spec.subjects
        .par_iter()
        .map(|s| {
            let mut rng = seed::rng_for(spec.seed, &format!("synth/{}", s.subject_id));
            let means = spec.class_means(s);
            let mut frames = Vec::with_capacity(s.frames.iter().sum());
            for (k, &e) in s.emotions.iter().enumerate() {
                let n = s.frames[k];
                let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
                let sd: Vec<f64> = s.variances[k].iter().map(|v| v.sqrt()).collect();
                let clip = e.typical_stimulus().to_string();
                for t in 0..n {
                    let mut x: Vec<f64> = (0..FEATURE_COUNT)
                        .map(|j| {
                            let z: f64 = Normal::new(0.0, 1.0).expect("unit normal").sample(&mut rng);
                            means[k][j] + sd[j] * z
                        })
                        .collect();
                    if s.drift_rate != 0.0 {
                        let offset = sign * s.drift_rate * (n as f64 / 2.0 - t as f64);
                        for &j in &s.drift_features {
                            x[j] += offset;
                        }
                    }
                    frames.push(LabeledFrame {
                        subject_id: s.subject_id.clone(),
                        clip_id: clip.clone(),
                        frame_index: t as u64,
                        label: e,
                        features: FeatureVector(x),
                    });
                }
            }
            SubjectDataset::new(s.subject_id.clone(), frames).map_err(|e| SynthError::InvalidSpec(e.to_string()))
        })
        .collect()
}

/// Frame records in `schema`'s column layout. Every source column of a
/// feature carries that feature's value, so aggregation recovers it (up to
/// rounding for mean-aggregated features).
pub fn to_records(datasets: &[SubjectDataset], schema: &FeatureSchema) -> Vec<FrameRecord> {
    let columns: Arc<[String]> = schema.required_columns().into();
    let position: HashMap<&str, usize> = columns.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let mut sources = vec![0usize; columns.len()];
    for (f, d) in schema.descriptors.iter().enumerate() {
        for c in &d.source_columns {
            sources[position[c.as_str()]] = f;
        }
    }
    datasets
        .iter()
        .flat_map(|ds| ds.frames.iter())
        .map(|f| FrameRecord {
            subject_id: f.subject_id.clone(),
            clip_id: f.clip_id.clone(),
            frame_index: f.frame_index,
            prompt_emotion: f.label.typical_stimulus(),
            actual_emotion: Some(f.label),
            raw: RawValues::new(columns.clone(), sources.iter().map(|&src| f.features.0[src]).collect()),
        })
        .collect()
}

const BACKBONE_SEP: std::ops::Range<usize> = 0..8;
const BACKBONE_SAD: std::ops::Range<usize> = 8..12;
/// Indices of the low-separability subjects in [`paper_like_cohort`].
pub const LOW_SEPARABILITY: [usize; 2] = [3, 6];

/// Ten subjects: eight whose emotions are well separated along their own
/// private features, and two (indices in [`LOW_SEPARABILITY`]) whose classes
/// barely differ and whose clips drift in opposite directions per class.
/// Every third regular subject has three emotions, the rest two; every
/// class gets 1700 to 2000 frames.
pub fn paper_like_cohort(seed: u64) -> CohortSpec {
    let mut rng = seed::rng_for(seed, "cohort");
    let mut backbone = BTreeMap::new();
    let mut happy = vec![0.0; FEATURE_COUNT];
    let mut neutral = vec![0.0; FEATURE_COUNT];
    let mut sad = vec![0.0; FEATURE_COUNT];
    for j in BACKBONE_SEP {
        happy[j] = 1.0;
        neutral[j] = -1.0;
    }
    for j in BACKBONE_SAD {
        sad[j] = 1.5;
    }
    backbone.insert(Emotion::Happiness, happy);
    backbone.insert(Emotion::Neutral, neutral);
    backbone.insert(Emotion::Sadness, sad);

    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let free = FEATURE_COUNT - BACKBONE_SAD.end;
    let subjects = (0..10)
        .map(|i| {
            let low = LOW_SEPARABILITY.contains(&i);
            let emotions = if i % 3 == 2 && !low {
                vec![Emotion::Sadness, Emotion::Neutral, Emotion::Happiness]
            } else {
                vec![Emotion::Neutral, Emotion::Happiness]
            };
            let private: Vec<usize> =
                index::sample(&mut rng, free, 6).into_iter().map(|j| j + BACKBONE_SAD.end).collect();
            let means: Vec<Vec<f64>> = emotions
                .iter()
                .map(|e| {
                    if low {
                        backbone[e].clone()
                    } else {
                        let mut v = vec![0.0; FEATURE_COUNT];
                        for &j in &private {
                            v[j] = if rng.random::<bool>() { 1.0 } else { -1.0 };
                        }
                        v
                    }
                })
                .collect();
            let separation = if low { 0.35 } else { rng.random_range(2.0..=3.0) };
            let mut baseline = vec![0.0; FEATURE_COUNT];
            for b in baseline.iter_mut().skip(BACKBONE_SAD.end) {
                *b = normal.sample(&mut rng);
            }
            let frames: Vec<usize> = emotions.iter().map(|_| rng.random_range(1700..=2000)).collect();
            let mut informative: Vec<usize> = BACKBONE_SEP.chain(BACKBONE_SAD).collect();
            if !low {
                informative.extend(&private);
            }
            informative.sort_unstable();
            SubjectProfile {
                subject_id: format!("S{:02}", i + 1),
                variances: vec![vec![1.0; FEATURE_COUNT]; emotions.len()],
                emotions,
                means,
                baseline,
                separation,
                informative,
                frames,
                drift_rate: if low { 4.0 / 1850.0 } else { 0.0 },
                drift_features: if low { private } else { Vec::new() },
            }
        })
        .collect();
    CohortSpec { subjects, backbone, commonality: 0.25, seed }
}

/// One subject with two emotions whose centers differ by `2 * separation`
/// on the first six features and nowhere else; unit variances, no drift.
pub fn two_class_subject(separation: f64, frames_per_class: usize, seed: u64) -> CohortSpec {
    let emotions = vec![Emotion::Neutral, Emotion::Happiness];
    let means = emotions
        .iter()
        .enumerate()
        .map(|(k, _)| {
            let mut v = vec![0.0; FEATURE_COUNT];
            v[..6].iter_mut().for_each(|x| *x = if k == 0 { -1.0 } else { 1.0 });
            v
        })
        .collect();
    let subjects = vec![SubjectProfile {
        subject_id: "S01".into(),
        variances: vec![vec![1.0; FEATURE_COUNT]; 2],
        emotions,
        means,
        baseline: vec![0.0; FEATURE_COUNT],
        separation,
        informative: (0..6).collect(),
        frames: vec![frames_per_class; 2],
        drift_rate: 0.0,
        drift_features: Vec::new(),
    }];
    CohortSpec { subjects, backbone: BTreeMap::new(), commonality: 0.0, seed }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::default_schema;

    #[test]
    fn cohort_shape() {
        let spec = paper_like_cohort(1);
        spec.validate().unwrap();
        assert_eq!(spec.subjects.len(), 10);
        assert!(spec.subjects.iter().flat_map(|s| &s.frames).all(|&n| n >= 1600));
        let low: Vec<usize> =
            spec.subjects.iter().enumerate().filter(|(_, s)| s.separation < 1.0).map(|(i, _)| i).collect();
        assert_eq!(low, LOW_SEPARABILITY.to_vec());
        assert!(spec.subjects.iter().all(|s| (2..=3).contains(&s.emotions.len())));
    }

    #[test]
    fn zero_separation_means_identical_classes() {
        let spec = two_class_subject(0.0, 10, 0);
        let m = spec.class_means(&spec.subjects[0]);
        assert_eq!(m[0], m[1]);
    }

    #[test]
    fn same_seed_same_data() {
        let spec = two_class_subject(1.0, 50, 4);
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = CohortSpec { seed: 5, ..spec.clone() };
        assert_ne!(generate(&spec).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn frames_ordered_per_clip() {
        let ds = &generate(&two_class_subject(1.0, 30, 2)).unwrap()[0];
        for w in ds.frames.windows(2) {
            if w[0].clip_id == w[1].clip_id {
                assert!(w[1].frame_index > w[0].frame_index);
            }
        }
        assert_eq!(ds.label_histogram[&Emotion::Neutral], 30);
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut spec = two_class_subject(1.0, 10, 0);
        spec.commonality = 1.5;
        assert!(generate(&spec).is_err());
        let mut spec = two_class_subject(1.0, 10, 0);
        spec.subjects[0].informative.clear();
        assert!(spec.validate().is_err());
        let mut spec = two_class_subject(1.0, 10, 0);
        spec.subjects[0].variances[0][3] = 0.0;
        assert!(spec.validate().is_err());
    }

    #[test]
    fn records_round_trip_through_aggregation() {
        let ds = generate(&two_class_subject(1.0, 5, 0)).unwrap();
        let schema = default_schema().compact();
        let records = to_records(&ds, &schema);
        assert_eq!(records.len(), 10);
        let back = crate::ingest::aggregate(&records[3], &schema);
        assert_eq!(back, ds[0].frames[3].features);
    }
}
