use serde::{Deserialize, Serialize};

use super::{CurationError, SubjectDataset};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SplitMode {
    /// Train on the early part of every clip, test on the rest.
    TemporalHoldout,
    /// Stratified outer folds with an inner grid search per fold.
    NestedCv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitPlan {
    pub mode: SplitMode,
    /// Fraction of each clip stream used for training (temporal mode).
    pub train_fraction: f64,
    pub outer_folds: usize,
    pub inner_folds: usize,
    pub stratified: bool,
    pub seed: u64,
}

impl Default for SplitPlan {
    fn default() -> Self {
        Self {
            mode: SplitMode::TemporalHoldout,
            train_fraction: 0.8,
            outer_folds: 10,
            inner_folds: 5,
            stratified: true,
            seed: 0,
        }
    }
}

impl SplitPlan {
    pub fn validate(&self) -> Result<(), CurationError> {
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(CurationError::InvalidPolicy(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.train_fraction
            )));
        }
        if self.outer_folds < 2 || self.inner_folds < 2 {
            return Err(CurationError::InvalidPolicy("fold counts must be at least 2".into()));
        }
        Ok(())
    }
}

/// Splits every `(subject, clip)` stream at `floor(train_fraction * n)`:
/// the first frames train, the rest test. Returns indices into `ds.frames`.
pub fn temporal_split(
    ds: &SubjectDataset,
    train_fraction: f64,
) -> Result<(Vec<usize>, Vec<usize>), CurationError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(CurationError::InvalidPolicy(format!(
            "train_fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut start = 0;
    while start < ds.frames.len() {
        let head = &ds.frames[start];
        let mut end = start + 1;
        while end < ds.frames.len()
            && ds.frames[end].subject_id == head.subject_id
            && ds.frames[end].clip_id == head.clip_id
        {
            end += 1;
        }
        let n = end - start;
        let cut = start + (train_fraction * n as f64).floor() as usize;
        train.extend(start..cut);
        test.extend(cut..end);
        start = end;
    }
    if train.is_empty() || test.is_empty() {
        return Err(CurationError::DegenerateSplit(format!(
            "{} train / {} test frames for `{}`",
            train.len(),
            test.len(),
            ds.subject_id
        )));
    }
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curation::fixtures::dataset;
    use crate::labels::Emotion::*;

    #[test]
    fn ten_frames_at_point_eight() {
        let ds = dataset("s", &[(Neutral, 10)]);
        let (train, test) = temporal_split(&ds, 0.8).unwrap();
        assert_eq!(train, (0..8).collect::<Vec<_>>());
        assert_eq!(test, vec![8, 9]);
    }

    #[test]
    fn single_frame_is_degenerate() {
        let ds = dataset("s", &[(Neutral, 1)]);
        assert!(matches!(temporal_split(&ds, 0.8), Err(CurationError::DegenerateSplit(_))));
    }

    #[test]
    fn splits_each_clip_separately() {
        let ds = dataset("s", &[(Neutral, 10), (Happiness, 10)]);
        let (train, test) = temporal_split(&ds, 0.5).unwrap();
        let idx = |v: &[usize], clip: &str| -> Vec<u64> {
            v.iter().filter(|&&i| ds.frames[i].clip_id == clip).map(|&i| ds.frames[i].frame_index).collect()
        };
        assert_eq!(idx(&train, "clip-neutral"), vec![0, 1, 2, 3, 4]);
        assert_eq!(idx(&test, "clip-neutral"), vec![5, 6, 7, 8, 9]);
        assert_eq!(idx(&train, "clip-happiness"), vec![0, 1, 2, 3, 4]);
        assert_eq!(idx(&test, "clip-happiness"), vec![5, 6, 7, 8, 9]);
    }

    #[test]
    fn rejects_fraction_outside_unit_interval() {
        let ds = dataset("s", &[(Neutral, 10)]);
        assert!(temporal_split(&ds, 1.0).is_err());
        assert!(temporal_split(&ds, 0.0).is_err());
    }
}
