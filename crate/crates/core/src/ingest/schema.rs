use serde::{Deserialize, Serialize};
use std::path::Path;

use super::IngestError;

/// Number of features in the canonical frame representation.
pub const FEATURE_COUNT: usize = 51;

/// OpenFace action units that carry an intensity estimate (`AUxx_r`).
pub const AU_INTENSITY: [&str; 17] = [
    "AU01", "AU02", "AU04", "AU05", "AU06", "AU07", "AU09", "AU10", "AU12", "AU14", "AU15", "AU17",
    "AU20", "AU23", "AU25", "AU26", "AU45",
];

/// OpenFace action units that carry a presence flag (`AUxx_c`).
pub const AU_PRESENCE: [&str; 18] = [
    "AU01", "AU02", "AU04", "AU05", "AU06", "AU07", "AU09", "AU10", "AU12", "AU14", "AU15", "AU17",
    "AU20", "AU23", "AU25", "AU26", "AU28", "AU45",
];

const EYE_LANDMARKS: usize = 56;
const FACE_LANDMARKS: usize = 68;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    AuIntensity,
    AuPresence,
    GazeAxisMean,
    GazeAngle,
    EyeLandmarkAxisMean,
    HeadPoseComponent,
    FaceLandmarkAxisMean,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    Mean,
    Identity,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureDescriptor {
    pub name: String,
    pub kind: FeatureKind,
    pub source_columns: Vec<String>,
    pub aggregation: Aggregation,
}

/// Ordered mapping from raw table columns to the 51 aggregated features.
///
/// The column names live here rather than in code so that exports from
/// different OpenFace releases can be read by swapping the schema file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub descriptors: Vec<FeatureDescriptor>,
}

impl FeatureSchema {
    pub fn new(descriptors: Vec<FeatureDescriptor>) -> Result<Self, IngestError> {
        let schema = Self { descriptors };
        schema.validate()?;
        Ok(schema)
    }

    pub fn validate(&self) -> Result<(), IngestError> {
        if self.descriptors.len() != FEATURE_COUNT {
            return Err(IngestError::InvalidSchema(format!(
                "expected {FEATURE_COUNT} descriptors, found {}",
                self.descriptors.len()
            )));
        }
        let mut seen = std::collections::HashSet::new();
        for d in &self.descriptors {
            if !seen.insert(d.name.as_str()) {
                return Err(IngestError::InvalidSchema(format!("duplicate feature `{}`", d.name)));
            }
            if d.source_columns.is_empty() {
                return Err(IngestError::InvalidSchema(format!(
                    "feature `{}` has no source columns",
                    d.name
                )));
            }
            if d.aggregation == Aggregation::Identity && d.source_columns.len() != 1 {
                return Err(IngestError::InvalidSchema(format!(
                    "identity feature `{}` must have exactly one source column",
                    d.name
                )));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.descriptors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.descriptors.is_empty()
    }

    pub fn feature_names(&self) -> Vec<String> {
        self.descriptors.iter().map(|d| d.name.clone()).collect()
    }

    /// Every raw column referenced by the schema, deduplicated, in first-use
    /// order. This is the column order of [`super::RawValues`].
    pub fn required_columns(&self) -> Vec<String> {
        let mut seen = std::collections::HashSet::new();
        let mut out = Vec::new();
        for d in &self.descriptors {
            for c in &d.source_columns {
                if seen.insert(c.as_str()) {
                    out.push(c.clone());
                }
            }
        }
        out
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn fingerprint(&self) -> String {
        crate::fingerprint(&serde_json::to_vec(self).expect("schema serializes"))
    }

    pub fn from_json_file(path: &Path) -> Result<Self, IngestError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| IngestError::Io { path: path.display().to_string(), source: e })?;
        let schema: FeatureSchema = serde_json::from_str(&text)
            .map_err(|e| IngestError::InvalidSchema(format!("{}: {e}", path.display())))?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }

    /// A schema with the same names and kinds where every feature reads a
    /// single column named after itself. Tables written in this layout are
    /// about seven times narrower than full OpenFace exports.
    pub fn compact(&self) -> FeatureSchema {
        FeatureSchema {
            descriptors: self
                .descriptors
                .iter()
                .map(|d| FeatureDescriptor {
                    name: d.name.clone(),
                    kind: d.kind,
                    source_columns: vec![d.name.clone()],
                    aggregation: Aggregation::Identity,
                })
                .collect(),
        }
    }
}

fn mean_of(name: &str, kind: FeatureKind, cols: Vec<String>) -> FeatureDescriptor {
    FeatureDescriptor { name: name.to_string(), kind, source_columns: cols, aggregation: Aggregation::Mean }
}

fn identity(name: &str, kind: FeatureKind, col: &str) -> FeatureDescriptor {
    FeatureDescriptor {
        name: name.to_string(),
        kind,
        source_columns: vec![col.to_string()],
        aggregation: Aggregation::Identity,
    }
}

/// Canonical 51-feature layout over OpenFace 2.x column names:
///
/// | group | count |
/// |---|---|
/// | AU intensities `AUxx_r` | 17 |
/// | AU presences `AUxx_c` | 18 |
/// | gaze direction, mean of both eyes per axis | 3 |
/// | gaze angle x / y | 2 |
/// | 3-D eye landmarks, mean per axis | 3 |
/// | head pose translation + rotation | 6 |
/// | 2-D face landmarks, mean per axis | 2 |
pub fn default_schema() -> FeatureSchema {
    use FeatureKind::*;
    let mut d = Vec::with_capacity(FEATURE_COUNT);
    for au in AU_INTENSITY {
        d.push(identity(&format!("{au}_r"), AuIntensity, &format!("{au}_r")));
    }
    for au in AU_PRESENCE {
        d.push(identity(&format!("{au}_c"), AuPresence, &format!("{au}_c")));
    }
    for axis in ["x", "y", "z"] {
        d.push(mean_of(
            &format!("gaze_mean_{axis}"),
            GazeAxisMean,
            vec![format!("gaze_0_{axis}"), format!("gaze_1_{axis}")],
        ));
    }
    for axis in ["x", "y"] {
        d.push(identity(&format!("gaze_angle_{axis}"), GazeAngle, &format!("gaze_angle_{axis}")));
    }
    for axis in ["X", "Y", "Z"] {
        d.push(mean_of(
            &format!("eye_lmk_mean_{}", axis.to_ascii_lowercase()),
            EyeLandmarkAxisMean,
            (0..EYE_LANDMARKS).map(|i| format!("eye_lmk_{axis}_{i}")).collect(),
        ));
    }
    for p in ["Tx", "Ty", "Tz", "Rx", "Ry", "Rz"] {
        d.push(identity(&format!("pose_{p}"), HeadPoseComponent, &format!("pose_{p}")));
    }
    for axis in ["x", "y"] {
        d.push(mean_of(
            &format!("face_lmk_mean_{axis}"),
            FaceLandmarkAxisMean,
            (0..FACE_LANDMARKS).map(|i| format!("{axis}_{i}")).collect(),
        ));
    }
    FeatureSchema { descriptors: d }
}
