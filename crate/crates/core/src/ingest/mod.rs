//! Per-frame feature tables.
//!
//! Input files are comma-separated with a header row. Five label columns are
//! required (`subject`, `clip`, `frame`, `prompt`, `actual`) alongside every
//! raw column referenced by the active [`FeatureSchema`]; other columns are
//! ignored. Header names are trimmed, since OpenFace pads them with spaces.
//! Lines starting with `#` are comments.

mod schema;

pub use schema::{
    default_schema, Aggregation, FeatureDescriptor, FeatureKind, FeatureSchema, AU_INTENSITY,
    AU_PRESENCE, FEATURE_COUNT,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::labels::{Emotion, Stimulus};

pub const LABEL_COLUMNS: [&str; 5] = ["subject", "clip", "frame", "prompt", "actual"];

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("missing column `{0}`")]
    MissingColumn(String),
    #[error("non-finite value at row {row}, column `{column}`")]
    NonFiniteValue { row: usize, column: String },
    #[error("invalid value `{value}` at row {row}, column `{column}`")]
    InvalidValue { row: usize, column: String, value: String },
    #[error("duplicate frame {index} in subject `{subject}`, clip `{clip}`")]
    DuplicateFrame { subject: String, clip: String, index: u64 },
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
}

/// Raw measurements of one frame, in [`FeatureSchema::required_columns`]
/// order. The column list is shared by every record loaded under the same
/// schema.
#[derive(Debug, Clone, PartialEq)]
pub struct RawValues {
    columns: Arc<[String]>,
    values: Vec<f64>,
}

impl RawValues {
    pub fn new(columns: Arc<[String]>, values: Vec<f64>) -> Self {
        assert_eq!(columns.len(), values.len());
        Self { columns, values }
    }

    /// Builds values for `schema` from a name lookup; errors on the first
    /// missing or non-finite column.
    pub fn from_map(schema: &FeatureSchema, map: &HashMap<String, f64>) -> Result<Self, IngestError> {
        let columns: Arc<[String]> = schema.required_columns().into();
        let mut values = Vec::with_capacity(columns.len());
        for c in columns.iter() {
            let v = *map.get(c).ok_or_else(|| IngestError::MissingColumn(c.clone()))?;
            if !v.is_finite() {
                return Err(IngestError::NonFiniteValue { row: 0, column: c.clone() });
            }
            values.push(v);
        }
        Ok(Self { columns, values })
    }

    pub fn get(&self, column: &str) -> Option<f64> {
        self.columns.iter().position(|c| c == column).map(|i| self.values[i])
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.columns.iter().map(String::as_str).zip(self.values.iter().copied())
    }
}

/// One video frame as read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameRecord {
    pub subject_id: String,
    pub clip_id: String,
    pub frame_index: u64,
    pub prompt_emotion: Stimulus,
    /// Absent when the annotation software produced no label for the frame.
    pub actual_emotion: Option<Emotion>,
    pub raw: RawValues,
}

impl FrameRecord {
    fn sort_key(&self) -> (&str, &str, u64) {
        (&self.subject_id, &self.clip_id, self.frame_index)
    }
}

/// The 51 aggregated feature values of one frame, in schema order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl AsRef<[f64]> for FeatureVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Schema descriptors resolved to positions in [`RawValues`].
#[derive(Debug, Clone)]
pub struct AggregationPlan {
    columns: Arc<[String]>,
    groups: Vec<Vec<usize>>,
}

impl AggregationPlan {
    pub fn new(schema: &FeatureSchema) -> Self {
        let columns: Arc<[String]> = schema.required_columns().into();
        let position: HashMap<&str, usize> =
            columns.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
        let groups = schema
            .descriptors
            .iter()
            .map(|d| d.source_columns.iter().map(|c| position[c.as_str()]).collect())
            .collect();
        Self { columns, groups }
    }

    pub fn apply(&self, raw: &RawValues) -> FeatureVector {
        let values = if Arc::ptr_eq(&raw.columns, &self.columns) || raw.columns == self.columns {
            self.groups
                .iter()
                .map(|g| g.iter().map(|&i| raw.values[i]).sum::<f64>() / g.len() as f64)
                .collect()
        } else {
            // records built against a different column order; resolve by name
            self.groups
                .iter()
                .map(|g| {
                    g.iter()
                        .map(|&i| raw.get(&self.columns[i]).expect("record satisfies schema"))
                        .sum::<f64>()
                        / g.len() as f64
                })
                .collect()
        };
        FeatureVector(values)
    }
}

/// Arithmetic mean of each descriptor's source columns. `identity`
/// descriptors have one source column, so the mean is that value.
pub fn aggregate(record: &FrameRecord, schema: &FeatureSchema) -> FeatureVector {
    AggregationPlan::new(schema).apply(&record.raw)
}

/// Reads one frame table. Records come back sorted by
/// `(subject, clip, frame)`.
pub fn load_frames(path: &Path, schema: &FeatureSchema) -> Result<Vec<FrameRecord>, IngestError> {
    let mut records = parse_file(path, schema)?;
    records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    check_duplicates(&records)?;
    Ok(records)
}

/// Reads every `*.csv` file directly inside `dir` (in parallel) and merges
/// them. The merged order does not depend on which file finished first.
pub fn load_dir(dir: &Path, schema: &FeatureSchema) -> Result<Vec<FrameRecord>, IngestError> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| IngestError::Io { path: dir.display().to_string(), source: e })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    files.sort();
    let parsed: Vec<Vec<FrameRecord>> =
        files.par_iter().map(|p| parse_file(p, schema)).collect::<Result<_, _>>()?;
    let mut records: Vec<FrameRecord> = parsed.into_iter().flatten().collect();
    records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    check_duplicates(&records)?;
    Ok(records)
}

fn check_duplicates(sorted: &[FrameRecord]) -> Result<(), IngestError> {
    for w in sorted.windows(2) {
        if w[0].sort_key() == w[1].sort_key() {
            return Err(IngestError::DuplicateFrame {
                subject: w[1].subject_id.clone(),
                clip: w[1].clip_id.clone(),
                index: w[1].frame_index,
            });
        }
    }
    Ok(())
}

fn parse_file(path: &Path, schema: &FeatureSchema) -> Result<Vec<FrameRecord>, IngestError> {
    let csv_err = |e: csv::Error| IngestError::Csv { path: path.display().to_string(), source: e };
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(csv_err)?;
    let header: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(str::to_string).collect();
    let position: HashMap<&str, usize> =
        header.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let find = |name: &str| {
        position.get(name).copied().ok_or_else(|| IngestError::MissingColumn(name.to_string()))
    };
    let [subject_at, clip_at, frame_at, prompt_at, actual_at] = [
        find("subject")?,
        find("clip")?,
        find("frame")?,
        find("prompt")?,
        find("actual")?,
    ];
    let columns: Arc<[String]> = schema.required_columns().into();
    let value_at: Vec<usize> = columns.iter().map(|c| find(c)).collect::<Result<_, _>>()?;

    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(csv_err)?;
        let line = i + 1;
        let cell = |at: usize| row.get(at).unwrap_or("");
        let invalid = |column: &str, value: &str| IngestError::InvalidValue {
            row: line,
            column: column.to_string(),
            value: value.to_string(),
        };
        let frame_index: u64 = cell(frame_at).parse().map_err(|_| invalid("frame", cell(frame_at)))?;
        let prompt_emotion: Stimulus =
            cell(prompt_at).parse().map_err(|_| invalid("prompt", cell(prompt_at)))?;
        let actual_emotion = match cell(actual_at) {
            "" => None,
            s => Some(s.parse::<Emotion>().map_err(|_| invalid("actual", s))?),
        };
        let mut values = Vec::with_capacity(columns.len());
        for (c, &at) in columns.iter().zip(&value_at) {
            let text = cell(at);
            let v: f64 = text.parse().map_err(|_| invalid(c, text))?;
            if !v.is_finite() {
                return Err(IngestError::NonFiniteValue { row: line, column: c.clone() });
            }
            values.push(v);
        }
        out.push(FrameRecord {
            subject_id: cell(subject_at).to_string(),
            clip_id: cell(clip_at).to_string(),
            frame_index,
            prompt_emotion,
            actual_emotion,
            raw: RawValues { columns: columns.clone(), values },
        });
    }
    Ok(out)
}

/// Writes records in the format [`load_frames`] reads. `comment`, when given,
/// is emitted as a leading `#` line.
pub fn write_frames(
    path: &Path,
    records: &[FrameRecord],
    schema: &FeatureSchema,
    comment: Option<&str>,
) -> Result<(), IngestError> {
    let io_err = |e: std::io::Error| IngestError::Io { path: path.display().to_string(), source: e };
    let csv_err = |e: csv::Error| IngestError::Csv { path: path.display().to_string(), source: e };
    let mut file = std::io::BufWriter::new(std::fs::File::create(path).map_err(io_err)?);
    if let Some(c) = comment {
        use std::io::Write;
        writeln!(file, "# {c}").map_err(io_err)?;
    }
    let mut w = csv::Writer::from_writer(file);
    let columns = schema.required_columns();
    let mut header: Vec<&str> = LABEL_COLUMNS.to_vec();
    header.extend(columns.iter().map(String::as_str));
    w.write_record(&header).map_err(csv_err)?;
    let mut row: Vec<String> = Vec::with_capacity(header.len());
    for r in records {
        row.clear();
        row.push(r.subject_id.clone());
        row.push(r.clip_id.clone());
        row.push(r.frame_index.to_string());
        row.push(r.prompt_emotion.to_string());
        row.push(r.actual_emotion.map(|e| e.to_string()).unwrap_or_default());
        for c in &columns {
            let v = r.raw.get(c).ok_or_else(|| IngestError::MissingColumn(c.clone()))?;
            row.push(format_f64(v));
        }
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(io_err)?;
    Ok(())
}

/// Shortest representation that parses back to the same bits.
pub fn format_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Prompt x actual label counts per subject (unlabeled frames are counted
/// under `None`).
pub type LabelCrosstab = BTreeMap<String, BTreeMap<Stimulus, BTreeMap<Option<Emotion>, usize>>>;

pub fn label_crosstab(records: &[FrameRecord]) -> LabelCrosstab {
    let mut out = LabelCrosstab::new();
    for r in records {
        *out.entry(r.subject_id.clone())
            .or_default()
            .entry(r.prompt_emotion)
            .or_default()
            .entry(r.actual_emotion)
            .or_default() += 1;
    }
    out
}
