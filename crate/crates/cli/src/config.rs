use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use emopers::classifiers::{Family, HyperGrid};
use emopers::curation::{CurationPolicy, SplitPlan};
use emopers::protocol::{ExperimentConfig, GenericMode};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
    Svg,
    Md,
}

/// Column layout of synthesized CSV files.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    /// One column per feature.
    #[default]
    Compact,
    /// OpenFace-style source columns (about 350 per row).
    Full,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSettings {
    /// Cohort spec JSON; the built-in ten-subject cohort when absent.
    pub spec: Option<PathBuf>,
    pub layout: Layout,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Frame tables; `<out_dir>/data` when absent.
    pub data_dir: Option<PathBuf>,
    /// Feature schema JSON. When absent, `<data_dir>/schema.json` is used if
    /// it exists and the built-in schema otherwise.
    pub schema: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub seed: u64,
    pub threads: Option<usize>,
    pub formats: Vec<Format>,
    pub subjects: Vec<String>,
    pub families: Vec<Family>,
    pub generic_mode: GenericMode,
    pub curation: CurationPolicy,
    pub split: SplitPlan,
    pub grid: HyperGrid,
    pub synth: SynthSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data_dir: None,
            schema: None,
            out_dir: PathBuf::from("out"),
            seed: 0,
            threads: None,
            formats: vec![Format::Json, Format::Csv, Format::Svg, Format::Md],
            subjects: Vec::new(),
            families: Family::ALL.to_vec(),
            generic_mode: GenericMode::PoolAll,
            curation: CurationPolicy::default(),
            split: SplitPlan::default(),
            grid: HyperGrid::default(),
            synth: SynthSettings::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config("config_unreadable", format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::config("invalid_config", format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.threads == Some(0) {
            return Err(CliError::config("invalid_config", "threads must be positive"));
        }
        self.experiment().validate().map_err(|e| CliError::config("invalid_config", e.to_string()))
    }

    pub fn data_dir(&self) -> PathBuf {
        self.data_dir.clone().unwrap_or_else(|| self.out_dir.join("data"))
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }

    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            subjects: self.subjects.clone(),
            families: self.families.clone(),
            split: self.split.clone(),
            curation: self.curation.clone(),
            generic_mode: self.generic_mode,
            grid: self.grid.clone(),
            seed: self.seed,
            subject_seeds: Default::default(),
        }
    }

    /// SHA-256 of the canonical JSON of every setting that can change a
    /// result. Locations and thread count are left out.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.data_dir = None;
        c.schema = None;
        c.out_dir = PathBuf::new();
        c.threads = None;
        c.synth.spec = None;
        emopers::fingerprint(&serde_json::to_vec(&c).expect("config serializes"))
    }
}
