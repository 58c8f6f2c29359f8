use std::fmt;

use emopers::analysis::AnalysisError;
use emopers::classifiers::ModelError;
use emopers::curation::CurationError;
use emopers::evaluation::EvalError;
use emopers::ingest::IngestError;
use emopers::protocol::ProtocolError;
use emopers::synthgen::SynthError;

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_NUMERICAL: u8 = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: u8,
    pub kind: &'static str,
    pub message: String,
}

impl CliError {
    pub fn config(kind: &'static str, message: impl Into<String>) -> Self {
        Self { code: EXIT_CONFIG, kind, message: message.into() }
    }

    pub fn data(kind: &'static str, message: impl Into<String>) -> Self {
        Self { code: EXIT_DATA, kind, message: message.into() }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": { "kind": self.kind, "code": self.code, "message": self.message } }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.kind, self.message)
    }
}

fn model_code(e: &ModelError) -> (u8, &'static str) {
    match e {
        ModelError::NonFiniteLoss { .. } => (EXIT_NUMERICAL, "non_finite_loss"),
        ModelError::NoSplits => (EXIT_NUMERICAL, "no_splits"),
        ModelError::KTooLarge { .. } => (EXIT_CONFIG, "k_too_large"),
        ModelError::InvalidParams(_) => (EXIT_CONFIG, "invalid_params"),
        ModelError::UnsupportedVersion(_) => (EXIT_DATA, "unsupported_version"),
        ModelError::DegenerateTraining | ModelError::EmptyTraining => (EXIT_DATA, "degenerate_training"),
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        let (code, kind) = model_code(&e);
        Self { code, kind, message: e.to_string() }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        let (code, kind) = match &e {
            EvalError::Model { source, .. } => model_code(source),
            EvalError::EmptyGrid => (EXIT_CONFIG, "empty_grid"),
            EvalError::StratificationImpossible { .. } => (EXIT_DATA, "stratification_impossible"),
            EvalError::EmptyTest => (EXIT_DATA, "empty_test"),
        };
        Self { code, kind, message: e.to_string() }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        let kind = match &e {
            IngestError::MissingColumn(_) => "missing_column",
            IngestError::NonFiniteValue { .. } => "non_finite_value",
            IngestError::InvalidValue { .. } => "invalid_value",
            IngestError::DuplicateFrame { .. } => "duplicate_frame",
            IngestError::InvalidSchema(_) => "invalid_schema",
            IngestError::Io { .. } => "io",
            IngestError::Csv { .. } => "csv",
        };
        let code = if matches!(e, IngestError::InvalidSchema(_)) { EXIT_CONFIG } else { EXIT_DATA };
        Self { code, kind, message: e.to_string() }
    }
}

impl From<CurationError> for CliError {
    fn from(e: CurationError) -> Self {
        let code = if matches!(e, CurationError::InvalidPolicy(_)) { EXIT_CONFIG } else { EXIT_DATA };
        Self { code, kind: "curation", message: e.to_string() }
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        Self { code: EXIT_NUMERICAL, kind: "analysis", message: e.to_string() }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        Self { code: EXIT_CONFIG, kind: "invalid_spec", message: e.to_string() }
    }
}

impl From<ProtocolError> for CliError {
    fn from(e: ProtocolError) -> Self {
        match e {
            ProtocolError::InvalidConfig(m) => CliError::config("invalid_config", m),
            ProtocolError::UnknownSubject(s) => CliError::config("unknown_subject", format!("unknown subject `{s}`")),
            ProtocolError::Curation { subject, source } => {
                let inner = CliError::from(source);
                CliError { message: format!("subject `{subject}`: {}", inner.message), ..inner }
            }
            ProtocolError::Eval { subject, family, source } => {
                let inner = CliError::from(source);
                CliError { message: format!("subject `{subject}`, {family}: {}", inner.message), ..inner }
            }
            ProtocolError::Analysis { subject, source } => {
                let inner = CliError::from(source);
                CliError { message: format!("subject `{subject}`: {}", inner.message), ..inner }
            }
            e @ ProtocolError::IncompleteReport { .. } => CliError::data("incomplete_report", e.to_string()),
        }
    }
}

pub fn io(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::data("io", format!("{}: {e}", path.display()))
}
