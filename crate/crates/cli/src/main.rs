//! `emopers`: command-line driver for the personalized versus generic
//! emotion-classification pipeline.

mod commands;
mod config;
mod error;
mod output;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use emopers::classifiers::Family;
use emopers::curation::SplitMode;
use emopers::protocol::GenericMode;

use config::{Format, RunConfig};
use error::CliError;
use output::{Output, Provenance};

#[derive(Debug, Parser)]
#[command(name = "emopers", version, about = "Personalized vs. generic emotion classification from facial features")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output formats to write; repeatable. Defaults to all.
    #[arg(long, global = true, value_enum)]
    format: Vec<Format>,
    #[arg(long, global = true, value_parser = parse_generic_mode)]
    generic_mode: Option<GenericMode>,
    /// `temporal` or `nested_cv`.
    #[arg(long, global = true, value_parser = parse_split)]
    split: Option<SplitMode>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic cohort as frame tables.
    Synth,
    /// Load frame tables, report label histograms and curate subjects.
    Ingest,
    /// Train and evaluate one model for one subject.
    Train {
        #[arg(long)]
        subject: String,
        #[arg(long, value_parser = parse_family)]
        family: Family,
    },
    /// Personalized versus generic comparison over the cohort.
    Compare,
    /// Forest feature-importance rankings.
    Importance {
        #[arg(long)]
        subject: Option<String>,
    },
    /// PCA projection, separability and feature correlation.
    Pca {
        #[arg(long, conflicts_with = "pooled")]
        subject: Option<String>,
        #[arg(long)]
        pooled: bool,
    },
    /// Consolidated provenance report of the output directory.
    Report,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Ingest => "ingest",
            Command::Train { .. } => "train",
            Command::Compare => "compare",
            Command::Importance { .. } => "importance",
            Command::Pca { .. } => "pca",
            Command::Report => "report",
        }
    }
}

fn parse_family(s: &str) -> Result<Family, String> {
    s.parse()
}

fn parse_generic_mode(s: &str) -> Result<GenericMode, String> {
    s.parse()
}

fn parse_split(s: &str) -> Result<SplitMode, String> {
    match s {
        "temporal" | "temporal_holdout" => Ok(SplitMode::TemporalHoldout),
        "nested_cv" => Ok(SplitMode::NestedCv),
        other => Err(format!("unknown split `{other}`")),
    }
}

fn effective_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out_dir = o.clone();
    }
    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    if !cli.format.is_empty() {
        cfg.formats = cli.format.clone();
    }
    if let Some(m) = cli.generic_mode {
        cfg.generic_mode = m;
    }
    if let Some(m) = cli.split {
        cfg.split.mode = m;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let cfg = effective_config(&cli)?;
    if let Some(n) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::config("threads", e.to_string()))?;
    }
    let schema_fingerprint = match cli.command {
        Command::Synth => None,
        _ => Some(commands::resolve_schema(&cfg)?.fingerprint()),
    };
    let out = Output {
        root: cfg.out_dir.clone(),
        provenance: Provenance {
            tool: "emopers",
            version: env!("CARGO_PKG_VERSION"),
            command: cli.command.name().to_string(),
            config_hash: cfg.hash(),
            seed: cfg.seed,
            schema_fingerprint,
        },
    };
    match &cli.command {
        Command::Synth => commands::synth(&cfg, &out),
        Command::Ingest => commands::ingest(&cfg, &out),
        Command::Train { subject, family } => commands::train(&cfg, &out, subject, *family),
        Command::Compare => commands::compare(&cfg, &out),
        Command::Importance { subject } => commands::importance(&cfg, &out, subject.as_deref()),
        Command::Pca { subject, pooled } => commands::pca(&cfg, &out, subject.as_deref(), *pooled),
        Command::Report => commands::report(&cfg, &out),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::config("invalid_arguments", e.to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.code)
        }
    }
}
