//! The personalized-versus-generic comparison experiment.
//!
//! For every subject the curated, balanced frames are split into train and
//! test. A personalized model learns from the subject's training part only;
//! a generic model for the same emotion combination learns from a pool of
//! subjects. Both are scored on the very same subject test set.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::analysis::{silhouette, AnalysisError};
use crate::classifiers::{Family, HyperGrid, ModelConfig};
use crate::curation::{
    balanced_subsample, build_generic, eligible_emotions, generic_id, temporal_split, CurationError,
    CurationPolicy, CurationWarning, SplitMode, SplitPlan, Standardizer, SubjectDataset,
};
use crate::evaluation::{
    assemble_cv, complement, holdout_eval, make_folds, EvalError, EvalReport, FoldResult, HoldoutResult,
    Samples,
};
use crate::labels::Emotion;
use crate::matrix::Matrix;
use crate::seed;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProtocolError {
    #[error("invalid experiment: {0}")]
    InvalidConfig(String),
    #[error("unknown subject `{0}`")]
    UnknownSubject(String),
    #[error("subject `{subject}`: {source}")]
    Curation { subject: String, source: CurationError },
    #[error("subject `{subject}`, {family}: {source}")]
    Eval { subject: String, family: Family, source: EvalError },
    #[error("subject `{subject}`: {source}")]
    Analysis { subject: String, source: AnalysisError },
    #[error("no {family} result for subject `{subject}`")]
    IncompleteReport { subject: String, family: Family },
}

/// Where the generic model's training frames come from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenericMode {
    /// Every other subject's frames plus the evaluated subject's training
    /// frames (never its test frames).
    #[default]
    PoolAll,
    /// Every other subject's frames only.
    LeaveOneOut,
}

impl std::str::FromStr for GenericMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pool_all" => Ok(GenericMode::PoolAll),
            "leave_one_out" => Ok(GenericMode::LeaveOneOut),
            other => Err(format!("unknown generic mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    /// Subjects to evaluate; empty means all, in id order.
    pub subjects: Vec<String>,
    pub families: Vec<Family>,
    pub split: SplitPlan,
    pub curation: CurationPolicy,
    pub generic_mode: GenericMode,
    pub grid: HyperGrid,
    pub seed: u64,
    /// Replaces the derived sub-seed of individual subjects.
    pub subject_seeds: BTreeMap<String, u64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            subjects: Vec::new(),
            families: Family::ALL.to_vec(),
            split: SplitPlan::default(),
            curation: CurationPolicy::default(),
            generic_mode: GenericMode::PoolAll,
            grid: HyperGrid::default(),
            seed: 0,
            subject_seeds: BTreeMap::new(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), ProtocolError> {
        let invalid = |m: String| ProtocolError::InvalidConfig(m);
        if self.families.is_empty() {
            return Err(invalid("no model families selected".into()));
        }
        if self.families.iter().collect::<BTreeSet<_>>().len() != self.families.len() {
            return Err(invalid("model families repeat".into()));
        }
        for f in &self.families {
            if self.grid.configs(*f).is_empty() {
                return Err(invalid(format!("the {f} grid is empty")));
            }
        }
        self.split.validate().map_err(|e| invalid(e.to_string()))?;
        self.curation.validate().map_err(|e| invalid(e.to_string()))?;
        Ok(())
    }

    pub fn subject_seed(&self, subject: &str) -> u64 {
        self.subject_seeds.get(subject).copied().unwrap_or_else(|| seed::derive(self.seed, &format!("subject/{subject}")))
    }

    /// Curation policy with the subject's derived sampling seed.
    pub fn policy_for(&self, subject: &str) -> CurationPolicy {
        CurationPolicy { seed: seed::derive(self.subject_seed(subject), "curation"), ..self.curation.clone() }
    }
}

/// Metrics of one approach on one subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproachResult {
    /// Test macro-F1; pooled out-of-fold in nested mode.
    pub macro_f1: f64,
    pub macro_auc: Option<f64>,
    /// Chosen configuration per evaluation (one per outer fold in nested mode).
    pub chosen: Vec<ModelConfig>,
    pub report: Option<EvalReport>,
}

impl ApproachResult {
    pub fn from_f1(macro_f1: f64) -> Self {
        Self { macro_f1, macro_auc: None, chosen: Vec::new(), report: None }
    }

    fn from_report(report: EvalReport, chosen: Vec<ModelConfig>) -> Self {
        Self { macro_f1: report.macro_f1, macro_auc: report.macro_auc, chosen, report: Some(report) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub family: Family,
    pub personalized: ApproachResult,
    pub generic: ApproachResult,
    /// Personalized F1 strictly above generic F1; ties favour generic.
    pub personalized_wins: bool,
}

impl CellResult {
    pub fn new(family: Family, personalized: ApproachResult, generic: ApproachResult) -> Self {
        let personalized_wins = personalized.macro_f1 > generic.macro_f1;
        Self { family, personalized, generic, personalized_wins }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectRow {
    pub subject: String,
    pub emotions: Vec<Emotion>,
    pub generic_id: String,
    pub n_personalized_train: usize,
    pub n_generic_train: usize,
    pub n_test: usize,
    /// SHA-256 over the `(subject, clip, frame)` keys of the test frames.
    /// Both approaches of every family are scored on exactly this set.
    pub test_fingerprint: String,
    pub warnings: Vec<CurationWarning>,
    pub cells: Vec<CellResult>,
}

impl SubjectRow {
    pub fn cell(&self, family: Family) -> Option<&CellResult> {
        self.cells.iter().find(|c| c.family == family)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub config: ExperimentConfig,
    pub families: Vec<Family>,
    pub rows: Vec<SubjectRow>,
    pub summary: Summary,
}

/// Column means and win counts of a [`ComparisonReport`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub families: Vec<Family>,
    pub personalized_mean: Vec<f64>,
    pub generic_mean: Vec<f64>,
    /// Subjects where personalized beats generic, per family.
    pub family_wins: Vec<usize>,
    /// Subjects where personalized beats generic for a majority of families.
    pub overall_wins: usize,
    pub winners: Vec<String>,
    pub n_subjects: usize,
}

/// Mean taken as offsets from the first entry, so a constant column
/// returns its value exactly.
fn column_mean(v: &[f64]) -> f64 {
    match v.first() {
        None => f64::NAN,
        Some(&first) => first + v.iter().map(|x| x - first).sum::<f64>() / v.len() as f64,
    }
}

/// Column means and win counts. A subject is an overall personalized win
/// when personalized F1 exceeds generic F1 for more than half the families.
pub fn summarize(families: &[Family], rows: &[SubjectRow]) -> Result<Summary, ProtocolError> {
    let n = rows.len();
    let mut p_cols = vec![Vec::with_capacity(n); families.len()];
    let mut g_cols = vec![Vec::with_capacity(n); families.len()];
    let mut family_wins = vec![0; families.len()];
    let mut winners = Vec::new();
    for row in rows {
        let mut wins = 0;
        for (k, &f) in families.iter().enumerate() {
            let cell = row
                .cell(f)
                .ok_or_else(|| ProtocolError::IncompleteReport { subject: row.subject.clone(), family: f })?;
            p_cols[k].push(cell.personalized.macro_f1);
            g_cols[k].push(cell.generic.macro_f1);
            if cell.personalized_wins {
                family_wins[k] += 1;
                wins += 1;
            }
        }
        if 2 * wins > families.len() {
            winners.push(row.subject.clone());
        }
    }
    let means = |cols: Vec<Vec<f64>>| cols.iter().map(|c| column_mean(c)).collect::<Vec<_>>();
    Ok(Summary {
        families: families.to_vec(),
        personalized_mean: means(p_cols),
        generic_mean: means(g_cols),
        family_wins,
        overall_wins: winners.len(),
        winners,
        n_subjects: n,
    })
}

impl ComparisonReport {
    /// A report holding only F1 values, `rows[i] = (subject, [(personalized,
    /// generic); families])`.
    pub fn from_f1(families: &[Family], rows: &[(&str, Vec<(f64, f64)>)]) -> Result<Self, ProtocolError> {
        let rows: Vec<SubjectRow> = rows
            .iter()
            .map(|(subject, cells)| SubjectRow {
                subject: subject.to_string(),
                emotions: Vec::new(),
                generic_id: String::new(),
                n_personalized_train: 0,
                n_generic_train: 0,
                n_test: 0,
                test_fingerprint: String::new(),
                warnings: Vec::new(),
                cells: families
                    .iter()
                    .zip(cells)
                    .map(|(&f, &(p, g))| CellResult::new(f, ApproachResult::from_f1(p), ApproachResult::from_f1(g)))
                    .collect(),
            })
            .collect();
        let summary = summarize(families, &rows)?;
        let config = ExperimentConfig { families: families.to_vec(), ..ExperimentConfig::default() };
        Ok(Self { config, families: families.to_vec(), rows, summary })
    }

    /// Markdown table with personalized and generic F1 (percent) per
    /// family. The better value of each pair is bold; subjects that are not
    /// overall personalized wins are marked with `*`.
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| Subject |");
        for f in &self.families {
            let _ = write!(out, " {0} personalized | {0} generic |", f.short_name());
        }
        out.push_str("\n|---|");
        for _ in &self.families {
            out.push_str("---:|---:|");
        }
        out.push('\n');
        let pct = |v: f64| format!("{:.2}", 100.0 * v);
        for row in &self.rows {
            let mark = if self.summary.winners.contains(&row.subject) { "" } else { " *" };
            let _ = write!(out, "| {}{} |", row.subject, mark);
            for f in &self.families {
                match row.cell(*f) {
                    Some(c) => {
                        let (p, g) = (pct(c.personalized.macro_f1), pct(c.generic.macro_f1));
                        if c.personalized_wins {
                            let _ = write!(out, " **{p}** | {g} |");
                        } else {
                            let _ = write!(out, " {p} | **{g}** |");
                        }
                    }
                    None => out.push_str(" - | - |"),
                }
            }
            out.push('\n');
        }
        out.push_str("| Mean |");
        for k in 0..self.families.len() {
            let _ = write!(out, " {} | {} |", pct(self.summary.personalized_mean[k]), pct(self.summary.generic_mean[k]));
        }
        out.push('\n');
        let _ = writeln!(
            out,
            "\nPersonalized wins: {} of {} subjects (majority of families); per family: {}.",
            self.summary.overall_wins,
            self.summary.n_subjects,
            self.families
                .iter()
                .zip(&self.summary.family_wins)
                .map(|(f, w)| format!("{} {w}", f.short_name()))
                .collect::<Vec<_>>()
                .join(", ")
        );
        out
    }
}

/// SHA-256 over the `(subject, clip, frame)` keys of `ds`.
pub fn frame_fingerprint(ds: &SubjectDataset) -> String {
    let mut bytes = Vec::new();
    for f in &ds.frames {
        bytes.extend_from_slice(f.subject_id.as_bytes());
        bytes.push(0);
        bytes.extend_from_slice(f.clip_id.as_bytes());
        bytes.push(0);
        bytes.extend_from_slice(&f.frame_index.to_le_bytes());
    }
    crate::fingerprint(&bytes)
}

/// Curated frames of one subject together with the matched generic pool.
#[derive(Debug, Clone)]
pub struct SubjectPlan {
    pub subject: String,
    pub classes: Vec<Emotion>,
    pub curated: SubjectDataset,
    pub warnings: Vec<CurationWarning>,
    /// Temporal mode: indices into `curated.frames`. Empty in nested mode.
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

fn samples(ds: &SubjectDataset, classes: &[Emotion]) -> Samples {
    let (x, y) = ds.all_samples(classes);
    Samples::new(x, y)
}

fn find<'a>(data: &'a [SubjectDataset], subject: &str) -> Result<&'a SubjectDataset, ProtocolError> {
    data.iter().find(|d| d.subject_id == subject).ok_or_else(|| ProtocolError::UnknownSubject(subject.to_string()))
}

/// Eligibility, balanced subsampling and (temporal mode) the split.
pub fn plan_subject(cfg: &ExperimentConfig, data: &[SubjectDataset], subject: &str) -> Result<SubjectPlan, ProtocolError> {
    let cur = |source| ProtocolError::Curation { subject: subject.to_string(), source };
    let ds = find(data, subject)?;
    let policy = cfg.policy_for(subject);
    let emotions = eligible_emotions(ds, &policy).map_err(cur)?;
    let curated = balanced_subsample(ds, &emotions, &policy).map_err(cur)?;
    let (train, test) = match cfg.split.mode {
        SplitMode::TemporalHoldout => temporal_split(&curated.dataset, cfg.split.train_fraction).map_err(cur)?,
        SplitMode::NestedCv => (Vec::new(), Vec::new()),
    };
    Ok(SubjectPlan {
        subject: subject.to_string(),
        classes: emotions.into_iter().collect(),
        curated: curated.dataset,
        warnings: curated.warnings,
        train,
        test,
    })
}

/// The generic training set for `subject`, given the subject's own
/// training frames (used only in pool-all mode).
pub fn generic_training_set(
    cfg: &ExperimentConfig,
    data: &[SubjectDataset],
    subject: &str,
    classes: &[Emotion],
    own_train: &SubjectDataset,
    tag: &str,
) -> Result<SubjectDataset, ProtocolError> {
    let emotions: BTreeSet<Emotion> = classes.iter().copied().collect();
    let policy = CurationPolicy { seed: seed::derive(cfg.subject_seed(subject), tag), ..cfg.curation.clone() };
    let others: Vec<&SubjectDataset> = data.iter().filter(|d| d.subject_id != subject).collect();
    let pool: Vec<SubjectDataset> = match cfg.generic_mode {
        GenericMode::PoolAll => others.into_iter().cloned().chain(std::iter::once(own_train.clone())).collect(),
        GenericMode::LeaveOneOut => others.into_iter().cloned().collect(),
    };
    let built = build_generic(&pool, &emotions, None, &policy)
        .map_err(|source| ProtocolError::Curation { subject: subject.to_string(), source })?;
    Ok(built.dataset)
}

fn evaluate_pair(
    cfg: &ExperimentConfig,
    configs: &[ModelConfig],
    personal: &Samples,
    generic: &Samples,
    test: &Samples,
    classes: &[Emotion],
    seed: u64,
) -> Result<(HoldoutResult, HoldoutResult), EvalError> {
    let (inner, strat) = (cfg.split.inner_folds, cfg.split.stratified);
    let p = holdout_eval(configs, personal, test, classes, inner, strat, seed)?;
    let g = holdout_eval(configs, generic, test, classes, inner, strat, seed)?;
    Ok((p, g))
}

fn run_subject(cfg: &ExperimentConfig, data: &[SubjectDataset], subject: &str) -> Result<SubjectRow, ProtocolError> {
    let plan = plan_subject(cfg, data, subject)?;
    let classes = &plan.classes;
    let sub_seed = cfg.subject_seed(subject);
    let eval_err = |family, source| ProtocolError::Eval { subject: subject.to_string(), family, source };
    let model_seed = |f: Family| seed::derive(sub_seed, &format!("model/{f}"));

    match cfg.split.mode {
        SplitMode::TemporalHoldout => {
            let train_ds = plan.curated.subset(&plan.train);
            let test_ds = plan.curated.subset(&plan.test);
            let generic_ds = generic_training_set(cfg, data, subject, classes, &train_ds, "generic")?;
            let (personal, generic, test) =
                (samples(&train_ds, classes), samples(&generic_ds, classes), samples(&test_ds, classes));
            let fingerprint = frame_fingerprint(&test_ds);
            let mut cells = Vec::new();
            for &f in &cfg.families {
                let configs = cfg.grid.configs(f);
                let (p, g) =
                    evaluate_pair(cfg, &configs, &personal, &generic, &test, classes, model_seed(f)).map_err(|e| eval_err(f, e))?;
                assert_eq!(p.report.n_samples, g.report.n_samples);
                cells.push(CellResult::new(
                    f,
                    ApproachResult::from_report(p.report, vec![p.chosen]),
                    ApproachResult::from_report(g.report, vec![g.chosen]),
                ));
            }
            Ok(SubjectRow {
                subject: subject.to_string(),
                emotions: classes.clone(),
                generic_id: generic_id(&classes.iter().copied().collect()),
                n_personalized_train: personal.len(),
                n_generic_train: generic.len(),
                n_test: test.len(),
                test_fingerprint: fingerprint,
                warnings: plan.warnings,
                cells,
            })
        }
        SplitMode::NestedCv => {
            let all = samples(&plan.curated, classes);
            let folds = make_folds(
                &all.y,
                classes.len(),
                cfg.split.outer_folds,
                cfg.split.stratified,
                seed::derive(sub_seed, "outer-folds"),
            )
            .map_err(|e| eval_err(cfg.families[0], e))?;
            let mut per_family: Vec<(Vec<(FoldResult, Vec<Vec<f64>>)>, Vec<(FoldResult, Vec<Vec<f64>>)>)> =
                cfg.families.iter().map(|_| (Vec::new(), Vec::new())).collect();
            let mut n_generic = 0;
            for (k, test_idx) in folds.iter().enumerate() {
                let train_idx = complement(all.len(), test_idx);
                let train_ds = plan.curated.subset(&train_idx);
                let generic_ds = generic_training_set(cfg, data, subject, classes, &train_ds, &format!("generic/{k}"))?;
                let (personal, generic, test) = (all.subset(&train_idx), samples(&generic_ds, classes), all.subset(test_idx));
                n_generic += generic.len();
                for (slot, &f) in per_family.iter_mut().zip(&cfg.families) {
                    let configs = cfg.grid.configs(f);
                    let fold_seed = seed::derive(model_seed(f), &format!("outer/{k}"));
                    let (mut p, mut g) = evaluate_pair(cfg, &configs, &personal, &generic, &test, classes, fold_seed)
                        .map_err(|e| eval_err(f, e.in_fold(k)))?;
                    let (ps, gs) = (std::mem::take(&mut p.test_scores), std::mem::take(&mut g.test_scores));
                    slot.0.push((FoldResult::new(k, p), ps));
                    slot.1.push((FoldResult::new(k, g), gs));
                }
            }
            let mut cells = Vec::new();
            for ((p_out, g_out), &f) in per_family.into_iter().zip(&cfg.families) {
                let chosen = |o: &[(FoldResult, Vec<Vec<f64>>)]| o.iter().map(|(r, _)| r.chosen.clone()).collect::<Vec<_>>();
                let (pc, gc) = (chosen(&p_out), chosen(&g_out));
                let p = assemble_cv(classes, &all.y, &folds, p_out).map_err(|e| eval_err(f, e))?;
                let g = assemble_cv(classes, &all.y, &folds, g_out).map_err(|e| eval_err(f, e))?;
                cells.push(CellResult::new(f, ApproachResult::from_report(p, pc), ApproachResult::from_report(g, gc)));
            }
            Ok(SubjectRow {
                subject: subject.to_string(),
                emotions: classes.clone(),
                generic_id: generic_id(&classes.iter().copied().collect()),
                n_personalized_train: all.len() - all.len() / folds.len(),
                n_generic_train: n_generic / folds.len(),
                n_test: all.len(),
                test_fingerprint: frame_fingerprint(&plan.curated),
                warnings: plan.warnings,
                cells,
            })
        }
    }
}

/// Subjects to evaluate: the configured list, or every dataset in id order.
pub fn selected_subjects(cfg: &ExperimentConfig, data: &[SubjectDataset]) -> Result<Vec<String>, ProtocolError> {
    if cfg.subjects.is_empty() {
        let mut ids: Vec<String> = data.iter().map(|d| d.subject_id.clone()).collect();
        ids.sort();
        return Ok(ids);
    }
    for s in &cfg.subjects {
        find(data, s)?;
    }
    Ok(cfg.subjects.clone())
}

/// Runs the comparison for every selected subject. Subjects are processed
/// in parallel; rows come back in subject order.
pub fn run_experiment(cfg: &ExperimentConfig, data: &[SubjectDataset]) -> Result<ComparisonReport, ProtocolError> {
    cfg.validate()?;
    let subjects = selected_subjects(cfg, data)?;
    if subjects.is_empty() {
        return Err(ProtocolError::InvalidConfig("no subjects".into()));
    }
    let rows: Vec<SubjectRow> =
        subjects.par_iter().map(|s| run_subject(cfg, data, s)).collect::<Result<_, ProtocolError>>()?;
    let summary = summarize(&cfg.families, &rows)?;
    Ok(ComparisonReport { config: cfg.clone(), families: cfg.families.clone(), rows, summary })
}

/// Upper bound on the points used per silhouette; larger sets are
/// subsampled with a seeded draw.
pub const SILHOUETTE_MAX_POINTS: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRow {
    pub subject: String,
    pub personalized_silhouette: f64,
    pub generic_silhouette: f64,
    pub generic_won: bool,
    /// Generic won and the personalized silhouette lies below the cohort
    /// median.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureAnalysis {
    pub median_personalized_silhouette: f64,
    pub rows: Vec<FailureRow>,
}

/// Silhouette of standardized features, on at most
/// [`SILHOUETTE_MAX_POINTS`] seeded-sampled frames.
pub fn dataset_silhouette(ds: &SubjectDataset, classes: &[Emotion], seed: u64) -> Result<f64, AnalysisError> {
    let (x, y) = ds.all_samples(classes);
    let keep: Vec<usize> = if x.rows() > SILHOUETTE_MAX_POINTS {
        let mut idx = rand::seq::index::sample(&mut seed::rng(seed), x.rows(), SILHOUETTE_MAX_POINTS).into_vec();
        idx.sort_unstable();
        idx
    } else {
        (0..x.rows()).collect()
    };
    let sub: Matrix = x.select(&keep);
    let labels: Vec<usize> = keep.iter().map(|&i| y[i]).collect();
    let z = Standardizer::fit(&sub).transform(&sub);
    silhouette(&z, &labels)
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 { s[n / 2] } else { (s[n / 2 - 1] + s[n / 2]) / 2.0 }
}

/// Annotates every subject with the silhouette of its curated dataset and
/// of its generic dataset (pooled over every subject, per the report's
/// generic mode), flagging generic wins on poorly separated subjects.
pub fn failure_analysis(report: &ComparisonReport, data: &[SubjectDataset]) -> Result<FailureAnalysis, ProtocolError> {
    let cfg = &report.config;
    let per_subject: Vec<(f64, f64)> = report
        .rows
        .par_iter()
        .map(|row| {
            let an = |source| ProtocolError::Analysis { subject: row.subject.clone(), source };
            let plan = plan_subject(cfg, data, &row.subject)?;
            let own_train = match cfg.split.mode {
                SplitMode::TemporalHoldout => plan.curated.subset(&plan.train),
                SplitMode::NestedCv => plan.curated.clone(),
            };
            let generic = generic_training_set(cfg, data, &row.subject, &plan.classes, &own_train, "generic")?;
            let s = cfg.subject_seed(&row.subject);
            let p = dataset_silhouette(&plan.curated, &plan.classes, seed::derive(s, "silhouette/personalized")).map_err(an)?;
            let g = dataset_silhouette(&generic, &plan.classes, seed::derive(s, "silhouette/generic")).map_err(an)?;
            Ok((p, g))
        })
        .collect::<Result<_, ProtocolError>>()?;
    let med = median(&per_subject.iter().map(|p| p.0).collect::<Vec<_>>());
    let rows = report
        .rows
        .iter()
        .zip(per_subject)
        .map(|(row, (p, g))| {
            let generic_won = !report.summary.winners.contains(&row.subject);
            FailureRow {
                subject: row.subject.clone(),
                personalized_silhouette: p,
                generic_silhouette: g,
                generic_won,
                flagged: generic_won && p < med,
            }
        })
        .collect();
    Ok(FailureAnalysis { median_personalized_silhouette: med, rows })
}
