use serde::Serialize;
use std::collections::BTreeMap;
use std::fmt::Write as _;

use emopers::analysis::{compare_importances, correlation_matrix, pca_fit, rank_features, CorrelationMethod};
use emopers::classifiers::{Family, Model};
use emopers::curation::{datasets_from_records, SplitMode, Standardizer, SubjectDataset};
use emopers::evaluation::{grid_search, holdout_eval, nested_cv, CvPlan, EvalReport, GridSearch, Samples};
use emopers::ingest::{default_schema, label_crosstab, load_dir, write_frames, FeatureSchema};
use emopers::protocol::{self, dataset_silhouette, failure_analysis, plan_subject, run_experiment, SubjectPlan};
use emopers::synthgen::{generate, paper_like_cohort, to_records, CohortSpec};
use emopers::{seed, svg, Emotion};
use emopers::classifiers::TrainedClassifier;

use crate::config::{Format, Layout, RunConfig};
use crate::error::{io, CliError};
use crate::output::{list_files, Output};

pub fn resolve_schema(cfg: &RunConfig) -> Result<FeatureSchema, CliError> {
    if let Some(p) = &cfg.schema {
        if !p.exists() {
            return Err(CliError::config(
                "missing_schema",
                format!("MissingColumn: schema file `{}` not found; required columns cannot be resolved", p.display()),
            ));
        }
        return Ok(FeatureSchema::from_json_file(p)?);
    }
    let beside = cfg.data_dir().join("schema.json");
    if beside.exists() {
        Ok(FeatureSchema::from_json_file(&beside)?)
    } else {
        Ok(default_schema())
    }
}

pub fn load_datasets(cfg: &RunConfig, schema: &FeatureSchema) -> Result<Vec<SubjectDataset>, CliError> {
    let dir = cfg.data_dir();
    if !dir.is_dir() {
        return Err(CliError::data("missing_data", format!("data directory `{}` does not exist", dir.display())));
    }
    let records = load_dir(&dir, schema)?;
    if records.is_empty() {
        return Err(CliError::data("missing_data", format!("no frame tables in `{}`", dir.display())));
    }
    Ok(datasets_from_records(&records, schema))
}

pub fn synth(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let spec: CohortSpec = match &cfg.synth.spec {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| CliError::config("spec_unreadable", format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::config("invalid_spec", format!("{}: {e}", p.display())))?
        }
        None => paper_like_cohort(cfg.seed),
    };
    let datasets = generate(&spec)?;
    let schema = match cfg.synth.layout {
        Layout::Compact => default_schema().compact(),
        Layout::Full => default_schema(),
    };
    let dir = cfg.data_dir();
    std::fs::create_dir_all(&dir).map_err(|e| io(&dir, e))?;
    let line = out.provenance.line();
    for ds in &datasets {
        let records = to_records(std::slice::from_ref(ds), &schema);
        let path = dir.join(format!("{}.csv", ds.subject_id));
        write_frames(&path, &records, &schema, Some(&line))?;
    }
    let mut doc = serde_json::to_value(&schema).expect("schema serializes");
    doc.as_object_mut()
        .expect("schema is an object")
        .insert("provenance".into(), serde_json::to_value(&out.provenance).expect("provenance"));
    let schema_path = dir.join("schema.json");
    std::fs::write(&schema_path, serde_json::to_string_pretty(&doc).expect("json") + "\n").map_err(|e| io(&schema_path, e))?;
    out.json("synth/cohort_spec.json", "spec", &spec)?;
    Ok(())
}

#[derive(Serialize)]
struct IngestSummary {
    subject: String,
    eligible: Vec<Emotion>,
    label_histogram: BTreeMap<Emotion, usize>,
    retained_per_class: usize,
    warnings: Vec<emopers::curation::CurationWarning>,
    excluded: Option<String>,
}

pub fn ingest(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let schema = resolve_schema(cfg)?;
    let dir = cfg.data_dir();
    let records = load_dir(&dir, &schema)?;
    let crosstab = label_crosstab(&records);
    if cfg.wants(Format::Json) {
        let keyed: BTreeMap<&String, BTreeMap<String, BTreeMap<String, usize>>> = crosstab
            .iter()
            .map(|(s, per_prompt)| {
                let inner = per_prompt
                    .iter()
                    .map(|(p, per_actual)| {
                        let counts = per_actual.iter().map(|(a, n)| (actual_name(*a), *n)).collect();
                        (p.to_string(), counts)
                    })
                    .collect();
                (s, inner)
            })
            .collect();
        out.json("ingest/label_histograms.json", "crosstab", &keyed)?;
    }
    if cfg.wants(Format::Csv) || cfg.wants(Format::Md) {
        let mut csv = String::from("subject,prompt,actual,frames\n");
        let mut md = String::new();
        for (subject, per_prompt) in &crosstab {
            let _ = writeln!(md, "## {subject}\n\n| Prompt | Actual | Frames |\n|---|---|---:|");
            for (prompt, per_actual) in per_prompt {
                for (actual, n) in per_actual {
                    let a = actual_name(*actual);
                    let _ = writeln!(csv, "{subject},{prompt},{a},{n}");
                    let _ = writeln!(md, "| {prompt} | {a} | {n} |");
                }
            }
            md.push('\n');
        }
        if cfg.wants(Format::Csv) {
            out.csv("ingest/label_histograms.csv", &csv)?;
        }
        if cfg.wants(Format::Md) {
            out.markdown("ingest/label_histograms.md", &md)?;
        }
    }
    let datasets = datasets_from_records(&records, &schema);
    let exp = cfg.experiment();
    let mut summaries = Vec::new();
    for ds in &datasets {
        match plan_subject(&exp, &datasets, &ds.subject_id) {
            Ok(plan) => {
                if cfg.wants(Format::Csv) {
                    out.csv(&format!("ingest/curated/{}.csv", ds.subject_id), &curated_csv(&plan.curated, &schema))?;
                }
                summaries.push(IngestSummary {
                    subject: ds.subject_id.clone(),
                    retained_per_class: plan.curated.label_histogram.values().copied().next().unwrap_or(0),
                    eligible: plan.classes,
                    label_histogram: ds.label_histogram.clone(),
                    warnings: plan.warnings,
                    excluded: None,
                });
            }
            Err(e) => summaries.push(IngestSummary {
                subject: ds.subject_id.clone(),
                eligible: Vec::new(),
                label_histogram: ds.label_histogram.clone(),
                retained_per_class: 0,
                warnings: Vec::new(),
                excluded: Some(e.to_string()),
            }),
        }
    }
    if cfg.wants(Format::Json) {
        out.json("ingest/curation.json", "subjects", &summaries)?;
    }
    Ok(())
}

fn actual_name(e: Option<Emotion>) -> String {
    e.map_or_else(|| "unlabeled".to_string(), |e| e.to_string())
}

fn curated_csv(ds: &SubjectDataset, schema: &FeatureSchema) -> String {
    let mut s = String::from("subject,clip,frame,label");
    for n in schema.feature_names() {
        s.push(',');
        s.push_str(&n);
    }
    s.push('\n');
    for f in &ds.frames {
        let _ = write!(s, "{},{},{},{}", f.subject_id, f.clip_id, f.frame_index, f.label);
        for v in f.features.as_slice() {
            let _ = write!(s, ",{v:?}");
        }
        s.push('\n');
    }
    s
}

fn samples(ds: &SubjectDataset, classes: &[Emotion]) -> Samples {
    let (x, y) = ds.all_samples(classes);
    Samples::new(x, y)
}

/// Training portion of a subject plan: the temporal train split, or every
/// curated frame in nested mode.
fn training_part(plan: &SubjectPlan, mode: SplitMode) -> SubjectDataset {
    match mode {
        SplitMode::TemporalHoldout => plan.curated.subset(&plan.train),
        SplitMode::NestedCv => plan.curated.clone(),
    }
}

/// Grid-searches (for grids with several entries) and refits on `train`.
fn fit_on(
    cfg: &RunConfig,
    family: Family,
    train: &Samples,
    classes: &[Emotion],
    seed: u64,
) -> Result<(TrainedClassifier, Option<GridSearch>), CliError> {
    let configs = cfg.grid.configs(family);
    let search = if configs.len() > 1 {
        Some(grid_search(&configs, train, classes, cfg.split.inner_folds, cfg.split.stratified, seed)?)
    } else {
        None
    };
    let chosen = search.as_ref().map_or(&configs[0], |s| s.chosen()).clone();
    let model = TrainedClassifier::fit(&chosen, &train.x, &train.y, classes, seed::derive(seed, "refit"))?;
    Ok((model, search))
}

#[derive(Serialize)]
struct TrainOutcome<'a> {
    subject: &'a str,
    family: Family,
    classes: &'a [Emotion],
    mode: SplitMode,
    chosen: emopers::classifiers::ModelConfig,
    search: Option<GridSearch>,
    report: &'a EvalReport,
}

pub fn train(cfg: &RunConfig, out: &Output, subject: &str, family: Family) -> Result<(), CliError> {
    let schema = resolve_schema(cfg)?;
    let data = load_datasets(cfg, &schema)?;
    let exp = cfg.experiment();
    let plan = plan_subject(&exp, &data, subject)?;
    let classes = &plan.classes;
    let model_seed = seed::derive(exp.subject_seed(subject), &format!("model/{family}"));
    let configs = cfg.grid.configs(family);
    let (model, report, chosen, search) = match cfg.split.mode {
        SplitMode::TemporalHoldout => {
            let train = samples(&plan.curated.subset(&plan.train), classes);
            let test = samples(&plan.curated.subset(&plan.test), classes);
            let r = holdout_eval(&configs, &train, &test, classes, cfg.split.inner_folds, cfg.split.stratified, model_seed)?;
            (r.model, r.report, r.chosen, r.search)
        }
        SplitMode::NestedCv => {
            let all = samples(&plan.curated, classes);
            let report = nested_cv(&configs, &all, classes, &CvPlan::from(&cfg.split), model_seed)?;
            let (model, search) = fit_on(cfg, family, &all, classes, model_seed)?;
            let chosen = search.as_ref().map_or(&configs[0], |s| s.chosen()).clone();
            (model, report, chosen, search)
        }
    };
    let stem = format!("{subject}_{}", family.as_str());
    out.json(&format!("train/{stem}_model.json"), "model", &model)?;
    if cfg.wants(Format::Json) {
        let outcome =
            TrainOutcome { subject, family, classes, mode: cfg.split.mode, chosen, search, report: &report };
        out.json(&format!("train/{stem}_report.json"), "train", &outcome)?;
    }
    if cfg.wants(Format::Csv) {
        out.csv(&format!("train/{stem}_roc.csv"), &report.roc_csv())?;
        let mut cm = String::from("true\\predicted");
        for c in classes {
            let _ = write!(cm, ",{c}");
        }
        cm.push('\n');
        for (c, row) in classes.iter().zip(&report.confusion.counts) {
            let _ = write!(cm, "{c}");
            for v in row {
                let _ = write!(cm, ",{v}");
            }
            cm.push('\n');
        }
        out.csv(&format!("train/{stem}_confusion.csv"), &cm)?;
    }
    if cfg.wants(Format::Svg) {
        let curves: Vec<(String, Vec<(f64, f64)>)> = report
            .roc
            .iter()
            .map(|c| (c.emotion.to_string(), c.points.iter().map(|p| (p.fpr, p.tpr)).collect()))
            .collect();
        let title = format!("ROC, {subject}, {family}");
        out.svg(&format!("train/{stem}_roc.svg"), &svg::roc_plot(&title, &curves, &out.provenance.line()))?;
    }
    Ok(())
}

pub fn compare(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let schema = resolve_schema(cfg)?;
    let data = load_datasets(cfg, &schema)?;
    let report = run_experiment(&cfg.experiment(), &data)?;
    let failures = failure_analysis(&report, &data)?;
    if cfg.wants(Format::Json) {
        // Full ROC curves belong to `train`; here they would dominate the file.
        let mut slim = report.clone();
        for row in &mut slim.rows {
            for cell in &mut row.cells {
                for r in [&mut cell.personalized.report, &mut cell.generic.report].into_iter().flatten() {
                    r.roc.clear();
                }
            }
        }
        out.json("compare/comparison.json", "comparison", &slim)?;
        out.json("compare/failure_analysis.json", "failure_analysis", &failures)?;
    }
    if cfg.wants(Format::Md) {
        let mut md = report.to_markdown();
        md.push_str("\n| Subject | Personalized silhouette | Generic silhouette | Generic won | Flagged |\n|---|---:|---:|---|---|\n");
        for r in &failures.rows {
            let _ = writeln!(
                md,
                "| {} | {:.4} | {:.4} | {} | {} |",
                r.subject, r.personalized_silhouette, r.generic_silhouette, r.generic_won, r.flagged
            );
        }
        out.markdown("compare/comparison.md", &md)?;
    }
    if cfg.wants(Format::Csv) {
        let mut csv = String::from("subject,family,personalized_f1,generic_f1,personalized_auc,generic_auc,personalized_wins\n");
        for row in &report.rows {
            for c in &row.cells {
                let auc = |a: Option<f64>| a.map_or(String::new(), |v| format!("{v:?}"));
                let _ = writeln!(
                    csv,
                    "{},{},{:?},{:?},{},{},{}",
                    row.subject,
                    c.family,
                    c.personalized.macro_f1,
                    c.generic.macro_f1,
                    auc(c.personalized.macro_auc),
                    auc(c.generic.macro_auc),
                    c.personalized_wins
                );
            }
        }
        out.csv("compare/comparison.csv", &csv)?;
    }
    Ok(())
}

pub fn importance(cfg: &RunConfig, out: &Output, subject: Option<&str>) -> Result<(), CliError> {
    let schema = resolve_schema(cfg)?;
    let names = schema.feature_names();
    let data = load_datasets(cfg, &schema)?;
    let exp = cfg.experiment();
    let subjects = match subject {
        Some(s) => vec![s.to_string()],
        None => protocol::selected_subjects(&exp, &data)?,
    };
    let mut all = BTreeMap::new();
    for s in &subjects {
        let plan = plan_subject(&exp, &data, s)?;
        let train = samples(&training_part(&plan, cfg.split.mode), &plan.classes);
        let model_seed = seed::derive(exp.subject_seed(s), "model/random_forest");
        let (model, _) = fit_on(cfg, Family::RandomForest, &train, &plan.classes, model_seed)?;
        let Model::RandomForest(forest) = &model.model else { unreachable!("forest grid yields forests") };
        let imp = forest.importances()?.normalized;
        let ranked = rank_features(&imp, &names);
        if cfg.wants(Format::Csv) {
            let mut csv = String::from("rank,feature,importance\n");
            for f in &ranked {
                let _ = writeln!(csv, "{},{},{:?}", f.rank, f.name, f.importance);
            }
            out.csv(&format!("importance/{s}.csv"), &csv)?;
        }
        if cfg.wants(Format::Svg) {
            let labels: Vec<String> = ranked.iter().map(|f| f.name.clone()).collect();
            let values: Vec<f64> = ranked.iter().map(|f| f.importance).collect();
            let doc = svg::bar_chart(&format!("Impurity importance, {s}"), &labels, &values, &out.provenance.line());
            out.svg(&format!("importance/{s}.svg"), &doc)?;
        }
        all.insert(s.clone(), imp);
    }
    if cfg.wants(Format::Json) {
        let cmp = compare_importances(&all, &names, 10)?;
        out.json("importance/comparison.json", "importance", &cmp)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct PcaSummary {
    target: String,
    classes: Vec<Emotion>,
    n_points: usize,
    eigenvalues: Vec<f64>,
    explained_variance_ratio: Vec<f64>,
    silhouette: f64,
    warnings: Vec<emopers::analysis::AnalysisWarning>,
}

pub fn pca(cfg: &RunConfig, out: &Output, subject: Option<&str>, pooled: bool) -> Result<(), CliError> {
    let schema = resolve_schema(cfg)?;
    let names = schema.feature_names();
    let data = load_datasets(cfg, &schema)?;
    let exp = cfg.experiment();
    let (target, ds, classes) = if pooled {
        let mut frames = Vec::new();
        let mut classes = std::collections::BTreeSet::new();
        for s in protocol::selected_subjects(&exp, &data)? {
            let plan = plan_subject(&exp, &data, &s)?;
            classes.extend(plan.classes.iter().copied());
            frames.extend(plan.curated.frames);
        }
        let ds = SubjectDataset::new("pooled", frames)?;
        ("pooled".to_string(), ds, classes.into_iter().collect::<Vec<_>>())
    } else {
        let s = subject.ok_or_else(|| CliError::config("invalid_arguments", "pca needs --subject or --pooled"))?;
        let plan = plan_subject(&exp, &data, s)?;
        (s.to_string(), plan.curated, plan.classes)
    };
    let (x, y) = ds.all_samples(&classes);
    let z = Standardizer::fit(&x).transform(&x);
    let fit = pca_fit(&z, 2)?;
    let proj = fit.model.project(&z);
    let sil = dataset_silhouette(&ds, &classes, seed::derive(cfg.seed, &format!("silhouette/{target}")))?;
    if cfg.wants(Format::Csv) {
        let mut csv = String::from("subject,clip,frame,label,pc1,pc2\n");
        for (f, p) in ds.frames.iter().zip(proj.iter_rows()) {
            let _ = writeln!(csv, "{},{},{},{},{:?},{:?}", f.subject_id, f.clip_id, f.frame_index, f.label, p[0], p[1]);
        }
        out.csv(&format!("pca/{target}_projection.csv"), &csv)?;
    }
    let corr = correlation_matrix(&x, CorrelationMethod::Pearson)?;
    if cfg.wants(Format::Csv) {
        out.csv(&format!("pca/{target}_correlation.csv"), &corr.to_csv(&names))?;
    }
    if cfg.wants(Format::Svg) {
        let points: Vec<[f64; 2]> = proj.iter_rows().map(|p| [p[0], p[1]]).collect();
        let class_names: Vec<String> = classes.iter().map(|c| c.to_string()).collect();
        let line = out.provenance.line();
        out.svg(&format!("pca/{target}_scatter.svg"), &svg::scatter(&format!("PCA, {target}"), &points, &y, &class_names, &line))?;
        out.svg(
            &format!("pca/{target}_correlation.svg"),
            &svg::heatmap(&format!("Feature correlation, {target}"), &names, &corr.values, &line),
        )?;
    }
    if cfg.wants(Format::Json) {
        let summary = PcaSummary {
            target: target.clone(),
            classes,
            n_points: x.rows(),
            eigenvalues: fit.model.eigenvalues.clone(),
            explained_variance_ratio: fit.model.explained_variance_ratio.clone(),
            silhouette: sil,
            warnings: fit.warnings,
        };
        out.json(&format!("pca/{target}_separability.json"), "separability", &summary)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct Artifact {
    path: String,
    bytes: u64,
    sha256: String,
}

#[derive(Serialize)]
struct RunReport<'a> {
    config: &'a RunConfig,
    schema_fingerprint: String,
    artifacts: Vec<Artifact>,
    comparison_summary: Option<serde_json::Value>,
}

pub fn report(cfg: &RunConfig, out: &Output) -> Result<(), CliError> {
    let schema = resolve_schema(cfg)?;
    let mut artifacts = Vec::new();
    for rel in list_files(&out.root)? {
        if rel.starts_with("report") {
            continue;
        }
        let path = out.root.join(&rel);
        let bytes = std::fs::read(&path).map_err(|e| io(&path, e))?;
        artifacts.push(Artifact {
            path: rel.components().map(|c| c.as_os_str().to_string_lossy()).collect::<Vec<_>>().join("/"),
            bytes: bytes.len() as u64,
            sha256: emopers::fingerprint(&bytes),
        });
    }
    let comparison_summary = std::fs::read_to_string(out.path("compare/comparison.json"))
        .ok()
        .and_then(|t| serde_json::from_str::<serde_json::Value>(&t).ok())
        .and_then(|v| v.get("comparison").and_then(|c| c.get("summary")).cloned());
    let mut portable = cfg.clone();
    portable.data_dir = None;
    portable.schema = None;
    portable.out_dir = Default::default();
    portable.threads = None;
    let rr = RunReport { config: &portable, schema_fingerprint: schema.fingerprint(), artifacts, comparison_summary };
    if cfg.wants(Format::Json) {
        out.json("report/run_report.json", "report", &rr)?;
    }
    if cfg.wants(Format::Md) {
        let mut md = format!(
            "# Run report\n\n- config hash: `{}`\n- master seed: `{}`\n- schema fingerprint: `{}`\n\n| Artifact | Bytes | SHA-256 |\n|---|---:|---|\n",
            out.provenance.config_hash, cfg.seed, rr.schema_fingerprint
        );
        for a in &rr.artifacts {
            let _ = writeln!(md, "| {} | {} | `{}` |", a.path, a.bytes, a.sha256);
        }
        out.markdown("report/run_report.md", &md)?;
    }
    Ok(())
}
