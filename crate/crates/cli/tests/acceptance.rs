//! Acceptance suite: one PASS/FAIL line per criterion. Runs as a plain
//! binary (`harness = false`) and exits non-zero when any criterion fails.

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use emopers::analysis::{pca_fit, AnalysisWarning};
use emopers::classifiers::{
    Classifier, Family, ForestModel, ForestParams, HyperGrid, KnnModel, KnnParams, MlpModel, ModelConfig, Node,
};
use emopers::curation::{balanced_subsample, CurationPolicy, LabeledFrame, SubjectDataset};
use emopers::evaluation::{auc_binary, f1_macro, holdout_eval, make_folds, ConfusionMatrix, Samples};
use emopers::ingest::FeatureVector;
use emopers::protocol::{failure_analysis, plan_subject, run_experiment, ComparisonReport, ExperimentConfig};
use emopers::synthgen::{generate, paper_like_cohort, LOW_SEPARABILITY};
use emopers::{seed, Emotion, Matrix};
use rand::Rng;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond { Ok(()) } else { Err(msg()) }
}

fn random_matrix(rng: &mut impl Rng, n: usize, d: usize, integer: bool) -> Matrix {
    let data = (0..n * d)
        .map(|_| if integer { f64::from(rng.random_range(-3i32..=3)) } else { rng.random_range(-1.0..1.0) })
        .collect();
    Matrix::from_vec(n, d, data)
}

// 1 -------------------------------------------------------------------------

/// F1 in percent, columns KNN, RF, DNN; personalized then generic.
const REPORTED_F1: [(&str, [f64; 6]); 10] = [
    ("22", [93.1, 95.3, 88.2, 86.9, 91.4, 76.7]),
    ("25", [89.3, 91.5, 83.4, 88.0, 92.0, 81.2]),
    ("28", [96.6, 97.8, 93.7, 88.5, 92.7, 82.9]),
    ("29", [83.6, 86.3, 78.6, 90.0, 92.0, 84.4]),
    ("32", [93.4, 95.1, 91.8, 92.6, 95.0, 88.0]),
    ("39", [87.2, 90.0, 83.8, 92.1, 94.0, 87.0]),
    ("40", [99.6, 99.9, 97.2, 88.3, 91.0, 78.4]),
    ("42", [93.2, 94.7, 89.9, 87.2, 91.6, 78.0]),
    ("45", [82.5, 86.3, 73.3, 82.2, 87.1, 63.9]),
    ("48", [86.3, 89.7, 84.1, 89.7, 91.0, 83.7]),
];
const PERSONALIZED_MEANS: [f64; 3] = [90.48, 92.66, 86.40];
const GENERIC_MEANS: [f64; 3] = [88.55, 91.78, 80.42];

fn reported_table_arithmetic() -> Check {
    let rows: Vec<(&str, Vec<(f64, f64)>)> = REPORTED_F1
        .iter()
        .map(|(s, v)| (*s, (0..3).map(|k| (v[k] / 100.0, v[k + 3] / 100.0)).collect()))
        .collect();
    let report = ComparisonReport::from_f1(&Family::ALL, &rows).map_err(|e| e.to_string())?;
    let s = &report.summary;
    for k in 0..3 {
        let (p, g) = (100.0 * s.personalized_mean[k], 100.0 * s.generic_mean[k]);
        ensure((p - PERSONALIZED_MEANS[k]).abs() <= 0.005, || format!("personalized {k}: {p}"))?;
        ensure((g - GENERIC_MEANS[k]).abs() <= 0.005, || format!("generic {k}: {g}"))?;
    }
    ensure(s.overall_wins == 7, || format!("{} personalized wins", s.overall_wins))?;
    let fmt = |v: &[f64]| v.iter().map(|x| format!("{:.2}", 100.0 * x)).collect::<Vec<_>>().join("/");
    Ok(format!(
        "personalized {} generic {}, {} of 10 personalized wins",
        fmt(&s.personalized_mean),
        fmt(&s.generic_mean),
        s.overall_wins
    ))
}

// 2, 3 ----------------------------------------------------------------------

const SEEDS: [u64; 5] = [1, 2, 3, 4, 5];

/// The forest family alone, one configuration, on the built-in cohort.
fn directional_config(seed: u64) -> ExperimentConfig {
    let forest = ModelConfig::RandomForest(ForestParams {
        n_trees: 50,
        max_depth: Some(16),
        min_samples_leaf: 1,
        features_per_split: None,
        bootstrap: true,
    });
    ExperimentConfig { families: vec![Family::RandomForest], grid: HyperGrid::single(&forest), seed, ..ExperimentConfig::default() }
}

struct SeedRun {
    seed: u64,
    wins: usize,
    low: Vec<(String, f64, bool, bool)>,
}

fn run_seed(seed: u64) -> Result<SeedRun, String> {
    let data = generate(&paper_like_cohort(seed)).map_err(|e| e.to_string())?;
    let report = run_experiment(&directional_config(seed), &data).map_err(|e| e.to_string())?;
    let failures = failure_analysis(&report, &data).map_err(|e| e.to_string())?;
    let low = LOW_SEPARABILITY
        .iter()
        .map(|&i| {
            let r = &failures.rows[i];
            (r.subject.clone(), r.personalized_silhouette, r.flagged, r.generic_won)
        })
        .collect();
    Ok(SeedRun { seed, wins: report.summary.overall_wins, low })
}

fn directional(runs: &[SeedRun]) -> Check {
    let good = runs.iter().filter(|r| r.wins >= 7).count();
    let detail = runs.iter().map(|r| format!("seed {}: {}/10", r.seed, r.wins)).collect::<Vec<_>>().join(", ");
    ensure(good >= 4, || format!("only {good} of 5 seeds reach 7 wins ({detail})"))?;
    Ok(detail)
}

fn failure_regime(runs: &[SeedRun]) -> Check {
    let mut notes = Vec::new();
    for r in runs {
        for (subject, sil, flagged, _) in &r.low {
            ensure(*sil < 0.1, || format!("seed {} {subject}: silhouette {sil:.4}", r.seed))?;
            ensure(*flagged, || format!("seed {} {subject}: not flagged", r.seed))?;
        }
        ensure(r.low.iter().any(|l| l.3), || format!("seed {}: no generic win among planted subjects", r.seed))?;
        let sils = r.low.iter().map(|l| format!("{} {:.3}", l.0, l.1)).collect::<Vec<_>>().join(" ");
        notes.push(format!("seed {}: {sils}", r.seed));
    }
    Ok(format!("flagged at every seed; {}", notes.join("; ")))
}

// 4 -------------------------------------------------------------------------

fn brute_force_knn(x: &Matrix, y: &[usize], n_classes: usize, k: usize, q: &[f64]) -> usize {
    let mut d: Vec<(f64, usize)> = (0..x.rows())
        .map(|i| (x.row(i).iter().zip(q).map(|(a, b)| (a - b).powi(2)).sum::<f64>(), i))
        .collect();
    d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut votes = vec![0usize; n_classes];
    for &(_, i) in &d[..k] {
        votes[y[i]] += 1;
    }
    let top = *votes.iter().max().unwrap();
    votes.iter().position(|&v| v == top).unwrap()
}

fn knn_oracle() -> Check {
    let mut rng = seed::rng(4);
    let mut queries = 0;
    for instance in 0..200 {
        let n = rng.random_range(5..=500);
        let d = rng.random_range(1..=8);
        let n_classes = rng.random_range(2..=5);
        let k = [1, 3, 5][instance % 3];
        let integer = instance % 4 == 0;
        let x = random_matrix(&mut rng, n, d, integer);
        let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..n_classes)).collect();
        let model = KnnModel::fit(&x, &y, n_classes, k).map_err(|e| e.to_string())?;
        for q in random_matrix(&mut rng, 10, d, integer).iter_rows() {
            let (got, want) = (model.predict_label(q), brute_force_knn(&x, &y, n_classes, k, q));
            ensure(got == want, || format!("instance {instance}: {got} vs {want}"))?;
            queries += 1;
        }
    }
    Ok(format!("200 instances, {queries} queries, all identical"))
}

// 5 -------------------------------------------------------------------------

fn mlp_gradient() -> Check {
    let eps = 1e-5;
    let mut rng = seed::rng(5);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (d, h, c, n) = (rng.random_range(2..=6), rng.random_range(3..=8), rng.random_range(2..=4), rng.random_range(4..=12));
        let x = random_matrix(&mut rng, n, d, false);
        let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..c)).collect();
        let init = MlpModel::init(d, h, c, &mut rng);
        let p: Vec<f64> = init.parameters().iter().map(|v| v + rng.random_range(-0.1..0.1)).collect();
        let model = init.with_parameters(&p);
        let analytic = model.loss_and_gradient(&x, &y).1.flatten();
        for (i, a) in analytic.iter().enumerate() {
            let (mut up, mut down) = (p.clone(), p.clone());
            up[i] += eps;
            down[i] -= eps;
            let num = (model.with_parameters(&up).loss(&x, &y) - model.with_parameters(&down).loss(&x, &y)) / (2.0 * eps);
            worst = worst.max((a - num).abs() / (a.abs() + num.abs()).max(1e-8));
        }
    }
    ensure(worst < 1e-4, || format!("max relative error {worst:.3e}"))?;
    Ok(format!("max relative error {worst:.2e} over 20 instances"))
}

// 6 -------------------------------------------------------------------------

fn gini_weighted(labels: impl Iterator<Item = usize>, n_classes: usize) -> f64 {
    let mut counts = vec![0.0; n_classes];
    let mut n = 0.0;
    for l in labels {
        counts[l] += 1.0;
        n += 1.0;
    }
    if n == 0.0 { 0.0 } else { n - counts.iter().map(|c| c * c).sum::<f64>() / n }
}

/// Lowest children impurity over every feature and midpoint, with the
/// features attaining it.
fn exhaustive_split(x: &Matrix, y: &[usize], n_classes: usize) -> (f64, BTreeSet<usize>) {
    let mut best = (f64::INFINITY, BTreeSet::new());
    for f in 0..x.cols() {
        let mut v = x.column(f);
        v.sort_by(f64::total_cmp);
        v.dedup();
        for w in v.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            let left = gini_weighted((0..x.rows()).filter(|&i| x.get(i, f) <= t).map(|i| y[i]), n_classes);
            let right = gini_weighted((0..x.rows()).filter(|&i| x.get(i, f) > t).map(|i| y[i]), n_classes);
            let s = left + right;
            if s < best.0 - 1e-12 {
                best = (s, BTreeSet::from([f]));
            } else if (s - best.0).abs() <= 1e-12 {
                best.1.insert(f);
            }
        }
    }
    best
}

fn forest_properties() -> Check {
    let mut rng = seed::rng(6);
    let mut max_dev = 0.0f64;
    for i in 0..10 {
        let x = random_matrix(&mut rng, 150, 6, false);
        let y: Vec<usize> = x.iter_rows().map(|r| usize::from(r[0] - r[2] > 0.1)).collect();
        let p = ForestParams { n_trees: 20, max_depth: Some(8), ..ForestParams::default() };
        let imp = ForestModel::fit(&x, &y, 2, &p, i).and_then(|m| m.importances()).map_err(|e| e.to_string())?;
        max_dev = max_dev.max((imp.normalized.iter().sum::<f64>() - 1.0).abs());
    }
    ensure(max_dev <= 1e-9, || format!("importance sum off by {max_dev:e}"))?;

    let mut lowest = f64::INFINITY;
    for instance in 0..20 {
        let n = rng.random_range(8..=20);
        let d = 4;
        let planted = instance % d;
        let mut rows: Vec<Vec<f64>> = random_matrix(&mut rng, n, d, false).iter_rows().map(<[f64]>::to_vec).collect();
        let y: Vec<usize> = (0..n).map(|i| i % 2).collect();
        for (r, &l) in rows.iter_mut().zip(&y) {
            r[planted] = if l == 1 { rng.random_range(1.0..2.0) } else { rng.random_range(-2.0..-1.0) };
        }
        let x = Matrix::from_rows(&rows, d);
        let (best, features) = exhaustive_split(&x, &y, 2);
        ensure(best == 0.0 && features.contains(&planted), || format!("instance {instance}: oracle disagrees"))?;
        let p = ForestParams { n_trees: 1, max_depth: None, min_samples_leaf: 1, features_per_split: Some(d), bootstrap: false };
        let model = ForestModel::fit(&x, &y, 2, &p, instance as u64).map_err(|e| e.to_string())?;
        let Node::Split { feature, .. } = &model.trees[0].nodes[0] else { return Err("root is a leaf".into()) };
        ensure(features.contains(feature), || format!("instance {instance}: root splits on {feature}"))?;
        if features.len() == 1 {
            let imp = model.importances().map_err(|e| e.to_string())?.normalized[planted];
            ensure(imp >= 0.99, || format!("instance {instance}: planted importance {imp}"))?;
            lowest = lowest.min(imp);
        }
    }
    Ok(format!("sums within {max_dev:.1e} of 1; planted feature importance >= {lowest:.4}"))
}

// 7 -------------------------------------------------------------------------

fn metric_oracles() -> Check {
    let f1 = f1_macro(&ConfusionMatrix::new(vec![vec![8, 2], vec![3, 7]]));
    ensure((f1 - 0.74937).abs() <= 1e-5, || format!("macro-F1 {f1}"))?;
    let auc = auc_binary(&[0.1, 0.4, 0.35, 0.8], &[false, false, true, true]);
    ensure(auc == Some(0.75), || format!("fixture AUC {auc:?}"))?;
    let flat = auc_binary(&[0.42; 6], &[true, false, true, false, false, true]);
    ensure(flat == Some(0.5), || format!("all-equal AUC {flat:?}"))?;
    Ok(format!("macro-F1 {f1:.5}, fixture AUC 0.75, all-equal AUC 0.5"))
}

// 8 -------------------------------------------------------------------------

fn leakage_and_splits() -> Check {
    let mut rng = seed::rng(8);
    for case in 0..50 {
        let n = rng.random_range(20..400);
        let y: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
        let stratified = case % 2 == 0;
        let folds = make_folds(&y, 3, 5, stratified, case).map_err(|e| e.to_string())?;
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        ensure(all == (0..n).collect::<Vec<_>>(), || format!("case {case}: folds do not partition"))?;
    }

    let data = generate(&paper_like_cohort(8)).map_err(|e| e.to_string())?;
    let cfg = ExperimentConfig::default();
    let mut clips = 0;
    for ds in &data {
        let plan = plan_subject(&cfg, &data, &ds.subject_id).map_err(|e| e.to_string())?;
        let mut last_train: BTreeMap<&str, u64> = BTreeMap::new();
        for &i in &plan.train {
            let f = &plan.curated.frames[i];
            let e = last_train.entry(&f.clip_id).or_insert(0);
            *e = (*e).max(f.frame_index);
        }
        for &i in &plan.test {
            let f = &plan.curated.frames[i];
            let m = last_train.get(f.clip_id.as_str()).copied();
            ensure(m.is_some_and(|m| m < f.frame_index), || format!("{} clip {}: test frame before train", ds.subject_id, f.clip_id))?;
        }
        clips += last_train.len();
    }

    let classes = [Emotion::Neutral, Emotion::Happiness];
    let train = Samples::new(random_matrix(&mut rng, 80, 4, false), (0..80).map(|i| i % 2).collect());
    let test = random_matrix(&mut rng, 20, 4, false);
    let test_y: Vec<usize> = (0..20).map(|i| i % 2).collect();
    let configs = [ModelConfig::Knn(KnnParams { k: 3 }), ModelConfig::Knn(KnnParams { k: 7 })];
    let base = holdout_eval(&configs, &train, &Samples::new(test.clone(), test_y.clone()), &classes, 5, true, 1)
        .map_err(|e| e.to_string())?;
    let shifted = Matrix::from_vec(20, 4, test.as_slice().iter().map(|v| 50.0 * v - 7.0).collect());
    let moved = holdout_eval(&configs, &train, &Samples::new(shifted, test_y), &classes, 5, true, 1).map_err(|e| e.to_string())?;
    ensure(base.model.standardizer == moved.model.standardizer, || "standardizer changed with test rows".into())?;
    ensure(base.chosen == moved.chosen, || "selection changed with test rows".into())?;
    Ok(format!("50 fold plans partition; {clips} clips train-before-test; standardizer unaffected by test rows"))
}

// 9 -------------------------------------------------------------------------

const CLI_CONFIG: &str = r#"{
  "seed": 99,
  "subjects": ["S01", "S03", "S04"],
  "grid": {
    "knn": {"k": [5]},
    "random_forest": {"trees": [10], "max_depth": [8]},
    "mlp": {"hidden": [8], "learning_rate": [0.01], "epochs": [3]}
  }
}"#;

fn emopers(config: &Path, out: &Path, threads: usize, args: &[&str]) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_emopers"))
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .arg("--threads")
        .arg(threads.to_string())
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(status.status.success(), || format!("{args:?}: {}", String::from_utf8_lossy(&status.stderr)))
}

fn files(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().display().to_string(), std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let config = tmp.path().join("config.json");
    std::fs::write(&config, CLI_CONFIG).map_err(|e| e.to_string())?;
    let commands: [&[&str]; 7] = [
        &["synth"],
        &["ingest"],
        &["compare"],
        &["train", "--subject", "S01", "--family", "mlp"],
        &["importance", "--subject", "S04"],
        &["pca", "--subject", "S03"],
        &["report"],
    ];
    let runs = [(1usize, "a"), (1, "b"), (4, "c")];
    for (threads, name) in runs {
        let out = tmp.path().join(name);
        for args in commands {
            emopers(&config, &out, threads, args)?;
        }
    }
    let reference = files(&tmp.path().join("a"));
    let compared = reference.keys().filter(|k| k.ends_with(".json") || k.ends_with(".csv")).count();
    for (_, name) in &runs[1..] {
        let other = files(&tmp.path().join(name));
        ensure(other.keys().eq(reference.keys()), || format!("run {name} wrote a different file set"))?;
        for (path, bytes) in &reference {
            ensure(other[path] == *bytes, || format!("{path} differs in run {name}"))?;
        }
    }
    Ok(format!("{} commands, {compared} JSON/CSV files byte-identical across 3 runs (threads 1, 1, 4)", commands.len()))
}

// 10 ------------------------------------------------------------------------

fn dataset(counts: &[(Emotion, usize)]) -> SubjectDataset {
    let frames = counts
        .iter()
        .flat_map(|&(e, n)| {
            (0..n).map(move |t| LabeledFrame {
                subject_id: "s".into(),
                clip_id: e.typical_stimulus().to_string(),
                frame_index: t as u64,
                label: e,
                features: FeatureVector(vec![t as f64]),
            })
        })
        .collect();
    SubjectDataset::new("s", frames).unwrap()
}

fn balanced_subsampling() -> Check {
    let emotions: BTreeSet<Emotion> = [Emotion::Neutral, Emotion::Happiness].into();
    let policy = CurationPolicy { seed: 10, ..CurationPolicy::default() };
    let full = dataset(&[(Emotion::Neutral, 2100), (Emotion::Happiness, 1750), (Emotion::Sadness, 900)]);
    let a = balanced_subsample(&full, &emotions, &policy).map_err(|e| e.to_string())?;
    let counts: Vec<usize> = a.dataset.label_histogram.values().copied().collect();
    ensure(counts == vec![1600, 1600] && a.warnings.is_empty(), || format!("available case kept {counts:?}"))?;
    let again = balanced_subsample(&full, &emotions, &policy).map_err(|e| e.to_string())?;
    ensure(again.dataset == a.dataset, || "same seed drew a different subsample".into())?;
    let other = balanced_subsample(&full, &emotions, &CurationPolicy { seed: 11, ..policy.clone() }).map_err(|e| e.to_string())?;
    ensure(other.dataset != a.dataset, || "a new seed drew the same subsample".into())?;

    let short = dataset(&[(Emotion::Neutral, 2100), (Emotion::Happiness, 1234)]);
    let c = balanced_subsample(&short, &emotions, &policy).map_err(|e| e.to_string())?;
    let counts: Vec<usize> = c.dataset.label_histogram.values().copied().collect();
    ensure(counts == vec![1234, 1234], || format!("short case kept {counts:?}"))?;
    ensure(c.warnings.len() == 1, || format!("{} warnings", c.warnings.len()))?;
    Ok("1600 per class when available; 1234 per class with 1 warning otherwise; seeded".into())
}

// 11 ------------------------------------------------------------------------

fn pca_properties() -> Check {
    let mut rng = seed::rng(11);
    let mut worst_rec = 0.0f64;
    let mut worst_trace = 0.0f64;
    for _ in 0..10 {
        let (n, d) = (rng.random_range(20..120), rng.random_range(2..9));
        let x = random_matrix(&mut rng, n, d, false);
        let fit = pca_fit(&x, d).map_err(|e| e.to_string())?.model;
        let back = fit.reconstruct(&fit.project(&x));
        for (a, b) in x.as_slice().iter().zip(back.as_slice()) {
            worst_rec = worst_rec.max((a - b).abs());
        }
        ensure(fit.eigenvalues.windows(2).all(|w| w[0] >= w[1]), || "eigenvalues not descending".into())?;
        worst_trace = worst_trace.max((fit.eigenvalues.iter().sum::<f64>() - fit.total_variance).abs());
    }
    ensure(worst_rec < 1e-8, || format!("reconstruction error {worst_rec:e}"))?;
    ensure(worst_trace < 1e-8, || format!("eigenvalue sum off by {worst_trace:e}"))?;

    let dir = [3.0, -1.0, 2.0, 0.5];
    let norm = dir.iter().map(|v: &f64| v * v).sum::<f64>().sqrt();
    let u: Vec<f64> = dir.iter().map(|v| v / norm).collect();
    let rows: Vec<Vec<f64>> = (0..40)
        .map(|_| {
            let t: f64 = rng.random_range(-5.0..5.0);
            u.iter().enumerate().map(|(j, c)| 1.0 + j as f64 + t * c).collect()
        })
        .collect();
    let fit = pca_fit(&Matrix::from_rows(&rows, 4), 2).map_err(|e| e.to_string())?;
    let dot: f64 = fit.model.components[0].iter().zip(&u).map(|(a, b)| a * b).sum();
    ensure(dot.abs() > 1.0 - 1e-9, || format!("first component cosine {dot}"))?;
    ensure(
        fit.warnings.iter().any(|w| matches!(w, AnalysisWarning::RankDeficient { positive: 1, .. })),
        || "rank-1 fixture raised no rank warning".into(),
    )?;
    Ok(format!(
        "reconstruction {worst_rec:.1e}, eigenvalue sum {worst_trace:.1e}, rank-1 cosine {:.12}",
        dot.abs()
    ))
}

// ---------------------------------------------------------------------------

fn run(id: u32, name: &str, limit: Option<Duration>, f: impl FnOnce() -> Check) -> bool {
    let start = Instant::now();
    let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default())
    });
    let took = start.elapsed();
    let result = match (result, limit) {
        (Ok(_), Some(l)) if took > l => Err(format!("took {took:.1?}, limit {l:?}")),
        (r, _) => r,
    };
    let (tag, detail) = match &result {
        Ok(d) => ("PASS", d.clone()),
        Err(e) => ("FAIL", e.clone()),
    };
    println!("{tag} [{id:>2}] {name}: {detail} ({:.2}s)", took.as_secs_f64());
    result.is_ok()
}

fn main() {
    let secs = Duration::from_secs;
    let mut ok = Vec::new();
    ok.push(run(1, "reported table arithmetic", Some(secs(1)), reported_table_arithmetic));

    let start = Instant::now();
    let runs: Result<Vec<SeedRun>, String> = SEEDS.iter().map(|&s| run_seed(s)).collect();
    let spent = start.elapsed();
    match runs {
        Ok(runs) => {
            ok.push(run(2, "synthetic directional reproduction", None, || {
                let d = directional(&runs)?;
                ensure(spent < secs(300), || format!("5 seeds took {spent:.1?}"))?;
                Ok(format!("{d}; {:.1}s for 5 seeds", spent.as_secs_f64()))
            }));
            ok.push(run(3, "failure regime", None, || failure_regime(&runs)));
        }
        Err(e) => {
            ok.push(run(2, "synthetic directional reproduction", None, || Err(e.clone())));
            ok.push(run(3, "failure regime", None, || Err(e.clone())));
        }
    }
    ok.push(run(4, "KNN oracle equivalence", Some(secs(30)), knn_oracle));
    ok.push(run(5, "MLP gradient check", None, mlp_gradient));
    ok.push(run(6, "forest properties", None, forest_properties));
    ok.push(run(7, "metric oracles", None, metric_oracles));
    ok.push(run(8, "leakage and split invariants", None, leakage_and_splits));
    ok.push(run(9, "CLI determinism", None, determinism));
    ok.push(run(10, "balanced subsampling", None, balanced_subsampling));
    ok.push(run(11, "PCA properties", None, pca_properties));

    let passed = ok.iter().filter(|&&b| b).count();
    println!("acceptance: {passed}/{} criteria passed", ok.len());
    if passed != ok.len() {
        std::process::exit(1);
    }
}
