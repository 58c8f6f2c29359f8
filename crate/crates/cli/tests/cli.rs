use std::path::Path;
use std::process::{Command, Output};

const SMALL: &str = r#"{
  "seed": 4,
  "grid": {
    "knn": {"k": [5]},
    "random_forest": {"trees": [8], "max_depth": [6]},
    "mlp": {"hidden": [8], "learning_rate": [0.01], "epochs": [2]}
  }
}"#;

fn emopers(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_emopers")).current_dir(dir).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn error_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|e| panic!("stderr is not JSON ({e}): {text}"))
}

#[test]
fn missing_schema_file_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", r#"{"schema": "no/such/schema.json"}"#);
    let out = emopers(tmp.path(), &["--config", &cfg, "ingest"]);
    assert_eq!(out.status.code(), Some(2));
    let err = error_json(&out);
    assert_eq!(err["error"]["kind"], "missing_schema");
    assert!(err["error"]["message"].as_str().unwrap().contains("MissingColumn"));
}

#[test]
fn unknown_config_field_and_bad_flag_exit_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", r#"{"sed": 1}"#);
    assert_eq!(emopers(tmp.path(), &["--config", &cfg, "compare"]).status.code(), Some(2));
    let out = emopers(tmp.path(), &["--split", "sideways", "compare"]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(error_json(&out)["error"]["code"], 2);
    assert_eq!(emopers(tmp.path(), &["--threads", "0", "compare"]).status.code(), Some(2));
}

#[test]
fn missing_data_exits_3() {
    let tmp = tempfile::tempdir().unwrap();
    let out = emopers(tmp.path(), &["--out", "nowhere", "compare"]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(error_json(&out)["error"]["kind"], "missing_data");
}

#[test]
fn diverging_mlp_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", r#"{"grid": {"mlp": {"hidden": [8], "learning_rate": [1e6], "epochs": [2]}}}"#);
    assert!(emopers(tmp.path(), &["--config", &cfg, "synth"]).status.success());
    let out = emopers(tmp.path(), &["--config", &cfg, "train", "--subject", "S02", "--family", "mlp"]);
    assert_eq!(out.status.code(), Some(4));
    assert_eq!(error_json(&out)["error"]["kind"], "non_finite_loss");
}

#[test]
fn help_succeeds() {
    let tmp = tempfile::tempdir().unwrap();
    let out = emopers(tmp.path(), &["--help"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("compare"));
}

#[test]
fn synth_then_compare_writes_a_ten_row_table() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", SMALL);
    assert!(emopers(tmp.path(), &["--config", &cfg, "synth"]).status.success());
    let out = emopers(tmp.path(), &["--config", &cfg, "--format", "md", "--format", "json", "compare"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let md = std::fs::read_to_string(tmp.path().join("out/compare/comparison.md")).unwrap();
    let table: Vec<&str> = md.lines().skip_while(|l| !l.starts_with("| Subject")).take_while(|l| l.starts_with('|')).collect();
    let rows: Vec<&str> = table.iter().copied().filter(|l| l.starts_with("| S") && !l.starts_with("| Subject")).collect();
    assert_eq!(rows.len(), 10, "{md}");
    assert!(table.last().unwrap().starts_with("| Mean |"));
    let header = md.lines().find(|l| l.starts_with("| Subject | KNN")).unwrap();
    assert_eq!(header.matches("personalized").count(), 3);
    assert_eq!(header.matches("generic").count(), 3);
    assert!(!tmp.path().join("out/compare/comparison.csv").exists());

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("out/compare/comparison.json")).unwrap()).unwrap();
    assert_eq!(json["comparison"]["rows"].as_array().unwrap().len(), 10);
    assert_eq!(json["provenance"]["seed"], 4);
    let hash = json["provenance"]["config_hash"].as_str().unwrap();
    assert!(md.contains(hash));
}

#[test]
fn every_artifact_names_the_config_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", &SMALL.replace("\"seed\": 4,", "\"seed\": 4, \"subjects\": [\"S02\"],"));
    for args in [&["synth"][..], &["train", "--subject", "S02", "--family", "knn"], &["pca", "--pooled"], &["importance"]] {
        let out = emopers(tmp.path(), &[&["--config", cfg.as_str()][..], args].concat());
        assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
    let report = emopers(tmp.path(), &["--config", &cfg, "report"]);
    assert!(report.status.success());
    let run: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("out/report/run_report.json")).unwrap()).unwrap();
    let hash = run["provenance"]["config_hash"].as_str().unwrap().to_string();
    let artifacts = run["report"]["artifacts"].as_array().unwrap();
    assert!(artifacts.len() > 10);
    for a in artifacts {
        let path = tmp.path().join("out").join(a["path"].as_str().unwrap());
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains(&hash), "{} lacks the config hash", path.display());
    }
}

#[test]
fn synth_output_is_independent_of_threads() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "c.json", SMALL);
    for (t, dir) in [("1", "a"), ("3", "b")] {
        assert!(emopers(tmp.path(), &["--config", &cfg, "--threads", t, "--out", dir, "synth"]).status.success());
    }
    for name in ["S01.csv", "S07.csv", "schema.json"] {
        let a = std::fs::read(tmp.path().join("a/data").join(name)).unwrap();
        let b = std::fs::read(tmp.path().join("b/data").join(name)).unwrap();
        assert!(a == b, "{name} differs");
    }
}
