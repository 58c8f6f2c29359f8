//! Writing artifacts with embedded provenance.

use serde::Serialize;
use std::path::{Path, PathBuf};

use crate::error::{io, CliError};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub schema_fingerprint: Option<String>,
}

impl Provenance {
    /// One-line form used in CSV, Markdown and SVG comments.
    pub fn line(&self) -> String {
        let mut s = format!(
            "{} {} {} config_hash={} seed={}",
            self.tool, self.version, self.command, self.config_hash, self.seed
        );
        if let Some(f) = &self.schema_fingerprint {
            s.push_str(&format!(" schema={f}"));
        }
        s
    }
}

pub struct Output {
    pub root: PathBuf,
    pub provenance: Provenance,
}

impl Output {
    pub fn path(&self, rel: &str) -> PathBuf {
        self.root.join(rel)
    }

    fn write(&self, rel: &str, contents: &[u8]) -> Result<PathBuf, CliError> {
        let path = self.path(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        }
        std::fs::write(&path, contents).map_err(|e| io(&path, e))?;
        log::info!("wrote {}", path.display());
        Ok(path)
    }

    /// `{"provenance": ..., "<key>": value}`, pretty-printed.
    pub fn json<T: Serialize>(&self, rel: &str, key: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut map = serde_json::Map::new();
        map.insert("provenance".into(), serde_json::to_value(&self.provenance).expect("provenance serializes"));
        map.insert(key.into(), serde_json::to_value(value).expect("result serializes"));
        let mut text = serde_json::to_string_pretty(&serde_json::Value::Object(map)).expect("json");
        text.push('\n');
        self.write(rel, text.as_bytes())
    }

    /// CSV body prefixed by a `#` provenance line.
    pub fn csv(&self, rel: &str, body: &str) -> Result<PathBuf, CliError> {
        self.write(rel, format!("# {}\n{body}", self.provenance.line()).as_bytes())
    }

    pub fn markdown(&self, rel: &str, body: &str) -> Result<PathBuf, CliError> {
        self.write(rel, format!("<!-- {} -->\n\n{body}", self.provenance.line()).as_bytes())
    }

    /// SVG documents already carry the provenance comment.
    pub fn svg(&self, rel: &str, doc: &str) -> Result<PathBuf, CliError> {
        self.write(rel, doc.as_bytes())
    }
}

/// Files under `root`, relative, sorted.
pub fn list_files(root: &Path) -> Result<Vec<PathBuf>, CliError> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), CliError> {
        for entry in std::fs::read_dir(dir).map_err(|e| io(dir, e))? {
            let p = entry.map_err(|e| io(dir, e))?.path();
            if p.is_dir() {
                walk(root, &p, out)?;
            } else {
                out.push(p.strip_prefix(root).expect("under root").to_path_buf());
            }
        }
        Ok(())
    }
    let mut out = Vec::new();
    if root.is_dir() {
        walk(root, root, &mut out)?;
    }
    out.sort();
    Ok(out)
}
