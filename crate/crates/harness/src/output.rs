//! CSV and JSON writers. Everything written is a function of the config and
//! seed only: no timestamps, host names or thread counts.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::HarnessError;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub git: &'static str,
    pub experiment: &'static str,
    pub seed: u64,
    pub config_sha256: String,
}

impl Metadata {
    pub fn new(experiment: &'static str, seed: u64, config_sha256: String) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            git: env!("SPDE_GIT_DESCRIBE"),
            experiment,
            seed,
            config_sha256,
        }
    }
}

/// A header row plus preformatted cells.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self, meta: &Metadata) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# {} {} ({})", meta.tool, meta.version, meta.git);
        let _ = writeln!(s, "# experiment: {}", meta.experiment);
        let _ = writeln!(s, "# seed: {}", meta.seed);
        let _ = writeln!(s, "# config_sha256: {}", meta.config_sha256);
        s.push_str(&self.header.join(","));
        s.push('\n');
        for row in &self.rows {
            s.push_str(&row.join(","));
            s.push('\n');
        }
        s
    }
}

/// Shortest round-trip form; non-finite values print as `nan`/`inf`.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:?}")
    } else {
        format!("{x}").to_lowercase()
    }
}

/// What one run produced, before it touches the file system.
#[derive(Debug, Clone, Default)]
pub struct RunOutput {
    pub csv: Option<Table>,
    pub summary: Option<Value>,
    pub report: Option<Value>,
    pub passed: bool,
    pub warnings: Vec<String>,
}

fn with_metadata(doc: &Value, meta: &Metadata) -> Value {
    let mut obj = serde_json::Map::new();
    obj.insert("metadata".into(), serde_json::to_value(meta).expect("metadata serializes"));
    match doc {
        Value::Object(m) => obj.extend(m.clone()),
        other => {
            obj.insert("result".into(), other.clone());
        }
    }
    Value::Object(obj)
}

fn sibling(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

/// Writes `<prefix>.csv`, `<prefix>.summary.json` and `<prefix>.report.json`
/// for whichever parts are present; returns the paths written.
pub fn write_outputs(out: &RunOutput, meta: &Metadata, prefix: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    if let Some(dir) = prefix.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    let mut written = Vec::new();
    if let Some(t) = &out.csv {
        let p = sibling(prefix, ".csv");
        fs::write(&p, t.to_csv(meta))?;
        written.push(p);
    }
    for (doc, suffix) in [(&out.summary, ".summary.json"), (&out.report, ".report.json")] {
        if let Some(d) = doc {
            let p = sibling(prefix, suffix);
            let mut text = serde_json::to_string_pretty(&with_metadata(d, meta)).expect("json serializes");
            text.push('\n');
            fs::write(&p, text)?;
            written.push(p);
        }
    }
    Ok(written)
}
