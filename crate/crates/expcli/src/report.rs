//! Tables, outcomes, CSV files and the JSON manifest.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::ScenarioConfig;
use crate::error::LabError;
use crate::experiments::{ExperimentId, TOLERANCES};

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Value {
    Num(f64),
    Int(i64),
    Text(String),
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Num(x) => write!(f, "{x:e}"),
            Value::Int(i) => write!(f, "{i}"),
            Value::Text(s) => f.write_str(s),
        }
    }
}

impl From<f64> for Value {
    fn from(x: f64) -> Self {
        Value::Num(x)
    }
}

impl From<usize> for Value {
    fn from(i: usize) -> Self {
        Value::Int(i as i64)
    }
}

impl From<&str> for Value {
    fn from(s: &str) -> Self {
        Value::Text(s.to_string())
    }
}

impl From<bool> for Value {
    fn from(b: bool) -> Self {
        Value::Text(b.to_string())
    }
}

/// One numeric table; every row carries the experiment id and `kappa` (empty when not applicable).
#[derive(Clone, Debug, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<(Option<f64>, Vec<Value>)>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.into(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, kappa: Option<f64>, values: Vec<Value>) {
        debug_assert_eq!(values.len(), self.columns.len());
        self.rows.push((kappa, values));
    }

    fn to_csv(&self, id: ExperimentId) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["experiment".to_string(), "kappa".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header).expect("in-memory write");
        for (kappa, values) in &self.rows {
            let mut rec = vec![
                id.as_str().to_string(),
                kappa.map(|k| format!("{k:e}")).unwrap_or_default(),
            ];
            rec.extend(values.iter().map(|v| v.to_string()));
            w.write_record(&rec).expect("in-memory write");
        }
        w.into_inner().expect("in-memory flush")
    }
}

/// Result of one experiment.
#[derive(Clone, Debug, Serialize)]
pub struct Outcome {
    pub id: ExperimentId,
    pub criterion: usize,
    pub passed: bool,
    pub detail: String,
    pub metrics: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
    #[serde(skip)]
    pub tables: Vec<Table>,
}

impl Outcome {
    pub fn new(id: ExperimentId) -> Self {
        Self {
            id,
            criterion: id.criterion(),
            passed: false,
            detail: String::new(),
            metrics: BTreeMap::new(),
            warnings: Vec::new(),
            tables: Vec::new(),
        }
    }

    pub fn metric(&mut self, name: &str, value: f64) {
        self.metrics.insert(name.to_string(), value);
    }

    pub fn verdict(mut self, passed: bool, detail: String) -> Self {
        self.passed = passed;
        self.detail = detail;
        self
    }
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub config: ScenarioConfig,
    pub outcomes: Vec<Outcome>,
}

impl RunResult {
    pub fn passed(&self) -> bool {
        self.outcomes.iter().all(|o| o.passed)
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    scenario: &'a str,
    version: &'static str,
    fourier_convention: &'static str,
    seed: u64,
    threads: usize,
    config: &'a ScenarioConfig,
    tolerances: BTreeMap<&'static str, f64>,
    outcomes: &'a [Outcome],
    files: Vec<String>,
    sha256: String,
}

/// Writes `summary.csv`, one CSV per table and `manifest.json` into `dir`, creating it if needed.
/// Returns the paths written.
pub fn emit_report(result: &RunResult, dir: &Path) -> Result<Vec<PathBuf>, LabError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| LabError::Io { path, source }
    };
    std::fs::create_dir_all(dir).map_err(io(dir))?;
    let mut files: Vec<(String, Vec<u8>)> = Vec::new();
    let mut summary = csv::Writer::from_writer(Vec::new());
    summary
        .write_record(["experiment", "criterion", "passed", "detail"])
        .expect("in-memory write");
    for o in &result.outcomes {
        summary
            .write_record([
                o.id.as_str(),
                &o.criterion.to_string(),
                &o.passed.to_string(),
                &o.detail,
            ])
            .expect("in-memory write");
        for t in &o.tables {
            files.push((format!("{}__{}.csv", o.id.as_str(), t.name), t.to_csv(o.id)));
        }
    }
    files.insert(
        0,
        (
            "summary.csv".into(),
            summary.into_inner().expect("in-memory flush"),
        ),
    );
    let mut hasher = Sha256::new();
    for (name, bytes) in &files {
        hasher.update(name.as_bytes());
        hasher.update(bytes);
    }
    let manifest = Manifest {
        scenario: &result.config.name,
        version: env!("CARGO_PKG_VERSION"),
        fourier_convention: nelson_core::FOURIER_CONVENTION,
        seed: result.config.seed,
        threads: result.config.threads,
        config: &result.config,
        tolerances: TOLERANCES.iter().copied().collect(),
        outcomes: &result.outcomes,
        files: files.iter().map(|(n, _)| n.clone()).collect(),
        sha256: format!("{:x}", hasher.finalize()),
    };
    let mut written = Vec::new();
    for (name, bytes) in &files {
        let path = dir.join(name);
        std::fs::write(&path, bytes).map_err(io(&path))?;
        written.push(path);
    }
    let path = dir.join("manifest.json");
    let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    std::fs::write(&path, json).map_err(io(&path))?;
    written.push(path);
    Ok(written)
}
