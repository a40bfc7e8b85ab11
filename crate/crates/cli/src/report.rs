//! Run reports, checks and atomic output files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Observed value, when the check compares a number against a tolerance.
    pub value: Option<f64>,
    pub tolerance: Option<f64>,
    pub detail: String,
}

impl Check {
    /// Passes when `value ≤ tol`; NaN fails.
    pub fn at_most(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= tol,
            value: Some(value),
            tolerance: Some(tol),
            detail: format!("require <= {tol:e}"),
        }
    }

    /// Passes when `value ≥ −tol`.
    pub fn at_least_neg(name: impl Into<String>, value: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            passed: value >= -tol,
            value: Some(value),
            tolerance: Some(tol),
            detail: format!("require >= -{tol:e}"),
        }
    }

    pub fn flag(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            value: None,
            tolerance: None,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub suite: String,
    pub version: String,
    pub passed: bool,
    pub failures: Vec<String>,
    pub warnings: Vec<String>,
    pub checks: Vec<Check>,
    pub metrics: BTreeMap<String, Value>,
    pub config: Value,
}

impl RunReport {
    pub fn new(suite: &str, config: &impl Serialize) -> Self {
        Self {
            suite: suite.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            passed: true,
            failures: Vec::new(),
            warnings: Vec::new(),
            checks: Vec::new(),
            metrics: BTreeMap::new(),
            config: serde_json::to_value(config).unwrap_or(Value::Null),
        }
    }

    pub fn push(&mut self, check: Check) {
        if !check.passed {
            self.failures.push(check.name.clone());
            self.passed = false;
        }
        self.checks.push(check);
    }

    pub fn metric(&mut self, key: impl Into<String>, value: impl Serialize) {
        self.metrics
            .insert(key.into(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed {
            crate::EXIT_PASS
        } else {
            crate::EXIT_FAIL
        }
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("report serializes");
        bytes.push(b'\n');
        bytes
    }
}

/// Writes `bytes` to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(io)?;
    let name = path.file_name().and_then(|s| s.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    std::fs::write(&tmp, bytes).map_err(io)?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        io(e)
    })
}

/// Output directory of one suite.
#[derive(Debug, Clone)]
pub struct SuiteDir {
    pub root: PathBuf,
}

impl SuiteDir {
    pub fn new(out: &Path, suite: &str) -> Result<Self, CliError> {
        let root = out.join(suite);
        std::fs::create_dir_all(&root).map_err(|e| CliError::Io(format!("{}: {e}", root.display())))?;
        Ok(Self { root })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write_csv(&self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        write_atomic(&self.path(name), &bytes)
    }

    pub fn write_summary(&self, report: &RunReport) -> Result<(), CliError> {
        write_atomic(&self.path("summary.json"), &report.to_json())
    }

    /// Wall-clock facts live apart from the summary so that summaries stay reproducible.
    pub fn write_meta(&self, duration_s: f64) -> Result<(), CliError> {
        let meta = serde_json::json!({ "duration_s": duration_s });
        write_atomic(&self.path("run_meta.json"), meta.to_string().as_bytes())
    }
}

/// Shortest round-trip representation, as used throughout the CSV outputs.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}
