use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;
use crate::report::{write_atomic, Check, RunReport};

pub const SUITE: &str = "report";

pub const SOURCES: [&str; 4] = [
    super::lemma_scan::SUITE,
    super::identity_fuzz::SUITE,
    super::ode_run::SUITE,
    super::soliton_verify::SUITE,
];

#[derive(Debug, Serialize)]
struct Entry {
    suite: String,
    passed: bool,
    checks: usize,
    failures: Vec<String>,
    warnings: Vec<String>,
}

/// Collects the summaries present under the output directory into `report.json`.
pub fn run(cfg: &RunConfig, _self_test: bool) -> Result<RunReport, CliError> {
    let mut report = RunReport::new(SUITE, cfg);
    let mut entries = Vec::new();
    let mut missing = Vec::new();
    for name in SOURCES {
        let path = cfg.out.join(name).join("summary.json");
        let text = match std::fs::read(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                missing.push(name.to_string());
                continue;
            }
            Err(e) => return Err(CliError::Io(format!("{}: {e}", path.display()))),
        };
        let r: RunReport =
            serde_json::from_slice(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        report.push(Check::flag(
            format!("suite[{name}]"),
            r.passed,
            format!("{} checks, {} failed", r.checks.len(), r.failures.len()),
        ));
        entries.push(Entry {
            suite: r.suite,
            passed: r.passed,
            checks: r.checks.len(),
            failures: r.failures,
            warnings: r.warnings,
        });
    }
    if entries.is_empty() {
        return Err(CliError::Io(format!("no suite summaries found under {}", cfg.out.display())));
    }
    for m in &missing {
        report.warn(format!("no summary for {m}"));
    }
    report.metric("suites", &entries);
    report.metric("missing", &missing);
    write_atomic(&cfg.out.join("report.json"), &report.to_json())?;
    Ok(report)
}
