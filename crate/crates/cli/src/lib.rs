//! Command-line driver: configuration, suites and reports.

pub mod config;
pub mod error;
pub mod report;
pub mod suites;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, Subcommand};

use config::RunConfig;
use error::CliError;
use report::{RunReport, SuiteDir};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "pinchkit", version, about = "Numerical verification suites for pinching estimates")]
pub struct Cli {
    /// TOML run configuration; defaults are used for anything it omits.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Inject a known fault so the suite must report failure.
    #[arg(long, global = true)]
    pub self_test: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Scan the pinching function and test the averaging and case claims.
    LemmaScan,
    /// Fuzz the completed-square identity and the Lie-algebra square oracle.
    IdentityFuzz,
    /// Integrate the reaction ODE and check patterns, invariance and comparison bounds.
    OdeRun,
    /// Verify the soliton models.
    SolitonVerify,
    /// Collect existing suite summaries into report.json.
    Report,
}

impl Command {
    pub fn suite(self) -> &'static str {
        match self {
            Command::LemmaScan => suites::lemma_scan::SUITE,
            Command::IdentityFuzz => suites::identity_fuzz::SUITE,
            Command::OdeRun => suites::ode_run::SUITE,
            Command::SolitonVerify => suites::soliton_verify::SUITE,
            Command::Report => suites::aggregate::SUITE,
        }
    }
}

pub fn execute(cmd: Command, cfg: &RunConfig, self_test: bool) -> Result<RunReport, CliError> {
    match cmd {
        Command::LemmaScan => suites::lemma_scan::run(cfg, self_test),
        Command::IdentityFuzz => suites::identity_fuzz::run(cfg, self_test),
        Command::OdeRun => suites::ode_run::run(cfg, self_test),
        Command::SolitonVerify => suites::soliton_verify::run(cfg, self_test),
        Command::Report => suites::aggregate::run(cfg, self_test),
    }
}

fn prepare(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if cli.jobs.is_some() {
        cfg.jobs = cli.jobs;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_parsed(cli: &Cli) -> Result<RunReport, CliError> {
    let cfg = prepare(cli)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = cfg.jobs {
        pool = pool.num_threads(j);
    }
    let pool = pool.build().map_err(|e| CliError::Config(e.to_string()))?;
    let start = Instant::now();
    let report = pool.install(|| execute(cli.command, &cfg, cli.self_test))?;
    if cli.command != Command::Report {
        SuiteDir::new(&cfg.out, cli.command.suite())?.write_meta(start.elapsed().as_secs_f64())?;
    }
    Ok(report)
}

/// Parses `args`, runs the chosen suite and returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
        }
    };
    match run_parsed(&cli) {
        Ok(report) => {
            let mut out = std::io::stdout().lock();
            let status = if report.passed { "PASS" } else { "FAIL" };
            let _ = writeln!(out, "{status} {} ({} checks)", report.suite, report.checks.len());
            for c in report.checks.iter().filter(|c| !c.passed) {
                match c.value {
                    Some(v) => drop(writeln!(out, "  failed {}: {v:e} ({})", c.name, c.detail)),
                    None => drop(writeln!(out, "  failed {}: {}", c.name, c.detail)),
                }
            }
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            report.exit_code()
        }
        Err(e) => {
            eprintln!("pinchkit: {e}");
            e.exit_code()
        }
    }
}
