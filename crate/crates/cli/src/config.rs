//! Run configuration: a TOML file, overridden by command-line flags.

use std::path::{Path, PathBuf};

use pinchkit::{IntegratorOptions, ScanConfig, SolitonKind};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dims: Vec<usize>,
    pub m_list: Vec<u32>,
    pub seed: u64,
    /// Output directory; not echoed in reports so reruns elsewhere compare equal.
    #[serde(skip_serializing)]
    pub out: PathBuf,
    #[serde(skip_serializing)]
    pub jobs: Option<usize>,
    pub scan: ScanConfig,
    pub lemma: LemmaConfig,
    pub fuzz: FuzzConfig,
    pub integrator: IntegratorOptions,
    pub ode: OdeConfig,
    pub soliton: SolitonConfig,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            dims: vec![4, 5, 6],
            m_list: vec![1, 2],
            seed: 0,
            out: PathBuf::from("pinchkit-out"),
            jobs: None,
            scan: ScanConfig::default(),
            lemma: LemmaConfig::default(),
            fuzz: FuzzConfig::default(),
            integrator: IntegratorOptions::default(),
            ode: OdeConfig::default(),
            soliton: SolitonConfig::default(),
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LemmaConfig {
    /// Averaging trials per `(m, n)`.
    pub averaging_trials: usize,
    /// Feasible reduced instances per `(m, n)` checked against the proof claims.
    pub claim_instances: usize,
}

impl Default for LemmaConfig {
    fn default() -> Self {
        Self {
            averaging_trials: 100_000,
            claim_instances: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FuzzConfig {
    pub samples: u64,
    pub max_n: usize,
    pub max_m0: u32,
    /// Random diagonal operators per dimension for the `M#` oracle comparison.
    pub oracle_samples: usize,
    pub oracle_dims: Vec<usize>,
    /// Coordinates are drawn from `[−range, range]`.
    pub range: f64,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        Self {
            samples: 1_000_000,
            max_n: 8,
            max_m0: 6,
            oracle_samples: 50,
            oracle_dims: vec![4, 5, 6, 7],
            range: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OdeConfig {
    /// Initial value of the round and cylinder patterns.
    pub c0: f64,
    /// Nonnegative random starts per dimension.
    pub orthant_runs: usize,
    /// Constrained-mode starts per dimension for the Hamilton–Ivey check.
    pub hi_runs: usize,
    pub hi_t_end: f64,
    /// Random `(u0, m, t)` triples for the comparison-bound envelope.
    pub comparison_samples: usize,
    /// Batch trajectories written to CSV per dimension and batch.
    pub csv_runs: usize,
}

impl Default for OdeConfig {
    fn default() -> Self {
        Self {
            c0: 1.0,
            orthant_runs: 200,
            hi_runs: 100,
            hi_t_end: 5.0,
            comparison_samples: 10_000,
            csv_runs: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolitonConfig {
    pub kinds: Vec<String>,
    /// Sample points (and point pairs) per model.
    pub points: usize,
    /// Flat and line coordinates are drawn from `[−extent, extent]`.
    pub extent: f64,
    /// Points sampled along each geodesic.
    pub geodesic_samples: usize,
}

impl Default for SolitonConfig {
    fn default() -> Self {
        Self {
            kinds: SolitonKind::ALL.iter().map(|k| k.name().to_string()).collect(),
            points: 100,
            extent: 10.0,
            geodesic_samples: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub identity_rel: f64,
    pub oracle: f64,
    pub case1_c_est: f64,
    pub averaging: f64,
    pub blowup_rel: f64,
    pub pattern_rel: f64,
    pub mixed_pairs: f64,
    pub orthant: f64,
    pub hi_margin: f64,
    pub comparison_rel: f64,
    pub soliton: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            identity_rel: 1e-10,
            oracle: 1e-12,
            case1_c_est: 1e-9,
            averaging: 1e-12,
            blowup_rel: 1e-4,
            pattern_rel: 1e-9,
            mixed_pairs: 1e-12,
            orthant: 1e-9,
            hi_margin: 1e-6,
            comparison_rel: 1e-8,
            soliton: 1e-12,
        }
    }
}

impl Tolerances {
    fn entries(&self) -> [(&'static str, f64); 11] {
        [
            ("identity_rel", self.identity_rel),
            ("oracle", self.oracle),
            ("case1_c_est", self.case1_c_est),
            ("averaging", self.averaging),
            ("blowup_rel", self.blowup_rel),
            ("pattern_rel", self.pattern_rel),
            ("mixed_pairs", self.mixed_pairs),
            ("orthant", self.orthant),
            ("hi_margin", self.hi_margin),
            ("comparison_rel", self.comparison_rel),
            ("soliton", self.soliton),
        ]
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        if self.dims.is_empty() {
            return bad("dims must not be empty".into());
        }
        if let Some(&n) = self.dims.iter().find(|&&n| !(4..=pinchkit::MAX_DIM).contains(&n)) {
            return bad(format!("dimension {n} outside 4..={}", pinchkit::MAX_DIM));
        }
        if self.jobs == Some(0) {
            return bad("jobs must be at least 1".into());
        }
        self.scan.validate().map_err(|e| CliError::Config(e.to_string()))?;
        self.integrator.validate().map_err(|e| CliError::Config(e.to_string()))?;
        for (name, v) in self.tolerances.entries() {
            // f64::MIN_POSITIVE rather than EPSILON: sub-epsilon overrides must reach the checks.
            if !(v.is_finite() && v >= f64::MIN_POSITIVE) {
                return bad(format!("tolerance {name} = {v} must be finite and at least {:e}", f64::MIN_POSITIVE));
            }
        }
        if self.fuzz.max_n < 4 || self.fuzz.max_n > pinchkit::MAX_DIM {
            return bad(format!("fuzz.max_n = {} outside 4..={}", self.fuzz.max_n, pinchkit::MAX_DIM));
        }
        if self.fuzz.oracle_dims.iter().any(|&n| !(3..=pinchkit::MAX_DIM).contains(&n)) {
            return bad("fuzz.oracle_dims entries must lie in 3..=8".into());
        }
        if !(self.fuzz.range > 0.0 && self.fuzz.range.is_finite()) {
            return bad("fuzz.range must be positive".into());
        }
        if !(self.ode.c0 > 0.0 && self.ode.c0.is_finite()) {
            return bad("ode.c0 must be positive".into());
        }
        if !(self.ode.hi_t_end > 0.0 && self.ode.hi_t_end.is_finite()) {
            return bad("ode.hi_t_end must be positive".into());
        }
        if !(self.soliton.extent > 0.0 && self.soliton.extent.is_finite()) {
            return bad("soliton.extent must be positive".into());
        }
        self.soliton_kinds()?;
        Ok(())
    }

    pub fn soliton_kinds(&self) -> Result<Vec<SolitonKind>, CliError> {
        self.soliton
            .kinds
            .iter()
            .map(|k| k.parse::<SolitonKind>().map_err(|e| CliError::Config(e.to_string())))
            .collect()
    }

    /// Lemma-scan specific: an empty `m` list is meaningless there.
    pub fn require_m_list(&self) -> Result<(), CliError> {
        if self.m_list.is_empty() {
            return Err(CliError::Config("m_list must not be empty".into()));
        }
        if self.m_list.contains(&0) {
            return Err(CliError::Config("m_list entries must be positive".into()));
        }
        Ok(())
    }
}
