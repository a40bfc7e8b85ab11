//! Seeded constrained search for the infimum of the pinching function at `ρ = 1`.
//!
//! Three sources feed the estimate `C_est = max(0, −min f)`:
//!
//! 1. a dense grid over the reduced slice `(x_1, x_2, x_3 = … = x_n)`, which is
//!    enough because averaging two tail coordinates never increases `f`;
//! 2. uniform draws from the box, sorted into the ordered region and rejected
//!    against constraints (ii)–(iii);
//! 3. pattern-search refinement from the best candidates, staying feasible.
//!
//! Random draws are generated in fixed-size chunks, each with its own ChaCha
//! stream, so results do not depend on the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pinching::{constraints_of, pinching_f, Constraints};

const CHUNK_DRAWS: usize = 1 << 14;
const CHUNKS_PER_ROUND: usize = 64;
/// Refinement iterates leaving a box this many times wider than the search box count as divergence.
const ESCAPE_FACTOR: f64 = 1e3;
const SLACK: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScanConfig {
    /// Search interval for every coordinate; `None` picks [`default_half_width`].
    pub bounds: Option<(f64, f64)>,
    /// Grid points per axis of the reduced slice.
    pub resolution: usize,
    /// Target number of feasible random samples.
    pub samples: usize,
    /// Hard cap on random draws (feasible or not).
    pub max_draws: usize,
    pub refine_iters: usize,
    pub refine_starts: usize,
    /// Feasible samples kept in the result for export.
    pub keep_samples: usize,
    pub seed: u64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        Self {
            bounds: None,
            resolution: 120,
            samples: 100_000,
            max_draws: 200_000_000,
            refine_iters: 400,
            refine_starts: 8,
            keep_samples: 1_000,
            seed: 0,
        }
    }
}

impl ScanConfig {
    pub fn validate(&self) -> Result<()> {
        if self.resolution < 2 {
            return Err(Error::InvalidParameter("grid resolution must be at least 2".into()));
        }
        if let Some((lo, hi)) = self.bounds {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidParameter(format!(
                    "scan bounds must be a finite interval with lo < hi, got ({lo}, {hi})"
                )));
            }
        }
        Ok(())
    }
}

/// Where the reported minimum came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Grid,
    Random,
    Refined,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanSample {
    pub x: Vec<f64>,
    pub f: f64,
    pub constraints: Constraints,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanResult {
    pub m: u32,
    pub n: usize,
    pub bounds: (f64, f64),
    pub min_f: Option<f64>,
    pub argmin: Option<Vec<f64>>,
    pub provenance: Option<Provenance>,
    pub c_est: f64,
    pub feasible_grid: u64,
    pub feasible_random: u64,
    pub draws: u64,
    pub grid_min: Option<f64>,
    pub random_min: Option<f64>,
    pub refined_min: Option<f64>,
    pub refinement_escaped: bool,
    #[serde(skip)]
    pub kept: Vec<ScanSample>,
}

impl ScanResult {
    pub fn feasible_found(&self) -> bool {
        self.min_f.is_some()
    }

    pub fn feasible_samples(&self) -> u64 {
        self.feasible_grid + self.feasible_random
    }
}

/// Half-width of the default search box: `max(10(m+n), 4L)`, where `L` is the
/// smallest sup-norm a feasible point can have at `ρ = 1`.
///
/// Subtracting (ii) from (iii) forces `|M_12| > (m+1)(m+n−1) − 1`; feeding that
/// back into (ii) together with (i) bounds `x_3` from below.
pub fn default_half_width(m: u32, n: usize) -> f64 {
    let (m, n) = (f64::from(m), n as f64);
    let k = (n - 1.0) * (n - 2.0) / 2.0;
    let a_min = (m + 1.0) * (m + n - 1.0) - 1.0;
    let x3_min = ((m + n - 2.0) * a_min - 1.0) / (2.0 * k);
    let scale = (a_min / 2.0).max(x3_min);
    (10.0 * (m + n)).max(4.0 * scale)
}

/// Running minimum with first-found tie breaking plus the best few distinct candidates.
#[derive(Debug, Clone, Default)]
struct Tally {
    feasible: u64,
    draws: u64,
    best: Option<(f64, Vec<f64>)>,
    top: Vec<(f64, Vec<f64>)>,
    kept: Vec<ScanSample>,
}

impl Tally {
    fn offer(&mut self, x: &[f64], f: f64, c: Constraints, top_k: usize, keep: usize) {
        self.feasible += 1;
        if self.best.as_ref().map_or(true, |(b, _)| f < *b) {
            self.best = Some((f, x.to_vec()));
        }
        if top_k > 0 && (self.top.len() < top_k || f < self.top.last().unwrap().0) {
            let pos = self.top.partition_point(|(g, _)| *g <= f);
            self.top.insert(pos, (f, x.to_vec()));
            self.top.truncate(top_k);
        }
        if self.kept.len() < keep {
            self.kept.push(ScanSample {
                x: x.to_vec(),
                f,
                constraints: c,
            });
        }
    }

    /// Folds `other` after `self`; earlier entries win ties.
    fn merge(&mut self, other: Tally, top_k: usize, keep: usize) {
        self.feasible += other.feasible;
        self.draws += other.draws;
        if let Some((f, x)) = other.best {
            if self.best.as_ref().map_or(true, |(b, _)| f < *b) {
                self.best = Some((f, x));
            }
        }
        for (f, x) in other.top {
            if self.top.len() < top_k || f < self.top.last().unwrap().0 {
                let pos = self.top.partition_point(|(g, _)| *g <= f);
                self.top.insert(pos, (f, x));
                self.top.truncate(top_k);
            }
        }
        let room = keep.saturating_sub(self.kept.len());
        self.kept.extend(other.kept.into_iter().take(room));
    }
}

fn grid_phase(m: u32, n: usize, lo: f64, hi: f64, cfg: &ScanConfig) -> Tally {
    let res = cfg.resolution;
    let axis: Vec<f64> = (0..res)
        .map(|a| lo + (hi - lo) * a as f64 / (res - 1) as f64)
        .collect();
    let parts: Vec<Tally> = (0..res)
        .into_par_iter()
        .map(|a| {
            let mut t = Tally::default();
            let mut x = vec![0.0; n];
            for b in a..res {
                for c in b..res {
                    x[0] = axis[a];
                    x[1] = axis[b];
                    x[2..].iter_mut().for_each(|v| *v = axis[c]);
                    t.draws += 1;
                    let con = constraints_of(&x, m, SLACK);
                    if con.all() {
                        let f = pinching_f(&x, m);
                        t.offer(&x, f, con, cfg.refine_starts, 0);
                    }
                }
            }
            t
        })
        .collect();
    let mut total = Tally::default();
    for p in parts {
        total.merge(p, cfg.refine_starts, 0);
    }
    total
}

fn random_chunk(m: u32, n: usize, lo: f64, hi: f64, cfg: &ScanConfig, chunk: u64) -> Tally {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(chunk + 1);
    let mut t = Tally::default();
    let mut x = vec![0.0; n];
    for _ in 0..CHUNK_DRAWS {
        for v in x.iter_mut() {
            *v = rng.gen_range(lo..hi);
        }
        x.sort_by(f64::total_cmp);
        t.draws += 1;
        let con = constraints_of(&x, m, SLACK);
        if con.all() {
            let f = pinching_f(&x, m);
            t.offer(&x, f, con, cfg.refine_starts, cfg.keep_samples);
        }
    }
    t
}

fn random_phase(m: u32, n: usize, lo: f64, hi: f64, cfg: &ScanConfig) -> Tally {
    let mut total = Tally::default();
    let mut next_chunk = 0u64;
    while (total.feasible as usize) < cfg.samples && (total.draws as usize) < cfg.max_draws {
        let remaining = (cfg.max_draws - total.draws as usize).div_ceil(CHUNK_DRAWS);
        let count = CHUNKS_PER_ROUND.min(remaining) as u64;
        let parts: Vec<Tally> = (next_chunk..next_chunk + count)
            .into_par_iter()
            .map(|c| random_chunk(m, n, lo, hi, cfg, c))
            .collect();
        next_chunk += count;
        for p in parts {
            // Stop at the first chunk that reaches the target so the sample set
            // does not depend on the round size.
            if (total.feasible as usize) >= cfg.samples {
                break;
            }
            total.merge(p, cfg.refine_starts, cfg.keep_samples);
        }
    }
    total
}

struct Refined {
    f: f64,
    x: Vec<f64>,
    escaped: bool,
}

/// Coordinate pattern search: expand the step after a successful sweep, halve it otherwise.
fn refine(m: u32, start: &[f64], f0: f64, step0: f64, iters: usize, escape: f64) -> Refined {
    let mut x = start.to_vec();
    let mut f = f0;
    let mut step = step0;
    let min_step = step0 * 1e-15;
    for _ in 0..iters {
        let mut improved = false;
        for i in 0..x.len() {
            for dir in [-1.0, 1.0] {
                let old = x[i];
                x[i] = old + dir * step;
                if constraints_of(&x, m, SLACK).all() {
                    let g = pinching_f(&x, m);
                    if g < f {
                        f = g;
                        improved = true;
                        continue;
                    }
                }
                x[i] = old;
            }
        }
        if x.iter().any(|v| v.abs() > escape) {
            return Refined {
                f,
                x,
                escaped: true,
            };
        }
        if improved {
            step *= 2.0;
        } else {
            step *= 0.5;
            if step < min_step {
                break;
            }
        }
    }
    Refined {
        f,
        x,
        escaped: false,
    }
}

/// Estimates `C(m, n)` at `ρ = 1`. Deterministic for a fixed seed.
pub fn scan_min_f(m: u32, n: usize, cfg: &ScanConfig) -> Result<ScanResult> {
    if n < 4 {
        return Err(Error::DimensionTooSmall { n, min: 4 });
    }
    if m == 0 {
        return Err(Error::InvalidParameter("m must be a positive integer".into()));
    }
    cfg.validate()?;
    let (lo, hi) = cfg.bounds.unwrap_or_else(|| {
        let b = default_half_width(m, n);
        (-b, b)
    });

    let grid = grid_phase(m, n, lo, hi, cfg);
    let random = random_phase(m, n, lo, hi, cfg);

    let mut starts: Vec<(f64, Vec<f64>)> = grid.top.iter().chain(&random.top).cloned().collect();
    starts.sort_by(|a, b| a.0.total_cmp(&b.0));
    starts.truncate(cfg.refine_starts);

    let step0 = (hi - lo) / cfg.resolution as f64;
    let escape = ESCAPE_FACTOR * lo.abs().max(hi.abs());
    let refined: Vec<Refined> = starts
        .par_iter()
        .map(|(f, x)| refine(m, x, *f, step0, cfg.refine_iters, escape))
        .collect();

    let mut best: Option<(f64, Vec<f64>, Provenance)> = None;
    let mut consider = |cand: Option<(f64, Vec<f64>)>, p: Provenance| {
        if let Some((f, x)) = cand {
            if best.as_ref().map_or(true, |(b, _, _)| f < *b) {
                best = Some((f, x, p));
            }
        }
    };
    consider(grid.best.clone(), Provenance::Grid);
    consider(random.best.clone(), Provenance::Random);
    let mut refined_best: Option<(f64, Vec<f64>)> = None;
    let mut escaped = false;
    for r in refined {
        escaped |= r.escaped;
        if refined_best.as_ref().map_or(true, |(b, _)| r.f < *b) {
            refined_best = Some((r.f, r.x));
        }
    }
    let refined_min = refined_best.as_ref().map(|(f, _)| *f);
    consider(refined_best, Provenance::Refined);

    let (min_f, argmin, provenance) = match best {
        Some((f, x, p)) => (Some(f), Some(x), Some(p)),
        None => (None, None, None),
    };
    Ok(ScanResult {
        m,
        n,
        bounds: (lo, hi),
        c_est: min_f.map_or(0.0, |f| (-f).max(0.0)),
        min_f,
        argmin,
        provenance,
        feasible_grid: grid.feasible,
        feasible_random: random.feasible,
        draws: random.draws,
        grid_min: grid.best.map(|(f, _)| f),
        random_min: random.best.map(|(f, _)| f),
        refined_min,
        refinement_escaped: escaped,
        kept: random.kept,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pinching::PinchingInstance;

    fn small() -> ScanConfig {
        ScanConfig {
            resolution: 40,
            samples: 5_000,
            refine_iters: 100,
            keep_samples: 5_000,
            seed: 42,
            ..ScanConfig::default()
        }
    }

    #[test]
    fn default_box_contains_feasible_points() {
        for n in 4..=8 {
            for m in [1, 2, 5, 8, 20] {
                let b = default_half_width(m, n);
                assert!(b >= 10.0 * (m as f64 + n as f64));
                let r = scan_min_f(
                    m,
                    n,
                    &ScanConfig {
                        resolution: 60,
                        samples: 0,
                        refine_iters: 0,
                        ..small()
                    },
                )
                .unwrap();
                assert!(r.feasible_grid > 0, "m={m} n={n}: empty grid in box {b}");
            }
        }
    }

    #[test]
    fn case_one_is_nonnegative() {
        for (m, n) in [(1, 4), (2, 6)] {
            let r = scan_min_f(m, n, &small()).unwrap();
            assert!(r.feasible_found());
            assert!(r.min_f.unwrap() >= -1e-9);
            assert_eq!(r.c_est, 0.0);
            assert!(!r.refinement_escaped);
        }
    }

    #[test]
    fn argmin_is_feasible_and_matches_f() {
        let r = scan_min_f(3, 5, &small()).unwrap();
        let x = r.argmin.clone().unwrap();
        let inst = PinchingInstance::new(x, 3, 1.0).unwrap();
        assert!(inst.is_feasible());
        assert_eq!(inst.evaluate_f(), r.min_f.unwrap());
        assert!(r.c_est >= 0.0);
    }

    #[test]
    fn large_m_small_n_has_finite_estimate() {
        let r = scan_min_f(20, 4, &small()).unwrap();
        assert!(r.feasible_found());
        assert!(r.c_est.is_finite());
        for s in &r.kept {
            assert!(s.constraints.all());
            assert!(s.f >= -r.c_est);
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let a = scan_min_f(2, 5, &small()).unwrap();
        let b = scan_min_f(2, 5, &small()).unwrap();
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = pool.install(|| scan_min_f(2, 5, &small()).unwrap());
        assert_eq!(a, c);
    }

    #[test]
    fn empty_box_reported_not_error() {
        let cfg = ScanConfig {
            bounds: Some((0.0, 1.0)),
            ..small()
        };
        let r = scan_min_f(1, 4, &ScanConfig { max_draws: 100_000, ..cfg }).unwrap();
        assert!(!r.feasible_found());
        assert_eq!(r.c_est, 0.0);
        assert_eq!(r.feasible_samples(), 0);
    }

    #[test]
    fn rejects_bad_config() {
        let cfg = ScanConfig {
            resolution: 1,
            ..small()
        };
        assert!(scan_min_f(1, 4, &cfg).is_err());
        assert!(scan_min_f(0, 4, &small()).is_err());
        assert!(scan_min_f(1, 3, &small()).is_err());
    }

    #[test]
    fn random_phase_reaches_target() {
        let r = scan_min_f(1, 5, &small()).unwrap();
        assert!(r.feasible_random >= 5_000);
        assert_eq!(r.kept.len(), 5_000);
    }
}
