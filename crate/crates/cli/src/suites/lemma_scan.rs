use pinchkit::{scan_min_f, PinchingInstance};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{stream, tags};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::report::{fmt_f64, Check, RunReport, SuiteDir};

pub const SUITE: &str = "lemma-scan";

const CHUNK: usize = 2048;
/// Draws allowed per requested feasible instance before giving up on it.
const DRAW_CAP: usize = 1_000_000;

#[derive(Debug, Serialize)]
struct CaseSummary {
    m: u32,
    n: usize,
    bounds: (f64, f64),
    c_est: f64,
    min_f: Option<f64>,
    provenance: Option<pinchkit::Provenance>,
    feasible_grid: u64,
    feasible_random: u64,
    draws: u64,
    refinement_escaped: bool,
    averaging_trials: usize,
    averaging_violations: usize,
    averaging_worst: f64,
    averaging_kept_feasible: usize,
    claim_instances: usize,
    claim_failures: [usize; 6],
}

fn case_seed(seed: u64, m: u32, n: usize) -> u64 {
    seed ^ (u64::from(m) << 32) ^ (n as u64) << 8
}

/// Uniform draw in the box, sorted, rejected until feasible at `ρ = 1`.
fn draw_feasible(rng: &mut ChaCha8Rng, m: u32, n: usize, lo: f64, hi: f64, reduced: bool) -> Option<PinchingInstance> {
    for _ in 0..DRAW_CAP {
        let mut x: Vec<f64> = if reduced {
            let mut head: Vec<f64> = (0..3).map(|_| rng.gen_range(lo..hi)).collect();
            head.sort_by(f64::total_cmp);
            let mut x = head[..2].to_vec();
            x.resize(n, head[2]);
            x
        } else {
            (0..n).map(|_| rng.gen_range(lo..hi)).collect()
        };
        x.sort_by(f64::total_cmp);
        let inst = PinchingInstance::new(x, m, 1.0).expect("valid instance");
        if inst.is_feasible() {
            return Some(inst);
        }
    }
    None
}

struct Averaging {
    trials: usize,
    violations: usize,
    worst: f64,
    kept_feasible: usize,
    missing: usize,
}

fn averaging(seed: u64, m: u32, n: usize, lo: f64, hi: f64, trials: usize, tol: f64, fault: bool) -> Averaging {
    let chunks = trials.div_ceil(CHUNK);
    let parts: Vec<Averaging> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed, tags::AVERAGING, c as u64);
            let count = CHUNK.min(trials - c * CHUNK);
            let mut out = Averaging {
                trials: 0,
                violations: 0,
                worst: f64::NEG_INFINITY,
                kept_feasible: 0,
                missing: 0,
            };
            for _ in 0..count {
                let Some(inst) = draw_feasible(&mut rng, m, n, lo, hi, false) else {
                    out.missing += 1;
                    continue;
                };
                let i = rng.gen_range(2..n);
                let mut j = rng.gen_range(2..n - 1);
                if j >= i {
                    j += 1;
                }
                let next = inst.averaging_step(i, j).expect("tail indices");
                let mut after = next.evaluate_f();
                if fault {
                    after += 1e-6 * inst.scale();
                }
                let excess = (after - inst.evaluate_f()) / inst.scale();
                out.trials += 1;
                out.worst = out.worst.max(excess);
                if excess > tol {
                    out.violations += 1;
                }
                if next.is_feasible() {
                    out.kept_feasible += 1;
                }
            }
            out
        })
        .collect();
    parts.into_iter().fold(
        Averaging {
            trials: 0,
            violations: 0,
            worst: f64::NEG_INFINITY,
            kept_feasible: 0,
            missing: 0,
        },
        |a, b| Averaging {
            trials: a.trials + b.trials,
            violations: a.violations + b.violations,
            worst: a.worst.max(b.worst),
            kept_feasible: a.kept_feasible + b.kept_feasible,
            missing: a.missing + b.missing,
        },
    )
}

fn claims(seed: u64, m: u32, n: usize, lo: f64, hi: f64, count: usize) -> ([usize; 6], usize) {
    let chunks = count.div_ceil(CHUNK);
    let parts: Vec<([usize; 6], usize, usize)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed, tags::CLAIMS, c as u64);
            let mut fails = [0usize; 6];
            let mut done = 0;
            let mut missing = 0;
            for _ in 0..CHUNK.min(count - c * CHUNK) {
                let Some(inst) = draw_feasible(&mut rng, m, n, lo, hi, true) else {
                    missing += 1;
                    continue;
                };
                let pc = inst.proof_claims().expect("feasible reduced instance");
                for (slot, ok) in fails.iter_mut().zip(pc.0) {
                    *slot += usize::from(!ok);
                }
                done += 1;
            }
            (fails, done, missing)
        })
        .collect();
    let mut fails = [0usize; 6];
    let mut done = 0;
    for (f, d, _) in parts {
        for (a, b) in fails.iter_mut().zip(f) {
            *a += b;
        }
        done += d;
    }
    (fails, done)
}

pub fn run(cfg: &RunConfig, self_test: bool) -> Result<RunReport, CliError> {
    cfg.require_m_list()?;
    let dir = SuiteDir::new(&cfg.out, SUITE)?;
    let mut report = RunReport::new(SUITE, cfg);
    let tol = &cfg.tolerances;
    if self_test {
        report.warn("self-test: averaging results shifted by 1e-6 relative");
    }

    let max_n = cfg.dims.iter().copied().max().unwrap_or(4);
    let mut header: Vec<String> = ["m", "n", "f", "c1", "c2", "c3"].iter().map(|s| s.to_string()).collect();
    header.extend((1..=max_n).map(|i| format!("x{i}")));
    let mut rows = Vec::new();
    let mut cases = Vec::new();

    for &m in &cfg.m_list {
        for &n in &cfg.dims {
            let seed = case_seed(cfg.seed, m, n);
            let mut scfg = cfg.scan.clone();
            scfg.seed = seed ^ tags::SCAN;
            let r = scan_min_f(m, n, &scfg).map_err(|e| CliError::Config(e.to_string()))?;
            let (lo, hi) = r.bounds;
            let label = format!("m={m},n={n}");

            report.push(Check::flag(
                format!("feasible_found[{label}]"),
                r.feasible_found(),
                format!("{} grid + {} random feasible points", r.feasible_grid, r.feasible_random),
            ));
            report.push(Check::flag(
                format!("c_est_finite[{label}]"),
                r.c_est.is_finite() && !r.refinement_escaped,
                "no refinement iterate escaped the enlarged box",
            ));
            if m <= 2 {
                report.push(Check::at_most(format!("case1_c_est[{label}]"), r.c_est, tol.case1_c_est));
            }

            let avg = averaging(seed, m, n, lo, hi, cfg.lemma.averaging_trials, tol.averaging, self_test);
            if avg.missing > 0 {
                report.warn(format!("{label}: {} averaging trials found no feasible start", avg.missing));
            }
            report.push(Check::at_most(
                format!("averaging_violations[{label}]"),
                avg.violations as f64,
                0.0,
            ));

            let (claim_failures, claim_done) = if m >= 3 {
                claims(seed, m, n, lo, hi, cfg.lemma.claim_instances)
            } else {
                ([0; 6], 0)
            };
            if m >= 3 {
                report.push(Check::at_most(
                    format!("proof_claims[{label}]"),
                    claim_failures.iter().sum::<usize>() as f64,
                    0.0,
                ));
                if claim_done < cfg.lemma.claim_instances {
                    report.warn(format!(
                        "{label}: only {claim_done} of {} reduced instances were feasible",
                        cfg.lemma.claim_instances
                    ));
                }
            }

            for s in &r.kept {
                let mut row = vec![
                    m.to_string(),
                    n.to_string(),
                    fmt_f64(s.f),
                    s.constraints.c1.to_string(),
                    s.constraints.c2.to_string(),
                    s.constraints.c3.to_string(),
                ];
                row.extend(s.x.iter().map(|v| fmt_f64(*v)));
                row.resize(header.len(), String::new());
                rows.push(row);
            }

            cases.push(CaseSummary {
                m,
                n,
                bounds: r.bounds,
                c_est: r.c_est,
                min_f: r.min_f,
                provenance: r.provenance,
                feasible_grid: r.feasible_grid,
                feasible_random: r.feasible_random,
                draws: r.draws,
                refinement_escaped: r.refinement_escaped,
                averaging_trials: avg.trials,
                averaging_violations: avg.violations,
                averaging_worst: avg.worst,
                averaging_kept_feasible: avg.kept_feasible,
                claim_instances: claim_done,
                claim_failures,
            });
        }
    }

    let max_c = cases.iter().map(|c| c.c_est).fold(0.0, f64::max);
    report.metric("max_c_est", max_c);
    report.metric("cases", &cases);
    dir.write_csv("samples.csv", &header, &rows)?;
    dir.write_summary(&report)?;
    Ok(report)
}
