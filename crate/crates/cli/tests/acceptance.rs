//! Acceptance criteria, one PASS/FAIL line each. Exits nonzero if any criterion fails.

use std::path::Path;
use std::time::{Duration, Instant};

use pinchkit::{riemann_from_spectrum, weyl_tensor, RicciSpectrum};
use pinchkit_cli::config::RunConfig;
use pinchkit_cli::report::RunReport;
use pinchkit_cli::{execute, Command};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

struct Outcome {
    passed: bool,
    detail: String,
}

fn run(cmd: Command, cfg: &RunConfig) -> RunReport {
    execute(cmd, cfg, false).unwrap_or_else(|e| panic!("{} failed to run: {e}", cmd.suite()))
}

/// All checks whose name starts with one of `prefixes` passed, and at least one exists.
fn checks_pass(r: &RunReport, prefixes: &[&str]) -> (bool, String) {
    let sel: Vec<_> = r
        .checks
        .iter()
        .filter(|c| prefixes.iter().any(|p| c.name.starts_with(p)))
        .collect();
    let failed: Vec<_> = sel.iter().filter(|c| !c.passed).map(|c| c.name.clone()).collect();
    let ok = !sel.is_empty() && failed.is_empty();
    let detail = if failed.is_empty() {
        format!("{} checks", sel.len())
    } else {
        format!("failed: {}", failed.join(", "))
    };
    (ok, detail)
}

fn metric<'a>(r: &'a RunReport, key: &str) -> &'a Value {
    r.metrics.get(key).unwrap_or(&Value::Null)
}

fn base(out: &Path) -> RunConfig {
    RunConfig {
        out: out.to_path_buf(),
        seed: 20240601,
        ..RunConfig::default()
    }
}

fn c1_oracle(out: &Path) -> Outcome {
    let mut cfg = base(out);
    cfg.fuzz.samples = 0;
    cfg.fuzz.oracle_dims = vec![4, 5, 6, 7];
    cfg.fuzz.oracle_samples = 50;
    let r = run(Command::IdentityFuzz, &cfg);
    let (ok, d) = checks_pass(&r, &["oracle_"]);
    Outcome {
        passed: ok,
        detail: format!(
            "{d}; diag dev {}, off-diag {}",
            metric(&r, "oracle_max_diag_dev"),
            metric(&r, "oracle_max_offdiag")
        ),
    }
}

fn c2_weyl() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut weyl, mut sym, mut nonzero, mut count) = (0.0_f64, 0.0_f64, 0usize, 0usize);
    for n in 4..=6 {
        for _ in 0..100 {
            let spec = RicciSpectrum::new((0..n).map(|_| rng.gen_range(-5.0..5.0)).collect()).unwrap();
            let rm = riemann_from_spectrum(&spec).unwrap();
            weyl = weyl.max(weyl_tensor(&rm, &spec).unwrap().max_norm());
            sym = sym.max(rm.symmetry_defect().1);
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        for l in 0..n {
                            let same = (i == k && j == l) || (i == l && j == k);
                            if !same && rm.get(i, j, k, l) != 0.0 {
                                nonzero += 1;
                            }
                        }
                    }
                }
            }
            count += 1;
        }
    }
    Outcome {
        passed: weyl <= 1e-12 && sym <= 1e-12 && nonzero == 0,
        detail: format!("{count} spectra; max |W| {weyl:e}, symmetry defect {sym:e}, off-pattern nonzeros {nonzero}"),
    }
}

fn c3_identity(out: &Path) -> Outcome {
    let mut cfg = base(out);
    cfg.fuzz.samples = 1_000_000;
    cfg.fuzz.oracle_samples = 0;
    let r = run(Command::IdentityFuzz, &cfg);
    let (ok, d) = checks_pass(&r, &["complete_square_identity"]);
    let samples = metric(&r, "identity_samples").as_u64().unwrap_or(0);
    Outcome {
        passed: ok && samples == 1_000_000,
        detail: format!("{d}; {samples} samples, max rel err {}", metric(&r, "identity_max_rel_err")),
    }
}

fn cases(r: &RunReport) -> Vec<Value> {
    metric(r, "cases").as_array().cloned().unwrap_or_default()
}

fn c4_case1(out: &Path) -> Outcome {
    let mut cfg = base(out);
    cfg.m_list = vec![1, 2];
    cfg.dims = vec![4, 5, 6, 7, 8];
    cfg.lemma.averaging_trials = 0;
    cfg.lemma.claim_instances = 0;
    let r = run(Command::LemmaScan, &cfg);
    let (ok, d) = checks_pass(&r, &["feasible_found", "case1_c_est"]);
    let cs = cases(&r);
    let min_random = cs.iter().filter_map(|c| c["feasible_random"].as_u64()).min().unwrap_or(0);
    let min_grid = cs.iter().filter_map(|c| c["feasible_grid"].as_u64()).min().unwrap_or(0);
    let min_f = cs.iter().filter_map(|c| c["min_f"].as_f64()).fold(f64::INFINITY, f64::min);
    Outcome {
        passed: ok && cs.len() == 10 && min_random >= 100_000 && min_grid > 0,
        detail: format!(
            "{d}; max C_est {}, min f {min_f:e}, fewest feasible random {min_random}, fewest grid {min_grid}",
            metric(&r, "max_c_est")
        ),
    }
}

fn c5_general(out: &Path) -> Outcome {
    let mut cfg = base(out);
    cfg.m_list = (3..=8).collect();
    cfg.dims = vec![4, 5, 6];
    cfg.lemma.averaging_trials = 100_000;
    cfg.lemma.claim_instances = 10_000;
    let r = run(Command::LemmaScan, &cfg);
    let (ok, d) = checks_pass(&r, &["feasible_found", "c_est_finite", "averaging_violations", "proof_claims"]);
    let cs = cases(&r);
    let min_trials = cs.iter().filter_map(|c| c["averaging_trials"].as_u64()).min().unwrap_or(0);
    let min_claims = cs.iter().filter_map(|c| c["claim_instances"].as_u64()).min().unwrap_or(0);
    let worst = cs
        .iter()
        .filter_map(|c| c["averaging_worst"].as_f64())
        .fold(f64::NEG_INFINITY, f64::max);
    Outcome {
        passed: ok && cs.len() == 18 && min_trials == 100_000 && min_claims == 10_000,
        detail: format!(
            "{d}; max C_est {}, worst averaging excess {worst:e}, fewest trials {min_trials}, fewest claim instances {min_claims}",
            metric(&r, "max_c_est")
        ),
    }
}

fn ode_cfg(out: &Path) -> RunConfig {
    let mut cfg = base(out);
    cfg.dims = vec![4, 5, 6];
    cfg.ode.orthant_runs = 0;
    cfg.ode.hi_runs = 0;
    cfg.ode.comparison_samples = 0;
    cfg
}

fn c6_patterns(out: &Path) -> Outcome {
    let r = run(Command::OdeRun, &ode_cfg(out));
    let (ok, d) = checks_pass(&r, &["sphere_", "cylinder_", "zero_fixed_point"]);
    Outcome { passed: ok, detail: d }
}

fn c7_orthant(out: &Path) -> Outcome {
    let mut cfg = ode_cfg(out);
    cfg.dims = vec![4, 5];
    cfg.ode.orthant_runs = 200;
    let r = run(Command::OdeRun, &cfg);
    let (ok, d) = checks_pass(&r, &["orthant_invariance"]);
    Outcome {
        passed: ok,
        detail: format!("{d}; batches {}", metric(&r, "orthant")),
    }
}

fn c8_comparison(out: &Path) -> Outcome {
    let mut cfg = ode_cfg(out);
    cfg.dims = vec![4];
    cfg.ode.comparison_samples = 10_000;
    let r = run(Command::OdeRun, &cfg);
    let (ok, d) = checks_pass(&r, &["comparison_"]);
    Outcome {
        passed: ok,
        detail: format!("{d}; {}", metric(&r, "comparison")),
    }
}

fn c9_hi(out: &Path) -> Outcome {
    let mut cfg = ode_cfg(out);
    cfg.ode.hi_runs = 100;
    cfg.ode.hi_t_end = 5.0;
    let r = run(Command::OdeRun, &cfg);
    let (ok, d) = checks_pass(&r, &["hi_margin_constrained"]);
    let batches = metric(&r, "hi_constrained").as_array().cloned().unwrap_or_default();
    let full = batches.len() == 3 && batches.iter().all(|b| b["runs"].as_u64() == Some(100));
    Outcome {
        passed: ok && full,
        detail: format!("{d}; batches {}", metric(&r, "hi_constrained")),
    }
}

fn c10_soliton(out: &Path) -> Outcome {
    let mut cfg = base(out);
    cfg.dims = vec![4, 5, 6];
    cfg.soliton.points = 100;
    let r = run(Command::SolitonVerify, &cfg);
    let (ok, d) = checks_pass(&r, &[""]);
    let growth = r.checks.iter().filter(|c| c.name.starts_with("growth_f_margin")).count();
    Outcome {
        passed: ok && growth == 9,
        detail: d,
    }
}

fn c11_determinism(root: &Path) -> Outcome {
    let mut mismatched = Vec::new();
    for cmd in [Command::LemmaScan, Command::IdentityFuzz, Command::OdeRun, Command::SolitonVerify] {
        let mut first = None;
        for (k, jobs) in [1usize, 2, 1].into_iter().enumerate() {
            let mut cfg = base(&root.join(format!("run{k}")));
            cfg.fuzz.samples = 100_000;
            let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build().unwrap();
            pool.install(|| run(cmd, &cfg));
            let bytes = std::fs::read(cfg.out.join(cmd.suite()).join("summary.json")).unwrap();
            match &first {
                None => first = Some(bytes),
                Some(b) if *b != bytes => mismatched.push(format!("{} (run {k})", cmd.suite())),
                Some(_) => {}
            }
        }
    }
    Outcome {
        passed: mismatched.is_empty(),
        detail: if mismatched.is_empty() {
            "4 suites, 3 runs each (1, 2, 1 threads)".into()
        } else {
            format!("differs: {}", mismatched.join(", "))
        },
    }
}

fn main() {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let t = tmp.path();
    type Case<'a> = (&'a str, Duration, Box<dyn Fn() -> Outcome + 'a>);
    let secs = Duration::from_secs;
    let cases: Vec<Case> = vec![
        ("1 M# oracle equivalence", secs(10), Box::new(|| c1_oracle(&t.join("c1")))),
        ("2 Weyl reconstruction", secs(10), Box::new(c2_weyl)),
        ("3 complete-square identity", secs(60), Box::new(|| c3_identity(&t.join("c3")))),
        ("4 pinching bound, m in {1,2}", secs(300), Box::new(|| c4_case1(&t.join("c4")))),
        ("5 pinching bound, m in 3..8", secs(600), Box::new(|| c5_general(&t.join("c5")))),
        ("6 ODE closed forms", secs(30), Box::new(|| c6_patterns(&t.join("c6")))),
        ("7 orthant invariance", secs(60), Box::new(|| c7_orthant(&t.join("c7")))),
        ("8 comparison bound", secs(5), Box::new(|| c8_comparison(&t.join("c8")))),
        ("9 Hamilton-Ivey margin, constrained", secs(120), Box::new(|| c9_hi(&t.join("c9")))),
        ("10 soliton models", secs(10), Box::new(|| c10_soliton(&t.join("c10")))),
        ("11 determinism", Duration::MAX, Box::new(|| c11_determinism(&t.join("c11")))),
    ];
    let mut failed = 0;
    for (name, budget, f) in cases {
        let start = Instant::now();
        let o = f();
        let el = start.elapsed();
        let in_time = el <= budget;
        let passed = o.passed && in_time;
        failed += usize::from(!passed);
        let limit = if budget == Duration::MAX {
            String::new()
        } else {
            format!(" / {}s", budget.as_secs())
        };
        let late = if in_time { "" } else { " OVER TIME BUDGET" };
        println!(
            "{} [{name}] {} ({:.2}s{limit}{late})",
            if passed { "PASS" } else { "FAIL" },
            o.detail,
            el.as_secs_f64()
        );
    }
    println!("{} of 11 criteria passed", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
