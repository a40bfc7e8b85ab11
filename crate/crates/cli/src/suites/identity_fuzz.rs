use std::collections::BTreeMap;

use pinchkit::{lie_algebra_square_closed, lie_algebra_square_oracle, reaction_quadratic, structure_constants, WedgeDiagonal};
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::{stream, tags};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::report::{fmt_f64, Check, RunReport, SuiteDir};

pub const SUITE: &str = "identity-fuzz";

const CHUNK: u64 = 8192;
const ORACLE_RANGE: f64 = 2.0;

#[derive(Debug, Clone, Copy, Default, Serialize)]
struct Cell {
    count: u64,
    max_rel: f64,
}

#[derive(Debug, Serialize)]
struct Worst {
    rel_err: f64,
    n: usize,
    m0: u32,
    mvec: Vec<f64>,
}

fn fuzz_chunk(cfg: &RunConfig, c: u64, fault: bool) -> (BTreeMap<(usize, u32), Cell>, Option<Worst>) {
    let f = &cfg.fuzz;
    let mut rng = stream(cfg.seed, tags::FUZZ, c);
    let count = CHUNK.min(f.samples - c * CHUNK);
    let mut cells: BTreeMap<(usize, u32), Cell> = BTreeMap::new();
    let mut worst: Option<Worst> = None;
    for _ in 0..count {
        let n = rng.gen_range(4..=f.max_n);
        let m0 = rng.gen_range(0..=f.max_m0);
        let mut mvec: Vec<f64> = (0..n).map(|_| rng.gen_range(-f.range..=f.range)).collect();
        mvec.sort_by(f64::total_cmp);
        let mut rq = reaction_quadratic(&mvec, m0).expect("sorted input of length >= 4");
        if fault {
            rq.square_term *= 1.0 + 1e-6;
        }
        let err = rq.identity_error();
        let cell = cells.entry((n, m0)).or_default();
        cell.count += 1;
        cell.max_rel = cell.max_rel.max(err);
        if worst.as_ref().map_or(true, |w| err > w.rel_err) {
            worst = Some(Worst { rel_err: err, n, m0, mvec });
        }
    }
    (cells, worst)
}

pub fn run(cfg: &RunConfig, self_test: bool) -> Result<RunReport, CliError> {
    let dir = SuiteDir::new(&cfg.out, SUITE)?;
    let mut report = RunReport::new(SUITE, cfg);
    let tol = &cfg.tolerances;
    if self_test {
        report.warn("self-test: square-term coefficient perturbed by 1e-6");
    }

    let samples = cfg.fuzz.samples;
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<_> = (0..chunks).into_par_iter().map(|c| fuzz_chunk(cfg, c, self_test)).collect();
    let mut cells: BTreeMap<(usize, u32), Cell> = BTreeMap::new();
    let mut worst: Option<Worst> = None;
    for (part, w) in parts {
        for (k, v) in part {
            let cell = cells.entry(k).or_default();
            cell.count += v.count;
            cell.max_rel = cell.max_rel.max(v.max_rel);
        }
        if let Some(w) = w {
            if worst.as_ref().map_or(true, |b| w.rel_err > b.rel_err) {
                worst = Some(w);
            }
        }
    }
    let max_rel = worst.as_ref().map_or(0.0, |w| w.rel_err);
    if samples == 0 {
        report.warn("vacuous: zero identity samples requested");
    }
    report.metric("vacuous", samples == 0);
    report.metric("identity_samples", samples);
    report.metric("identity_max_rel_err", max_rel);
    report.metric("identity_worst", &worst);
    report.push(Check::at_most("complete_square_identity", max_rel, tol.identity_rel));

    let mut oracle_rows = Vec::new();
    let mut oracle_diag = 0.0_f64;
    let mut oracle_off = 0.0_f64;
    for &n in &cfg.fuzz.oracle_dims {
        let sc = structure_constants(n).map_err(|e| CliError::Config(e.to_string()))?;
        let mut rng = stream(cfg.seed, tags::ORACLE, n as u64);
        let (mut d_max, mut o_max) = (0.0_f64, 0.0_f64);
        for _ in 0..cfg.fuzz.oracle_samples {
            let w = WedgeDiagonal::from_fn(n, |_, _| rng.gen_range(-ORACLE_RANGE..=ORACLE_RANGE));
            let full = lie_algebra_square_oracle(&w, &sc).expect("matching dimension");
            let closed = lie_algebra_square_closed(&w);
            let d = full
                .diagonal()
                .iter()
                .zip(closed.pairs())
                .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            d_max = d_max.max(d);
            o_max = o_max.max(full.max_off_diagonal());
        }
        oracle_rows.push(vec![
            n.to_string(),
            cfg.fuzz.oracle_samples.to_string(),
            fmt_f64(d_max),
            fmt_f64(o_max),
        ]);
        oracle_diag = oracle_diag.max(d_max);
        oracle_off = oracle_off.max(o_max);
    }
    report.metric("oracle_max_diag_dev", oracle_diag);
    report.metric("oracle_max_offdiag", oracle_off);
    report.push(Check::at_most("oracle_diagonal", oracle_diag, tol.oracle));
    report.push(Check::at_most("oracle_offdiagonal", oracle_off, tol.oracle));

    let header = ["n", "m0", "count", "max_rel_err"].map(String::from);
    let rows: Vec<Vec<String>> = cells
        .iter()
        .map(|((n, m0), c)| vec![n.to_string(), m0.to_string(), c.count.to_string(), fmt_f64(c.max_rel)])
        .collect();
    dir.write_csv("identity.csv", &header, &rows)?;
    dir.write_csv("oracle.csv", &["n", "samples", "max_diag_dev", "max_offdiag"].map(String::from), &oracle_rows)?;
    dir.write_summary(&report)?;
    Ok(report)
}
