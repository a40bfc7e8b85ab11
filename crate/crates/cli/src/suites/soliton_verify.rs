use pinchkit::{growth_bound_check, hess_bound_check, soliton_residual, SolitonModel};
use serde::Serialize;

use super::{stream, tags};
use crate::config::RunConfig;
use crate::error::CliError;
use crate::report::{fmt_f64, Check, RunReport, SuiteDir};

pub const SUITE: &str = "soliton-verify";

#[derive(Debug, Serialize)]
struct ModelSummary {
    kind: String,
    n: usize,
    points: usize,
    max_tensor_residual: f64,
    max_scalar_residual: f64,
    min_r_le_f: f64,
    min_hess_margin: f64,
    min_geodesic_margin: f64,
    min_f_margin: f64,
    min_curv_margin: f64,
    a_used: Option<f64>,
}

pub fn run(cfg: &RunConfig, self_test: bool) -> Result<RunReport, CliError> {
    let kinds = cfg.soliton_kinds()?;
    let dir = SuiteDir::new(&cfg.out, SUITE)?;
    let mut report = RunReport::new(SUITE, cfg);
    let tol = cfg.tolerances.soliton;
    let sc = &cfg.soliton;
    if self_test {
        report.warn("self-test: potential shifted by 1e-6 in the scalar identity");
    }
    let mut rows = Vec::new();
    let mut models = Vec::new();

    for kind in kinds {
        for &n in &cfg.dims {
            let model = SolitonModel::new(kind, n).map_err(|e| CliError::Config(e.to_string()))?;
            let mut rng = stream(cfg.seed, tags::SOLITON, (kind as u64) << 8 | n as u64);
            let label = format!("{kind},n={n}");
            let pts: Vec<_> = (0..sc.points).map(|_| model.sample_point(&mut rng, sc.extent)).collect();
            let r_scalar = model.scalar_curvature().map_err(|e| CliError::Config(e.to_string()))?;
            let base = model.basepoint();

            let mut s = ModelSummary {
                kind: kind.to_string(),
                n,
                points: pts.len(),
                max_tensor_residual: 0.0,
                max_scalar_residual: 0.0,
                min_r_le_f: f64::INFINITY,
                min_hess_margin: f64::INFINITY,
                min_geodesic_margin: f64::INFINITY,
                min_f_margin: f64::INFINITY,
                min_curv_margin: f64::INFINITY,
                a_used: None,
            };
            let err = |e: pinchkit::Error| CliError::Config(e.to_string());
            for (k, p) in pts.iter().enumerate() {
                let mut res = soliton_residual(&model, p).map_err(err)?;
                if self_test {
                    res.scalar += 1e-6;
                }
                let f = model.potential(p).map_err(err)?;
                s.max_tensor_residual = s.max_tensor_residual.max(res.tensor);
                s.max_scalar_residual = s.max_scalar_residual.max(res.scalar);
                s.min_r_le_f = s.min_r_le_f.min(f - r_scalar);

                let x = &pts[(k + 1) % pts.len()];
                let h = hess_bound_check(&model, p, x, sc.geodesic_samples).map_err(err)?;
                s.min_hess_margin = s.min_hess_margin.min(h.margin);
                s.min_geodesic_margin = s.min_geodesic_margin.min(h.geodesic_margin);

                rows.push(vec![
                    kind.to_string(),
                    n.to_string(),
                    fmt_f64(model.distance(&base, p).map_err(err)?),
                    fmt_f64(f),
                    fmt_f64(res.tensor),
                    fmt_f64(res.scalar),
                    fmt_f64(h.geodesic_margin),
                ]);
            }
            // Growth from the basepoint and from one sampled point.
            let mut a_used = Some(0.0_f64);
            for p in [Some(&base), pts.first()].into_iter().flatten() {
                let g = growth_bound_check(&model, p, &pts).map_err(err)?;
                s.min_f_margin = s.min_f_margin.min(g.f_margin);
                s.min_r_le_f = s.min_r_le_f.min(g.r_le_f_margin);
                s.min_curv_margin = s.min_curv_margin.min(g.curv_margin);
                a_used = match (a_used, g.a_used) {
                    (Some(a), Some(b)) => Some(a.max(b)),
                    _ => None,
                };
                if g.a_used.is_none() {
                    report.push(Check::flag(format!("growth_a_found[{label}]"), false, "no menu value of a suffices"));
                }
            }

            s.a_used = a_used.filter(|&a| a > 0.0);
            if !pts.is_empty() {
                report.push(Check::at_most(format!("tensor_residual[{label}]"), s.max_tensor_residual, tol));
                report.push(Check::at_most(format!("scalar_residual[{label}]"), s.max_scalar_residual, tol));
                report.push(Check::at_least_neg(format!("r_le_f[{label}]"), s.min_r_le_f, tol));
                report.push(Check::at_least_neg(format!("hess_margin[{label}]"), s.min_hess_margin, tol));
                report.push(Check::at_least_neg(format!("geodesic_margin[{label}]"), s.min_geodesic_margin, tol));
                report.push(Check::at_least_neg(format!("growth_f_margin[{label}]"), s.min_f_margin, tol));
            }
            models.push(s);
        }
    }
    if sc.points == 0 {
        report.warn("vacuous: zero sample points per model");
    }
    report.metric("models", &models);
    let header = ["kind", "n", "d_base", "f", "tensor_residual", "scalar_residual", "geodesic_margin"].map(String::from);
    dir.write_csv("points.csv", &header, &rows)?;
    dir.write_summary(&report)?;
    Ok(report)
}
