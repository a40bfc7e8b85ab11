//! Fixed-step and step-doubling RK4 for the reaction ODE with blow-up detection.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::curvature::WedgeDiagonal;
use crate::error::{Error, Result};
use crate::pairs::pair_count;
use crate::reaction::{conformal_project, hamilton_ivey_margin, pinch_scalars, rhs_into, PinchScalars};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Method {
    Rk4 { dt: f64 },
    /// Step doubling with Richardson extrapolation; `tol` bounds the relative
    /// max-norm difference between one full step and two half steps.
    Adaptive { tol: f64, dt0: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntegratorOptions {
    pub method: Method,
    /// Project onto `W_ij = M_i + M_j` after every accepted step.
    pub constrained: bool,
    pub t_end: f64,
    pub blowup_threshold: f64,
    /// Record a sample every `sample_dt`; `None` records every accepted step.
    pub sample_dt: Option<f64>,
    pub m_list: Vec<u32>,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self {
            method: Method::Adaptive { tol: 1e-10, dt0: 1e-4 },
            constrained: false,
            t_end: 1.0,
            blowup_threshold: 1e8,
            sample_dt: None,
            m_list: vec![0],
        }
    }
}

impl IntegratorOptions {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{what} must be positive and finite, got {v}")))
            }
        };
        match self.method {
            Method::Rk4 { dt } => pos(dt, "dt")?,
            Method::Adaptive { tol, dt0 } => {
                pos(tol, "tol")?;
                pos(dt0, "dt0")?;
            }
        }
        pos(self.t_end, "t_end")?;
        pos(self.blowup_threshold, "blowup_threshold")?;
        if let Some(s) = self.sample_dt {
            pos(s, "sample_dt")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdeState {
    pub t: f64,
    pub w: WedgeDiagonal,
    /// Distance of `w` to the rank-structured subspace.
    pub conformal_residual: f64,
    /// Residual removed by the projection that produced this state (constrained mode).
    pub removed_residual: f64,
    pub scalars: PinchScalars,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub samples: Vec<OdeState>,
    /// Time at which `max|W|` first exceeded the threshold.
    pub blowup: Option<f64>,
    /// The adaptive step collapsed before the threshold was reached.
    pub step_underflow: bool,
    pub steps: usize,
    pub rejected: usize,
    pub max_removed_residual: f64,
    /// Largest removed residual divided by `max|W|` of the same step.
    pub max_relative_removed_residual: f64,
}

impl Trajectory {
    pub fn last(&self) -> &OdeState {
        self.samples.last().expect("trajectory holds the initial state")
    }
}

fn rk4_step(n: usize, y: &[f64], h: f64, out: &mut [f64], scratch: &mut [Vec<f64>; 5]) {
    let [k1, k2, k3, k4, tmp] = scratch;
    rhs_into(n, y, k1);
    for p in 0..y.len() {
        tmp[p] = y[p] + 0.5 * h * k1[p];
    }
    rhs_into(n, tmp, k2);
    for p in 0..y.len() {
        tmp[p] = y[p] + 0.5 * h * k2[p];
    }
    rhs_into(n, tmp, k3);
    for p in 0..y.len() {
        tmp[p] = y[p] + h * k3[p];
    }
    rhs_into(n, tmp, k4);
    for p in 0..y.len() {
        out[p] = y[p] + h / 6.0 * (k1[p] + 2.0 * k2[p] + 2.0 * k3[p] + k4[p]);
    }
}

fn max_abs(y: &[f64]) -> f64 {
    y.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

fn make_state(n: usize, t: f64, y: &[f64], constrained: bool, removed: f64, opts: &IntegratorOptions) -> OdeState {
    let general = WedgeDiagonal::general(n, y.to_vec()).expect("pair count matches");
    let proj = conformal_project(&general);
    let w = if constrained {
        WedgeDiagonal::rank_structured(proj.m_vec.clone())
    } else {
        general
    };
    let mut scalars = pinch_scalars(&w, &opts.m_list);
    scalars.hi_margin = hamilton_ivey_margin(&scalars, t, n);
    OdeState {
        t,
        w,
        conformal_residual: if constrained { 0.0 } else { proj.residual },
        removed_residual: removed,
        scalars,
    }
}

/// Smallest admissible adaptive step relative to the current time.
const UNDERFLOW: f64 = 1e-15;

pub fn integrate(w0: &WedgeDiagonal, opts: &IntegratorOptions) -> Result<Trajectory> {
    opts.validate()?;
    let n = w0.n();
    let np = pair_count(n);
    let mut y: Vec<f64> = w0.pairs().to_vec();
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let mut removed0 = 0.0;
    if opts.constrained {
        let p = conformal_project(w0);
        removed0 = p.residual;
        y = p.projected().into_pairs();
    }

    let mut traj = Trajectory {
        samples: vec![make_state(n, 0.0, &y, opts.constrained, removed0, opts)],
        blowup: None,
        step_underflow: false,
        steps: 0,
        rejected: 0,
        max_removed_residual: 0.0,
        max_relative_removed_residual: 0.0,
    };
    if max_abs(&y) > opts.blowup_threshold {
        traj.blowup = Some(0.0);
        return Ok(traj);
    }

    let mut scratch: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; np]);
    let mut full = vec![0.0; np];
    let mut half = vec![0.0; np];
    let mut two = vec![0.0; np];

    let mut t = 0.0;
    let mut h = match opts.method {
        Method::Rk4 { dt } => dt,
        Method::Adaptive { dt0, .. } => dt0,
    };
    let mut sample_k: u64 = 1;

    while t < opts.t_end {
        let next_mark = match opts.sample_dt {
            Some(s) => (sample_k as f64 * s).min(opts.t_end),
            None => opts.t_end,
        };
        let h_try = h.min(next_mark - t);
        let clamped = h_try < h;

        let (accepted, h_next) = match opts.method {
            Method::Rk4 { .. } => {
                rk4_step(n, &y, h_try, &mut two, &mut scratch);
                (true, h)
            }
            Method::Adaptive { tol, .. } => {
                rk4_step(n, &y, h_try, &mut full, &mut scratch);
                rk4_step(n, &y, 0.5 * h_try, &mut half, &mut scratch);
                let mid = half.clone();
                rk4_step(n, &mid, 0.5 * h_try, &mut two, &mut scratch);
                let diff = full.iter().zip(&two).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
                let scale = max_abs(&two).max(f64::MIN_POSITIVE);
                let err = if diff == 0.0 { 0.0 } else { diff / scale };
                if err.is_finite() && err <= tol {
                    for p in 0..np {
                        two[p] += (two[p] - full[p]) / 15.0;
                    }
                    let grow = if err == 0.0 { 5.0 } else { (0.9 * (tol / err).powf(0.2)).clamp(0.2, 5.0) };
                    (true, if clamped { h } else { h_try * grow })
                } else {
                    let shrink = if err.is_finite() { (0.9 * (tol / err).powf(0.2)).clamp(0.1, 0.5) } else { 0.1 };
                    (false, h_try * shrink)
                }
            }
        };

        if !accepted {
            traj.rejected += 1;
            h = h_next;
            if h < UNDERFLOW * t.max(1.0) {
                traj.step_underflow = true;
                traj.blowup = Some(t);
                break;
            }
            continue;
        }

        traj.steps += 1;
        t = if clamped || t + h_try >= next_mark { next_mark } else { t + h_try };
        h = h_next;
        std::mem::swap(&mut y, &mut two);

        let size = max_abs(&y);
        if !size.is_finite() || size > opts.blowup_threshold || y.iter().any(|v| !v.is_finite()) {
            traj.blowup = Some(t);
            break;
        }

        let mut removed = 0.0;
        if opts.constrained {
            let general = WedgeDiagonal::general(n, y.clone()).expect("pair count matches");
            let p = conformal_project(&general);
            removed = p.residual;
            traj.max_removed_residual = traj.max_removed_residual.max(removed);
            if size > 0.0 {
                traj.max_relative_removed_residual = traj.max_relative_removed_residual.max(removed / size);
            }
            y = p.projected().into_pairs();
        }

        let at_mark = opts.sample_dt.is_none() || t >= next_mark;
        if at_mark {
            traj.samples.push(make_state(n, t, &y, opts.constrained, removed, opts));
            if opts.sample_dt.is_some() {
                sample_k += 1;
            }
        }
    }
    Ok(traj)
}

/// Integrates independent initial data in parallel; output order follows input order.
pub fn integrate_batch(inits: &[WedgeDiagonal], opts: &IntegratorOptions) -> Vec<Result<Trajectory>> {
    inits.par_iter().map(|w| integrate(w, opts)).collect()
}
