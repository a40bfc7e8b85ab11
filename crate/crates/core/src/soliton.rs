//! Normalized gradient shrinking solitons (`Ric + Hess f = ½g`, `R + |∇f|² = f`)
//! on the flat, round and cylindrical models, evaluated in adapted orthonormal frames.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::curvature::{RicciSpectrum, RiemannTensor};
use crate::error::{Error, Result};
use crate::MAX_DIM;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolitonKind {
    Gaussian,
    RoundSphere,
    Cylinder,
}

impl SolitonKind {
    pub const ALL: [SolitonKind; 3] = [SolitonKind::Gaussian, SolitonKind::RoundSphere, SolitonKind::Cylinder];

    pub fn name(self) -> &'static str {
        match self {
            SolitonKind::Gaussian => "gaussian",
            SolitonKind::RoundSphere => "round_sphere",
            SolitonKind::Cylinder => "cylinder",
        }
    }
}

impl fmt::Display for SolitonKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolitonKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown soliton kind {s:?}")))
    }
}

/// A point in model coordinates.
///
/// `Flat` holds Euclidean coordinates; `Spherical` a unit vector of `R^{n+1}`;
/// `Cylindrical` a unit vector of `R^n` for the sphere factor and the line coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModelPoint {
    Flat(Vec<f64>),
    Spherical(Vec<f64>),
    Cylindrical { u: Vec<f64>, s: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolitonModel {
    kind: SolitonKind,
    n: usize,
    /// Radius of the sphere factor, if any.
    radius: Option<f64>,
    /// `f = quad·q² + constant`, with `q` the flat or line coordinate.
    quad: f64,
    constant: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolitonResidual {
    /// Max-norm of `Ric + Hess f − ½g`.
    pub tensor: f64,
    /// `|R + |∇f|² − f|`.
    pub scalar: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HessBound {
    /// `½ − max eigenvalue of Hess f` over the sampled geodesic points.
    pub margin: f64,
    /// `½ − h''` for `h = f∘γ`, minimised over the samples.
    pub geodesic_margin: f64,
    /// `½ − (Hess f)_aa` for each frame direction `a`, minimised over the samples.
    pub per_direction: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub samples: usize,
    /// `min (¼d² + |∇f|(p)d + |f|(p) − f(x))`.
    pub f_margin: f64,
    /// `min (f − R)` over `p` and the sampled `x`.
    pub r_le_f_margin: f64,
    /// `min (exp(a(d²+1)) − max|R_ijkl|(x))` at `a_used`, or at the largest menu value.
    pub curv_margin: f64,
    /// Smallest value of [`A_MENU`] for which the curvature bound holds at every sample.
    pub a_used: Option<f64>,
}

pub const A_MENU: [f64; 3] = [0.25, 0.5, 1.0];

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Angle between unit vectors, stable near 0 and π.
fn angle(u: &[f64], v: &[f64]) -> f64 {
    let d: Vec<f64> = u.iter().zip(v).map(|(a, b)| a - b).collect();
    let s: Vec<f64> = u.iter().zip(v).map(|(a, b)| a + b).collect();
    2.0 * norm(&d).atan2(norm(&s))
}

/// Great-circle interpolation at fraction `tau` of the way from `u` to `v`.
fn slerp(u: &[f64], v: &[f64], tau: f64) -> Vec<f64> {
    let th = angle(u, v);
    if th < 1e-12 {
        return u.to_vec();
    }
    let a = ((1.0 - tau) * th).sin() / th.sin();
    let b = (tau * th).sin() / th.sin();
    let w: Vec<f64> = u.iter().zip(v).map(|(x, y)| a * x + b * y).collect();
    let r = norm(&w);
    w.into_iter().map(|x| x / r).collect()
}

const UNIT_TOL: f64 = 1e-12;

fn random_unit(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let r = norm(&v);
        if r > 0.1 && r <= 1.0 {
            return v.into_iter().map(|x| x / r).collect();
        }
    }
}

impl SolitonModel {
    pub fn new(kind: SolitonKind, n: usize) -> Result<Self> {
        if n < 4 {
            return Err(Error::DimensionTooSmall { n, min: 4 });
        }
        if n > MAX_DIM {
            return Err(Error::DimensionTooLarge { n, max: MAX_DIM });
        }
        let nf = n as f64;
        let (radius, quad, constant) = match kind {
            SolitonKind::Gaussian => (None, 0.25, 0.0),
            // (n−1)/r² = ½; f = R = n/2.
            SolitonKind::RoundSphere => (Some((2.0 * (nf - 1.0)).sqrt()), 0.0, nf / 2.0),
            // (n−2)/r² = ½ on S^{n−1}; at s = 0, f = R = (n−1)/2.
            SolitonKind::Cylinder => (Some((2.0 * (nf - 2.0)).sqrt()), 0.25, (nf - 1.0) / 2.0),
        };
        Ok(Self {
            kind,
            n,
            radius,
            quad,
            constant,
        })
    }

    pub fn kind(&self) -> SolitonKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> Option<f64> {
        self.radius
    }

    /// Sectional curvature of the sphere factor.
    fn k_sphere(&self) -> f64 {
        self.radius.map_or(0.0, |r| 1.0 / (r * r))
    }

    /// Frame directions spanning the sphere factor.
    fn sphere_dims(&self) -> usize {
        match self.kind {
            SolitonKind::Gaussian => 0,
            SolitonKind::RoundSphere => self.n,
            SolitonKind::Cylinder => self.n - 1,
        }
    }

    fn check(&self, p: &ModelPoint) -> Result<()> {
        let bad = Err(Error::PointMismatch {
            kind: self.kind.name(),
            n: self.n,
        });
        let unit = |u: &[f64]| {
            if (norm(u) - 1.0).abs() > UNIT_TOL {
                Err(Error::InvalidParameter("sphere coordinate is not a unit vector".into()))
            } else {
                Ok(())
            }
        };
        match (self.kind, p) {
            (SolitonKind::Gaussian, ModelPoint::Flat(x)) if x.len() == self.n => Ok(()),
            (SolitonKind::RoundSphere, ModelPoint::Spherical(u)) if u.len() == self.n + 1 => unit(u),
            (SolitonKind::Cylinder, ModelPoint::Cylindrical { u, .. }) if u.len() == self.n => unit(u),
            _ => bad,
        }
    }

    pub fn basepoint(&self) -> ModelPoint {
        let e0 = |d: usize| {
            let mut e = vec![0.0; d];
            e[0] = 1.0;
            e
        };
        match self.kind {
            SolitonKind::Gaussian => ModelPoint::Flat(vec![0.0; self.n]),
            SolitonKind::RoundSphere => ModelPoint::Spherical(e0(self.n + 1)),
            SolitonKind::Cylinder => ModelPoint::Cylindrical { u: e0(self.n), s: 0.0 },
        }
    }

    /// Random point; flat and line coordinates are drawn from `[−extent, extent]`.
    pub fn sample_point(&self, rng: &mut impl Rng, extent: f64) -> ModelPoint {
        match self.kind {
            SolitonKind::Gaussian => ModelPoint::Flat((0..self.n).map(|_| rng.gen_range(-extent..=extent)).collect()),
            SolitonKind::RoundSphere => ModelPoint::Spherical(random_unit(rng, self.n + 1)),
            SolitonKind::Cylinder => ModelPoint::Cylindrical {
                u: random_unit(rng, self.n),
                s: rng.gen_range(-extent..=extent),
            },
        }
    }

    /// Flat coordinates or the line coordinate, as a vector.
    fn linear_part(p: &ModelPoint) -> Vec<f64> {
        match p {
            ModelPoint::Flat(x) => x.clone(),
            ModelPoint::Spherical(_) => Vec::new(),
            ModelPoint::Cylindrical { s, .. } => vec![*s],
        }
    }

    pub fn potential(&self, p: &ModelPoint) -> Result<f64> {
        self.check(p)?;
        let q = Self::linear_part(p);
        Ok(self.quad * dot(&q, &q) + self.constant)
    }

    pub fn grad_norm(&self, p: &ModelPoint) -> Result<f64> {
        self.check(p)?;
        Ok(2.0 * self.quad * norm(&Self::linear_part(p)))
    }

    /// First frame index of the sphere factor; linear directions come first, so the
    /// Ricci eigenvalues are ascending in the frame.
    fn sphere_start(&self) -> usize {
        self.n - self.sphere_dims()
    }

    /// Diagonal of `Hess f` in the adapted frame.
    pub fn hessian_diag(&self) -> Vec<f64> {
        let k = self.sphere_start();
        (0..self.n).map(|a| if a < k { 2.0 * self.quad } else { 0.0 }).collect()
    }

    /// `R_abcd = K(δ_ac δ_bd − δ_ad δ_bc)` on the sphere block, zero elsewhere.
    pub fn riemann(&self) -> Result<RiemannTensor> {
        let n = self.n;
        let k = self.sphere_start();
        let kk = self.k_sphere();
        let mut data = vec![0.0; n.pow(4)];
        for a in k..n {
            for b in k..n {
                if a == b {
                    continue;
                }
                data[((a * n + b) * n + a) * n + b] = kk;
                data[((a * n + b) * n + b) * n + a] = -kk;
            }
        }
        RiemannTensor::new(n, data)
    }

    /// Ricci eigenvalues in the adapted frame.
    pub fn ricci_spectrum(&self) -> Result<RicciSpectrum> {
        let ric = self.riemann()?.ricci();
        RicciSpectrum::new((0..self.n).map(|a| ric[a * self.n + a]).collect())
    }

    pub fn scalar_curvature(&self) -> Result<f64> {
        Ok(self.riemann()?.scalar())
    }

    pub fn distance(&self, p: &ModelPoint, x: &ModelPoint) -> Result<f64> {
        Ok(self.distance_sq(p, x)?.sqrt())
    }

    /// `d(p, x)²`, computed without a square root where the model allows it.
    pub fn distance_sq(&self, p: &ModelPoint, x: &ModelPoint) -> Result<f64> {
        self.check(p)?;
        self.check(x)?;
        let r = self.radius.unwrap_or(0.0);
        Ok(match (p, x) {
            (ModelPoint::Flat(a), ModelPoint::Flat(b)) => a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum(),
            (ModelPoint::Spherical(a), ModelPoint::Spherical(b)) => (r * angle(a, b)).powi(2),
            (ModelPoint::Cylindrical { u: a, s: sa }, ModelPoint::Cylindrical { u: b, s: sb }) => {
                (r * angle(a, b)).powi(2) + (sb - sa) * (sb - sa)
            }
            _ => unreachable!("checked above"),
        })
    }

    /// Point at arclength fraction `tau` along the minimizing geodesic from `p` to `x`.
    pub fn geodesic_point(&self, p: &ModelPoint, x: &ModelPoint, tau: f64) -> Result<ModelPoint> {
        self.check(p)?;
        self.check(x)?;
        Ok(match (p, x) {
            (ModelPoint::Flat(a), ModelPoint::Flat(b)) => {
                ModelPoint::Flat(a.iter().zip(b).map(|(u, v)| u + tau * (v - u)).collect())
            }
            (ModelPoint::Spherical(a), ModelPoint::Spherical(b)) => ModelPoint::Spherical(slerp(a, b, tau)),
            (ModelPoint::Cylindrical { u: a, s: sa }, ModelPoint::Cylindrical { u: b, s: sb }) => {
                ModelPoint::Cylindrical {
                    u: slerp(a, b, tau),
                    s: sa + tau * (sb - sa),
                }
            }
            _ => unreachable!("checked above"),
        })
    }

    /// Squared length of the linear part of the unit tangent from `p` to `x`;
    /// `None` when `p = x`.
    fn linear_tangent_sq(&self, p: &ModelPoint, x: &ModelPoint) -> Result<Option<f64>> {
        let d2 = self.distance_sq(p, x)?;
        if d2 == 0.0 {
            return Ok(None);
        }
        let lin: f64 = Self::linear_part(p)
            .iter()
            .zip(Self::linear_part(x))
            .map(|(a, b)| (b - a) * (b - a))
            .sum();
        Ok(Some(lin / d2))
    }
}

pub fn soliton_residual(model: &SolitonModel, point: &ModelPoint) -> Result<SolitonResidual> {
    let f = model.potential(point)?;
    let grad = model.grad_norm(point)?;
    let rm = model.riemann()?;
    let ric = rm.ricci();
    let hess = model.hessian_diag();
    let n = model.n();
    let mut tensor = 0.0_f64;
    for a in 0..n {
        for b in 0..n {
            let h = if a == b { hess[a] } else { 0.0 };
            let g = if a == b { 0.5 } else { 0.0 };
            tensor = tensor.max((ric[a * n + b] + h - g).abs());
        }
    }
    let scalar = (rm.scalar() + grad * grad - f).abs();
    Ok(SolitonResidual { tensor, scalar })
}

/// Samples `samples + 1` evenly spaced points on the geodesic from `p` to `x`.
pub fn hess_bound_check(model: &SolitonModel, p: &ModelPoint, x: &ModelPoint, samples: usize) -> Result<HessBound> {
    let hess = model.hessian_diag();
    let lin_sq = model.linear_tangent_sq(p, x)?;
    let mut per_direction = vec![f64::INFINITY; model.n()];
    let mut margin = f64::INFINITY;
    let mut geodesic_margin = f64::INFINITY;
    for k in 0..=samples {
        let tau = if samples == 0 { 0.0 } else { k as f64 / samples as f64 };
        let q = model.geodesic_point(p, x, tau)?;
        model.check(&q)?;
        // Hess f is constant in the adapted frame on all three models.
        let max_eig = hess.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        margin = margin.min(0.5 - max_eig);
        for (slot, h) in per_direction.iter_mut().zip(&hess) {
            *slot = slot.min(0.5 - h);
        }
        // h'' = Hess f(γ', γ'); only the linear directions contribute.
        let h2 = lin_sq.map_or(0.0, |l| 2.0 * model.quad * l);
        geodesic_margin = geodesic_margin.min(0.5 - h2);
    }
    Ok(HessBound {
        margin,
        geodesic_margin,
        per_direction,
    })
}

pub fn growth_bound_check(model: &SolitonModel, p: &ModelPoint, xs: &[ModelPoint]) -> Result<GrowthReport> {
    let fp = model.potential(p)?;
    let gp = model.grad_norm(p)?;
    let rm = model.riemann()?;
    let r_scalar = rm.scalar();
    let rm_max = rm.max_abs();
    let mut f_margin = f64::INFINITY;
    let mut r_le_f_margin = fp - r_scalar;
    let mut dists = Vec::with_capacity(xs.len());
    for x in xs {
        let d2 = model.distance_sq(p, x)?;
        let fx = model.potential(x)?;
        f_margin = f_margin.min(0.25 * d2 + gp * d2.sqrt() + fp.abs() - fx);
        r_le_f_margin = r_le_f_margin.min(fx - r_scalar);
        dists.push(d2);
    }
    let curv = |a: f64| dists.iter().map(|d2| (a * (d2 + 1.0)).exp() - rm_max).fold(f64::INFINITY, f64::min);
    let a_used = A_MENU.into_iter().find(|&a| curv(a) >= 0.0);
    let curv_margin = curv(a_used.unwrap_or(A_MENU[A_MENU.len() - 1]));
    Ok(GrowthReport {
        samples: xs.len(),
        f_margin,
        r_le_f_margin,
        curv_margin,
        a_used,
    })
}
