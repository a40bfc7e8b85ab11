//! Curvature of metrics with vanishing Weyl tensor, in a Ricci eigenframe.
//!
//! All formulas are pointwise in an orthonormal frame that diagonalises the
//! Ricci tensor, so the metric is the identity and `Ric = diag(λ_1, …, λ_n)`.
//! With vanishing Weyl tensor the Riemann tensor is fixed by the Ricci tensor:
//!
//! ```text
//! R_ijkl = (R_ik g_jl + R_jl g_ik − R_il g_jk − R_jk g_il)/(n−2)
//!          − R (g_ik g_jl − g_il g_jk)/((n−1)(n−2))
//! ```
//!
//! and the curvature operator is diagonal on `√2 e_i∧e_j` with eigenvalue
//! `M_ij = M_i + M_j`, `M_i = 2λ_i/(n−2) − R/((n−1)(n−2))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pairs::{pair_count, pair_index, pairs};
use crate::MAX_DIM;

/// Absolute tolerance for exact algebraic identities, scaled by `max(1, |R|_∞)`.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Ordered Ricci eigenvalues at a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RicciSpectrum {
    lambdas: Vec<f64>,
    scalar: f64,
}

impl RicciSpectrum {
    /// Builds a spectrum; the eigenvalues are stored in ascending order.
    pub fn new(mut lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.len() < 4 {
            return Err(Error::DimensionTooSmall {
                n: lambdas.len(),
                min: 4,
            });
        }
        if lambdas.iter().any(|l| !l.is_finite()) {
            return Err(Error::NonFinite);
        }
        lambdas.sort_by(f64::total_cmp);
        let scalar = lambdas.iter().sum();
        Ok(Self { lambdas, scalar })
    }

    pub fn n(&self) -> usize {
        self.lambdas.len()
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// Scalar curvature `R = Σ λ_i`.
    pub fn scalar(&self) -> f64 {
        self.scalar
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WedgeKind {
    RankStructured,
    General,
}

/// A curvature operator that is diagonal in the wedge basis, stored as its
/// pair values `W_ij` in lexicographic pair order.
///
/// Rank-structured operators additionally carry the per-index values `M_i`
/// with `W_ij = M_i + M_j` exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WedgeDiagonal {
    n: usize,
    pairs: Vec<f64>,
    m_vec: Option<Vec<f64>>,
}

impl WedgeDiagonal {
    /// General symmetric pair array, `pairs[k]` for the `k`-th pair in lexicographic order.
    pub fn general(n: usize, pairs: Vec<f64>) -> Result<Self> {
        if n < 2 {
            return Err(Error::DimensionTooSmall { n, min: 2 });
        }
        if pairs.len() != pair_count(n) {
            return Err(Error::LengthMismatch {
                expected: pair_count(n),
                got: pairs.len(),
            });
        }
        Ok(Self {
            n,
            pairs,
            m_vec: None,
        })
    }

    pub fn from_fn(n: usize, mut value: impl FnMut(usize, usize) -> f64) -> Self {
        Self {
            n,
            pairs: pairs(n).map(|(i, j)| value(i, j)).collect(),
            m_vec: None,
        }
    }

    /// Rank-structured operator `W_ij = M_i + M_j`.
    pub fn rank_structured(m_vec: Vec<f64>) -> Self {
        let n = m_vec.len();
        let pairs = pairs(n).map(|(i, j)| m_vec[i] + m_vec[j]).collect();
        Self {
            n,
            pairs,
            m_vec: Some(m_vec),
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Self::from_fn(n, |_, _| c)
    }

    pub fn zeros(n: usize) -> Self {
        Self::constant(n, 0.0)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> WedgeKind {
        if self.m_vec.is_some() {
            WedgeKind::RankStructured
        } else {
            WedgeKind::General
        }
    }

    pub fn pairs(&self) -> &[f64] {
        &self.pairs
    }

    pub fn m_vec(&self) -> Option<&[f64]> {
        self.m_vec.as_deref()
    }

    /// `W_ij`, symmetric in `i, j`. Panics when `i == j`.
    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        assert_ne!(i, j, "pair values are defined for i != j only");
        self.pairs[pair_index(self.n, i, j)]
    }

    /// Drops the rank structure, keeping the pair values.
    pub fn into_general(mut self) -> Self {
        self.m_vec = None;
        self
    }

    pub fn into_pairs(self) -> Vec<f64> {
        self.pairs
    }

    pub fn max_abs(&self) -> f64 {
        self.pairs.iter().fold(0.0, |acc, w| acc.max(w.abs()))
    }

    /// Least pair value, the least eigenvalue of the operator.
    pub fn min_pair(&self) -> f64 {
        self.pairs.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `Σ_{i<j} W_ij`, the scalar curvature.
    pub fn trace(&self) -> f64 {
        self.pairs.iter().sum()
    }
}

/// `M_i = 2λ_i/(n−2) − R/((n−1)(n−2))` for eigenvalues in any order.
pub fn wedge_values(lambdas: &[f64]) -> Vec<f64> {
    let n = lambdas.len() as f64;
    let scalar: f64 = lambdas.iter().sum();
    let shift = scalar / ((n - 1.0) * (n - 2.0));
    lambdas
        .iter()
        .map(|l| 2.0 * l / (n - 2.0) - shift)
        .collect()
}

/// Wedge-basis eigenvalues of the curvature operator of a conformally flat metric.
pub fn wedge_components(spec: &RicciSpectrum) -> WedgeDiagonal {
    WedgeDiagonal::rank_structured(wedge_values(spec.lambdas()))
}

/// Dense `R_ijkl` in an orthonormal frame.
#[derive(Debug, Clone, PartialEq)]
pub struct RiemannTensor {
    n: usize,
    data: Vec<f64>,
}

#[inline]
fn idx4(n: usize, i: usize, j: usize, k: usize, l: usize) -> usize {
    ((i * n + j) * n + k) * n + l
}

fn check_dim(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::DimensionTooSmall { n, min: 2 });
    }
    if n > MAX_DIM {
        return Err(Error::DimensionTooLarge { n, max: MAX_DIM });
    }
    Ok(())
}

impl RiemannTensor {
    /// Validates the pair symmetries and the first Bianchi identity before accepting `data`.
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        check_dim(n)?;
        if data.len() != n.pow(4) {
            return Err(Error::LengthMismatch {
                expected: n.pow(4),
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        let rm = Self { n, data };
        let tol = SYMMETRY_TOL * rm.max_abs().max(1.0);
        let (which, defect) = rm.symmetry_defect();
        if defect > tol {
            return Err(Error::SymmetryViolation { which, defect });
        }
        Ok(rm)
    }

    pub fn zeros(n: usize) -> Result<Self> {
        check_dim(n)?;
        Ok(Self {
            n,
            data: vec![0.0; n.pow(4)],
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.data[idx4(self.n, i, j, k, l)]
    }

    pub fn components(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    /// Largest violation over all index quadruples, with the identity it belongs to.
    pub fn symmetry_defect(&self) -> (&'static str, f64) {
        let n = self.n;
        let mut worst = ("none", 0.0_f64);
        let mut note = |which, v: f64| {
            if v > worst.1 {
                worst = (which, v);
            }
        };
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        let r = self.get(i, j, k, l);
                        note("R_ijkl = -R_jikl", (r + self.get(j, i, k, l)).abs());
                        note("R_ijkl = -R_ijlk", (r + self.get(i, j, l, k)).abs());
                        note("R_ijkl = R_klij", (r - self.get(k, l, i, j)).abs());
                        note(
                            "first Bianchi",
                            (r + self.get(i, k, l, j) + self.get(i, l, j, k)).abs(),
                        );
                    }
                }
            }
        }
        worst
    }

    /// `Ric_ik = Σ_j R_ijkj`, row-major `n × n`.
    pub fn ricci(&self) -> Vec<f64> {
        let n = self.n;
        let mut ric = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                ric[i * n + k] = (0..n).map(|j| self.get(i, j, k, j)).sum();
            }
        }
        ric
    }

    pub fn scalar(&self) -> f64 {
        let ric = self.ricci();
        (0..self.n).map(|i| ric[i * self.n + i]).sum()
    }
}

/// Right-hand side of the vanishing-Weyl decomposition for `Ric = diag(lambdas)`, `g = I`.
fn conformally_flat_part(lambdas: &[f64]) -> Vec<f64> {
    let n = lambdas.len();
    let nf = n as f64;
    let scalar: f64 = lambdas.iter().sum();
    let c1 = 1.0 / (nf - 2.0);
    let c2 = scalar / ((nf - 1.0) * (nf - 2.0));
    let delta = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let ric = |a: usize, b: usize| if a == b { lambdas[a] } else { 0.0 };
    let mut data = vec![0.0; n.pow(4)];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    let ricci_part = ric(i, k) * delta(j, l) + ric(j, l) * delta(i, k)
                        - ric(i, l) * delta(j, k)
                        - ric(j, k) * delta(i, l);
                    let metric_part = delta(i, k) * delta(j, l) - delta(i, l) * delta(j, k);
                    data[idx4(n, i, j, k, l)] = c1 * ricci_part - c2 * metric_part;
                }
            }
        }
    }
    data
}

/// Riemann tensor of a metric with vanishing Weyl tensor and the given Ricci spectrum.
pub fn riemann_from_spectrum(spec: &RicciSpectrum) -> Result<RiemannTensor> {
    RiemannTensor::new(spec.n(), conformally_flat_part(spec.lambdas()))
}

/// `W_ijkl = R_ijkl −` (Ricci and scalar terms built from `ric`).
#[derive(Debug, Clone, PartialEq)]
pub struct WeylTensor {
    n: usize,
    data: Vec<f64>,
}

impl WeylTensor {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.data[idx4(self.n, i, j, k, l)]
    }

    pub fn max_norm(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }
}

pub fn weyl_tensor(rm: &RiemannTensor, ric: &RicciSpectrum) -> Result<WeylTensor> {
    if rm.n() != ric.n() {
        return Err(Error::DimensionMismatch {
            expected: rm.n(),
            got: ric.n(),
        });
    }
    let flat = conformally_flat_part(ric.lambdas());
    let data = rm.data.iter().zip(&flat).map(|(r, c)| r - c).collect();
    Ok(WeylTensor { n: rm.n(), data })
}
