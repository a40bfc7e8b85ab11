//! The quadratic pinching function `f(x_1, …, x_n)` and its constraint system.
//!
//! With pair sums `M_ij = x_i + x_j` and `S = Σ_{i<j, {i,j}≠{1,2}} M_ij`:
//!
//! ```text
//! f = −S·[S + (m+1)M_12]/(m+1) − M_12·S
//!     + Σ_{i<j, {i,j}≠{1,2}} [M_ij² + Σ_{k≠i,j} M_ik M_jk] + (m+1) Σ_{k≠1,2} M_1k M_2k
//! ```
//!
//! Constraints for slack `ρ ≥ 0`:
//! (i) `x_1 ≤ x_2 ≤ min_{k≥3} x_k`, (ii) `S + m·M_12 ≥ −ρ`,
//! (iii) `S + (m+1)·M_12 < −(m+1)(m+n−1)·ρ`. Under these `f ≥ −C(m,n)·ρ²`.
//!
//! Indices in this API are zero-based: the distinguished pair is `{0, 1}`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[inline]
fn pair(x: &[f64], i: usize, j: usize) -> f64 {
    x[i] + x[j]
}

/// `S = Σ_{i<j, {i,j}≠{0,1}} (x_i + x_j)`.
pub(crate) fn pair_sum(x: &[f64]) -> f64 {
    let n = x.len();
    let mut s = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            if (i, j) != (0, 1) {
                s += pair(x, i, j);
            }
        }
    }
    s
}

/// `Σ_{k∉{i,j}} M_ik M_jk`.
#[inline]
fn cross_sum(x: &[f64], i: usize, j: usize) -> f64 {
    (0..x.len())
        .filter(|&k| k != i && k != j)
        .map(|k| pair(x, i, k) * pair(x, j, k))
        .sum()
}

/// Literal evaluation of `f`, no algebraic simplification.
pub(crate) fn pinching_f(x: &[f64], m: u32) -> f64 {
    let n = x.len();
    let mp1 = f64::from(m) + 1.0;
    let s = pair_sum(x);
    let m12 = pair(x, 0, 1);
    let linear = -s * (s + mp1 * m12) / mp1 - m12 * s;
    let mut quad = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            if (i, j) != (0, 1) {
                let mij = pair(x, i, j);
                quad += mij * mij + cross_sum(x, i, j);
            }
        }
    }
    linear + quad + mp1 * cross_sum(x, 0, 1)
}

/// Outcome of the three constraint predicates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Constraints {
    pub c1: bool,
    pub c2: bool,
    pub c3: bool,
}

impl Constraints {
    pub fn all(&self) -> bool {
        self.c1 && self.c2 && self.c3
    }

    fn describe_failures(&self) -> String {
        let mut v = Vec::new();
        if !self.c1 {
            v.push("(i)");
        }
        if !self.c2 {
            v.push("(ii)");
        }
        if !self.c3 {
            v.push("(iii)");
        }
        v.join(", ")
    }
}

pub(crate) fn constraints_of(x: &[f64], m: u32, rho: f64) -> Constraints {
    let n = x.len();
    let mf = f64::from(m);
    let s = pair_sum(x);
    let m12 = pair(x, 0, 1);
    let tail_min = x[2..].iter().copied().fold(f64::INFINITY, f64::min);
    Constraints {
        c1: x[0] <= x[1] && x[1] <= tail_min,
        c2: s + mf * m12 >= -rho,
        c3: s + (mf + 1.0) * m12 < -(mf + 1.0) * (mf + n as f64 - 1.0) * rho,
    }
}

/// A point `(x_1, …, x_n)` with integer `m ≥ 1` and slack `ρ ≥ 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinchingInstance {
    x: Vec<f64>,
    m: u32,
    rho: f64,
}

/// The six inequalities satisfied by a feasible reduced instance (`x_3 = … = x_n`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofClaims(pub [bool; 6]);

impl ProofClaims {
    pub fn all(&self) -> bool {
        self.0.iter().all(|&b| b)
    }
}

impl PinchingInstance {
    pub fn new(x: Vec<f64>, m: u32, rho: f64) -> Result<Self> {
        if x.len() < 4 {
            return Err(Error::DimensionTooSmall { n: x.len(), min: 4 });
        }
        if m == 0 {
            return Err(Error::InvalidParameter("m must be a positive integer".into()));
        }
        if !(rho >= 0.0) || !rho.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "rho must be finite and nonnegative, got {rho}"
            )));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { x, m, rho })
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn m12(&self) -> f64 {
        pair(&self.x, 0, 1)
    }

    pub fn pair_sum_s(&self) -> f64 {
        pair_sum(&self.x)
    }

    pub fn evaluate_f(&self) -> f64 {
        pinching_f(&self.x, self.m)
    }

    pub fn constraints(&self) -> Constraints {
        constraints_of(&self.x, self.m, self.rho)
    }

    pub fn is_feasible(&self) -> bool {
        self.constraints().all()
    }

    /// Tolerance scale for the quadratic `f`: `max(1, |x|²)`.
    pub fn scale(&self) -> f64 {
        self.x.iter().map(|v| v * v).sum::<f64>().max(1.0)
    }

    /// `x_3 = … = x_n` (zero-based: all coordinates from index 2 on are equal).
    pub fn is_reduced(&self) -> bool {
        self.x[2..].iter().all(|&v| v == self.x[2])
    }

    /// Replaces `x_i` and `x_j` by their mean. Both indices must be ≥ 2 (zero-based).
    pub fn averaging_step(&self, i: usize, j: usize) -> Result<Self> {
        for idx in [i, j] {
            if idx < 2 {
                return Err(Error::BadIndex {
                    index: idx,
                    reason: "averaging is only defined for coordinates other than the first two",
                });
            }
            if idx >= self.n() {
                return Err(Error::BadIndex {
                    index: idx,
                    reason: "out of range",
                });
            }
        }
        if i == j {
            return Err(Error::BadIndex {
                index: i,
                reason: "averaging needs two distinct coordinates",
            });
        }
        let mut x = self.x.clone();
        let mean = 0.5 * (x[i] + x[j]);
        x[i] = mean;
        x[j] = mean;
        Ok(Self { x, ..*self })
    }

    /// Evaluates the six intermediate inequalities on a feasible reduced instance.
    pub fn proof_claims(&self) -> Result<ProofClaims> {
        if !self.is_reduced() {
            return Err(Error::NotReduced);
        }
        let c = self.constraints();
        if !c.all() {
            return Err(Error::Infeasible(c.describe_failures()));
        }
        let n = self.n() as f64;
        let m = f64::from(self.m);
        let rho = self.rho;
        let m12 = self.m12();
        let m33 = 2.0 * self.x[2];
        let k = (n - 1.0) * (n - 2.0) / 2.0;
        let mixed = m12 + (n - 1.0) / 2.0 * m33;
        Ok(ProofClaims([
            m12 < -rho && -rho <= 0.0,
            m33 > 0.0,
            mixed > 0.0,
            (m + n - 1.0) * (-m12) >= k * m33,
            k * m33 >= -rho - (m + n - 2.0) * m12,
            (n - 2.0) * mixed >= (m - 1.0) * (-m12),
        ]))
    }
}

/// Reaction quadratic at the least pair and its square-plus-`f` decomposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReactionQuadratic {
    pub q: f64,
    pub square_term: f64,
    pub f_term: f64,
}

impl ReactionQuadratic {
    /// `|q − (square + f)|` relative to the largest of the three magnitudes.
    pub fn identity_error(&self) -> f64 {
        let diff = (self.q - (self.square_term + self.f_term)).abs();
        if diff == 0.0 {
            return 0.0;
        }
        let scale = self.q.abs().max(self.square_term.abs()).max(self.f_term.abs());
        diff / scale.max(f64::MIN_POSITIVE)
    }
}

/// `q = Σ_{i<j}(M_ij² + Σ_k M_ik M_jk) + (m₀+1)(M_12² + Σ_k M_1k M_2k)` for
/// `M_ij = M_i + M_j`, with `square = (S + (m₀+2)M_12)²/(m₀+2)` and `f` at `m = m₀+1`.
pub fn reaction_quadratic(mvec: &[f64], m0: u32) -> Result<ReactionQuadratic> {
    let n = mvec.len();
    if n < 4 {
        return Err(Error::DimensionTooSmall { n, min: 4 });
    }
    if mvec.windows(2).any(|w| !(w[0] <= w[1])) {
        return Err(Error::Unsorted);
    }
    let mut q = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let mij = pair(mvec, i, j);
            q += mij * mij + cross_sum(mvec, i, j);
        }
    }
    let m12 = pair(mvec, 0, 1);
    q += (f64::from(m0) + 1.0) * (m12 * m12 + cross_sum(mvec, 0, 1));

    let c = f64::from(m0) + 2.0;
    let lead = pair_sum(mvec) + c * m12;
    Ok(ReactionQuadratic {
        q,
        square_term: lead * lead / c,
        f_term: pinching_f(mvec, m0 + 1),
    })
}
