//! `so(n)` structure constants on the wedge basis and the Lie-algebra square `M#`.
//!
//! Normalisation: the wedge element `√2 e_i∧e_j` is identified with the matrix
//! `E_ij = (√2/2)·A_ij`, where `(A_ij)_ij = 1`, `(A_ij)_ji = −1`. The `E_ij`
//! are orthonormal for the Frobenius product `⟨X, Y⟩ = tr(XᵀY)`, and
//! `[A_ij, A_jk] = A_ik` gives `[E_ij, E_jk] = E_ik/√2`.
//!
//! With `[E_α, E_β] = Σ_γ C_γ^{αβ} E_γ` the square is
//! `M#_αβ = C_α^{γη} C_β^{δθ} M_γδ M_ηθ`, which for a wedge-diagonal operator
//! reduces on `{i, j}` to `Σ_{k∉{i,j}} M_ik M_jk` and vanishes off the diagonal.

use std::collections::BTreeMap;

use crate::curvature::WedgeDiagonal;
use crate::error::{Error, Result};
use crate::pairs::{pair_count, pairs};

/// `(M#)_ij = Σ_{k∉{i,j}} W_ik W_jk` for every pair.
pub fn lie_algebra_square_closed(w: &WedgeDiagonal) -> WedgeDiagonal {
    let n = w.n();
    WedgeDiagonal::from_fn(n, |i, j| {
        (0..n)
            .filter(|&k| k != i && k != j)
            .map(|k| w.get(i, k) * w.get(j, k))
            .sum()
    })
}

/// Sparse structure constants: `table[(α, β, γ)] = C_γ^{αβ}`.
#[derive(Debug, Clone)]
pub struct StructureConstants {
    n: usize,
    table: BTreeMap<(usize, usize, usize), f64>,
}

/// Projections below this are treated as exact zeros of the bracket.
const ZERO_CUTOFF: f64 = 1e-14;

fn generator(n: usize, i: usize, j: usize) -> Vec<f64> {
    let mut e = vec![0.0; n * n];
    let s = std::f64::consts::FRAC_1_SQRT_2;
    e[i * n + j] = s;
    e[j * n + i] = -s;
    e
}

fn bracket(n: usize, a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; n * n];
    for r in 0..n {
        for c in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += a[r * n + k] * b[k * n + c] - b[r * n + k] * a[k * n + c];
            }
            out[r * n + c] = acc;
        }
    }
    out
}

fn frobenius(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Computes `C_γ^{αβ} = ⟨[E_α, E_β], E_γ⟩` from explicit matrix brackets.
pub fn structure_constants(n: usize) -> Result<StructureConstants> {
    if n < 3 {
        return Err(Error::DimensionTooSmall { n, min: 3 });
    }
    let gens: Vec<Vec<f64>> = pairs(n).map(|(i, j)| generator(n, i, j)).collect();
    let mut table = BTreeMap::new();
    for (a, ga) in gens.iter().enumerate() {
        for (b, gb) in gens.iter().enumerate() {
            let br = bracket(n, ga, gb);
            for (c, gc) in gens.iter().enumerate() {
                let v = frobenius(&br, gc);
                if v.abs() > ZERO_CUTOFF {
                    table.insert((a, b, c), v);
                }
            }
        }
    }
    Ok(StructureConstants { n, table })
}

impl StructureConstants {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Dimension of `so(n)`.
    pub fn dim(&self) -> usize {
        pair_count(self.n)
    }

    /// `C_γ^{αβ}`; zero when absent from the table.
    pub fn get(&self, alpha: usize, beta: usize, gamma: usize) -> f64 {
        self.table.get(&(alpha, beta, gamma)).copied().unwrap_or(0.0)
    }

    pub fn nonzero(&self) -> impl Iterator<Item = ((usize, usize, usize), f64)> + '_ {
        self.table.iter().map(|(k, v)| (*k, *v))
    }

    /// For each output index `α`, the list of `(γ, η, C_α^{γη})`.
    fn by_output(&self) -> Vec<Vec<(usize, usize, f64)>> {
        let mut out = vec![Vec::new(); self.dim()];
        for (&(g, h, a), &c) in &self.table {
            out[a].push((g, h, c));
        }
        out
    }
}

/// Dense symmetric matrix over wedge indices.
#[derive(Debug, Clone, PartialEq)]
pub struct WedgeMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl WedgeMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (a, d) in diag.iter().enumerate() {
            m.data[a * m.dim + a] = *d;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.data[a * self.dim + b]
    }

    pub fn set(&mut self, a: usize, b: usize, v: f64) {
        self.data[a * self.dim + b] = v;
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|a| self.get(a, a)).collect()
    }

    pub fn max_off_diagonal(&self) -> f64 {
        let mut m = 0.0_f64;
        for a in 0..self.dim {
            for b in 0..self.dim {
                if a != b {
                    m = m.max(self.get(a, b).abs());
                }
            }
        }
        m
    }
}

/// `M#_αβ = C_α^{γη} C_β^{δθ} M_γδ M_ηθ` for a general symmetric `M`.
pub fn lie_algebra_square_full(m: &WedgeMatrix, sc: &StructureConstants) -> Result<WedgeMatrix> {
    if m.dim() != sc.dim() {
        return Err(Error::DimensionMismatch {
            expected: sc.dim(),
            got: m.dim(),
        });
    }
    let lists = sc.by_output();
    let dim = sc.dim();
    let mut out = WedgeMatrix::zeros(dim);
    for a in 0..dim {
        for b in a..dim {
            let mut acc = 0.0;
            for &(g, h, ca) in &lists[a] {
                for &(d, t, cb) in &lists[b] {
                    acc += ca * cb * m.get(g, d) * m.get(h, t);
                }
            }
            out.set(a, b, acc);
            out.set(b, a, acc);
        }
    }
    Ok(out)
}

/// Structure-constant route to `M#` for a wedge-diagonal operator.
pub fn lie_algebra_square_oracle(w: &WedgeDiagonal, sc: &StructureConstants) -> Result<WedgeMatrix> {
    if w.n() != sc.n() {
        return Err(Error::DimensionMismatch {
            expected: sc.n(),
            got: w.n(),
        });
    }
    lie_algebra_square_full(&WedgeMatrix::from_diagonal(w.pairs()), sc)
}
