//! Pointwise reaction terms of the curvature evolution and the scalars that
//! track pinching along it.

use serde::{Deserialize, Serialize};

use crate::curvature::WedgeDiagonal;
use crate::error::{Error, Result};
use crate::pairs::{pair_count, pair_index, pairs};

/// `(dW/dt)_ij = W_ij² + Σ_{k∉{i,j}} W_ik W_jk`, written into `out`.
pub(crate) fn rhs_into(n: usize, w: &[f64], out: &mut [f64]) {
    for (p, (i, j)) in pairs(n).enumerate() {
        let wij = w[p];
        let mut acc = wij * wij;
        for k in 0..n {
            if k != i && k != j {
                acc += w[pair_index(n, i, k)] * w[pair_index(n, j, k)];
            }
        }
        out[p] = acc;
    }
}

/// Reaction part `W² + W#` of the curvature-operator evolution.
pub fn reaction_rhs(w: &WedgeDiagonal) -> WedgeDiagonal {
    let n = w.n();
    let mut out = vec![0.0; pair_count(n)];
    rhs_into(n, w.pairs(), &mut out);
    WedgeDiagonal::general(n, out).expect("pair count matches")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConformalProjection {
    pub m_vec: Vec<f64>,
    /// `sqrt(Σ_{i<j} (W_ij − M_i − M_j)²)` at the optimum.
    pub residual: f64,
}

impl ConformalProjection {
    pub fn projected(&self) -> WedgeDiagonal {
        WedgeDiagonal::rank_structured(self.m_vec.clone())
    }
}

/// Least-squares fit `W_ij ≈ M_i + M_j`.
///
/// The normal equations `(n−2)M_i + Σ_k M_k = r_i`, `r_i = Σ_{j≠i} W_ij`, have
/// the closed-form solution `M_i = (r_i − R/(n−1))/(n−2)` with `R = Σ_{i<j} W_ij`.
pub fn conformal_project(w: &WedgeDiagonal) -> ConformalProjection {
    let n = w.n();
    assert!(n >= 3, "projection needs n >= 3");
    let nf = n as f64;
    let mut row = vec![0.0; n];
    for ((i, j), v) in pairs(n).zip(w.pairs()) {
        row[i] += v;
        row[j] += v;
    }
    let total = w.trace();
    let m_vec: Vec<f64> = row
        .iter()
        .map(|r| (r - total / (nf - 1.0)) / (nf - 2.0))
        .collect();
    let residual = pairs(n)
        .zip(w.pairs())
        .map(|((i, j), v)| {
            let d = v - m_vec[i] - m_vec[j];
            d * d
        })
        .sum::<f64>()
        .sqrt();
    ConformalProjection { m_vec, residual }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinchScalars {
    /// Scalar curvature `R = Σ_{i<j} W_ij`.
    pub scalar: f64,
    /// Least eigenvalue `ν = min W_ij`.
    pub nu: f64,
    /// `R + m·ν` for each configured `m`.
    pub pinch_m: Vec<f64>,
    /// Hamilton–Ivey margin at the sample time, when applicable.
    pub hi_margin: Option<f64>,
}

pub fn pinch_scalars(w: &WedgeDiagonal, m_list: &[u32]) -> PinchScalars {
    let scalar = w.trace();
    let nu = w.min_pair();
    PinchScalars {
        scalar,
        nu,
        pinch_m: m_list.iter().map(|&m| scalar + f64::from(m) * nu).collect(),
        hi_margin: None,
    }
}

/// `R − (−ν)[log(−ν) + log(1+t) − n(n+1)/2]`, or `None` when `ν ≥ 0`.
pub fn hamilton_ivey_margin(scalars: &PinchScalars, t: f64, n: usize) -> Option<f64> {
    let nu = scalars.nu;
    if nu >= 0.0 {
        return None;
    }
    let neg = -nu;
    let half = (n * (n + 1)) as f64 / 2.0;
    Some(scalars.scalar - neg * (neg.ln() + t.ln_1p() - half))
}

/// Exact solution `1/(1/u₀ − t/(2(m+2)))` of `u' = u²/(2(m+2))`, `u(0) = u₀ < 0`.
pub fn comparison_bound(u0: f64, m: u32, t: f64) -> Result<f64> {
    if !(u0 < 0.0) || !u0.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "comparison bound needs a finite u0 < 0, got {u0}"
        )));
    }
    let c = 2.0 * (f64::from(m) + 2.0);
    Ok(1.0 / (1.0 / u0 - t / c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curvature::{wedge_components, RicciSpectrum};
    use crate::lie::lie_algebra_square_closed;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cylinder(n: usize, c: f64) -> WedgeDiagonal {
        WedgeDiagonal::from_fn(n, |i, _| if i == 0 { 0.0 } else { c })
    }

    #[test]
    fn rhs_examples() {
        for n in 4..=7 {
            let c = 1.5;
            let r = reaction_rhs(&WedgeDiagonal::constant(n, c));
            for v in r.pairs() {
                assert!((v - (n - 1) as f64 * c * c).abs() < 1e-13);
            }
            assert!(reaction_rhs(&WedgeDiagonal::zeros(n)).pairs().iter().all(|&v| v == 0.0));
            let r = reaction_rhs(&cylinder(n, c));
            for (i, j) in pairs(n) {
                let want = if i == 0 { 0.0 } else { (n - 2) as f64 * c * c };
                assert!((r.get(i, j) - want).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn rhs_is_square_plus_sharp() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = WedgeDiagonal::from_fn(6, |_, _| rng.gen_range(-2.0..2.0));
        let sharp = lie_algebra_square_closed(&w);
        let r = reaction_rhs(&w);
        for ((a, b), c) in r.pairs().iter().zip(sharp.pairs()).zip(w.pairs()) {
            assert!((a - (b + c * c)).abs() < 1e-14);
        }
    }

    #[test]
    fn projection_of_rank_structured_is_exact() {
        let m = vec![-1.25, 0.5, 2.0, 3.5, 4.0];
        let p = conformal_project(&WedgeDiagonal::rank_structured(m.clone()));
        for (a, b) in p.m_vec.iter().zip(&m) {
            assert!((a - b).abs() < 1e-13);
        }
        assert!(p.residual <= 1e-12);
        let z = conformal_project(&WedgeDiagonal::zeros(4));
        assert!(z.m_vec.iter().all(|&v| v == 0.0));
        assert_eq!(z.residual, 0.0);
    }

    #[test]
    fn projection_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let w = WedgeDiagonal::from_fn(5, |_, _| rng.gen_range(-3.0..3.0));
        let p1 = conformal_project(&w);
        let p2 = conformal_project(&p1.projected());
        for (a, b) in p1.m_vec.iter().zip(&p2.m_vec) {
            assert!((a - b).abs() < 1e-13);
        }
        assert!(p2.residual < 1e-12);
    }

    #[test]
    fn projection_matches_dense_least_squares() {
        use nalgebra::{DMatrix, DVector};
        let n = 4;
        let eps = 0.3;
        let base = WedgeDiagonal::rank_structured(vec![0.5, 1.0, -2.0, 3.0]);
        let mut raw = base.pairs().to_vec();
        raw[pair_index(n, 1, 3)] += eps;
        let w = WedgeDiagonal::general(n, raw.clone()).unwrap();
        let p = conformal_project(&w);
        // Incidence design matrix, solved by SVD.
        let a = DMatrix::from_fn(pair_count(n), n, |r, c| {
            let (i, j) = crate::pairs::pair_of(n, r);
            if c == i || c == j {
                1.0
            } else {
                0.0
            }
        });
        let b = DVector::from_vec(raw);
        let sol = a.clone().svd(true, true).solve(&b, 1e-14).unwrap();
        for (x, y) in sol.iter().zip(&p.m_vec) {
            assert!((x - y).abs() < 1e-12);
        }
        let res = (&a * &sol - &b).norm();
        assert!((res - p.residual).abs() < 1e-12);
        assert!(p.residual > 0.0 && p.residual <= eps);
    }

    #[test]
    fn pinch_scalar_examples() {
        let s4 = pinch_scalars(&WedgeDiagonal::constant(4, 2.0), &[0, 1, 2]);
        assert_eq!((s4.scalar, s4.nu), (12.0, 2.0));
        assert_eq!(s4.pinch_m, vec![12.0, 14.0, 16.0]);
        let sphere = RicciSpectrum::new(vec![3.0; 4]).unwrap();
        assert!((s4.scalar - sphere.scalar()).abs() < 1e-15);

        let z = pinch_scalars(&WedgeDiagonal::zeros(5), &[0, 3]);
        assert_eq!((z.scalar, z.nu, z.pinch_m.clone()), (0.0, 0.0, vec![0.0, 0.0]));

        let cyl = RicciSpectrum::new(vec![0.0, 2.0, 2.0, 2.0]).unwrap();
        let c = pinch_scalars(&wedge_components(&cyl), &[0]);
        assert!((c.scalar - 6.0).abs() < 1e-14);
        assert!(c.nu.abs() < 1e-14);
        assert!((c.scalar - cyl.scalar()).abs() < 1e-14);
    }

    #[test]
    fn hamilton_ivey_not_applicable_for_nonnegative_nu() {
        let s = pinch_scalars(&WedgeDiagonal::constant(4, 0.0), &[]);
        assert_eq!(hamilton_ivey_margin(&s, 1.0, 4), None);
    }

    #[test]
    fn hamilton_ivey_substitution_at_nu_minus_one() {
        for n in 4..=8 {
            let s = PinchScalars {
                scalar: 0.0,
                nu: -1.0,
                pinch_m: vec![],
                hi_margin: None,
            };
            let half = (n * (n + 1)) as f64 / 2.0;
            assert_eq!(hamilton_ivey_margin(&s, 0.0, n), Some(half));
            let s = PinchScalars { scalar: 2.5, ..s };
            assert!(hamilton_ivey_margin(&s, 0.0, n).unwrap() > 0.0);
        }
    }

    #[test]
    fn hamilton_ivey_log_term() {
        // ν = −e^{−1/2}: log(−ν) = −1/2 exactly, so the margin is R + e^{−1/2}(1/2 + n(n+1)/2).
        let a = (-0.5f64).exp();
        for n in 4..=6 {
            let s = PinchScalars {
                scalar: 1.0,
                nu: -a,
                pinch_m: vec![],
                hi_margin: None,
            };
            let half = (n * (n + 1)) as f64 / 2.0;
            let want = 1.0 + a * (0.5 + half);
            let got = hamilton_ivey_margin(&s, 0.0, n).unwrap();
            assert!((got - want).abs() <= 4.0 * f64::EPSILON * want);
        }
    }

    #[test]
    fn comparison_bound_examples() {
        assert!((comparison_bound(-1.0, 0, 2.0).unwrap() + 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(comparison_bound(-3.5, 4, 0.0).unwrap(), -3.5);
        assert!(comparison_bound(0.0, 1, 1.0).is_err());
        assert!(comparison_bound(2.0, 1, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn comparison_bound_lower_envelope(u0 in -1e4f64..-1e-4, m in 0u32..10, t in 1e-6f64..1e4) {
            let b = comparison_bound(u0, m, t).unwrap();
            let c = 2.0 * (m as f64 + 2.0);
            prop_assert!(b < 0.0);
            prop_assert!(b >= -c / t * (1.0 + 1e-12));
            prop_assert!(b >= u0);
        }

        #[test]
        fn wedge_components_permutation_equivariant(
            lambdas in proptest::collection::vec(-10.0f64..10.0, 4..=8),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            let n = lambdas.len();
            let mut perm: Vec<usize> = (0..n).collect();
            perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let permuted: Vec<f64> = perm.iter().map(|&p| lambdas[p]).collect();
            let a = crate::curvature::wedge_values(&lambdas);
            let b = crate::curvature::wedge_values(&permuted);
            for (k, &p) in perm.iter().enumerate() {
                prop_assert!((b[k] - a[p]).abs() <= 1e-12 * (1.0 + a[p].abs()));
            }
        }
    }
}
