use pinchkit::pairs::{pair_count, pairs};
use pinchkit::{
    conformal_project, integrate, reaction_rhs, scan_min_f, IntegratorOptions, Method, PinchingInstance,
    ScanConfig, WedgeDiagonal,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn adaptive(t_end: f64, sample_dt: Option<f64>) -> IntegratorOptions {
    IntegratorOptions {
        method: Method::Adaptive { tol: 1e-11, dt0: 1e-4 },
        t_end,
        sample_dt,
        ..Default::default()
    }
}

fn rk4(dt: f64, t_end: f64) -> IntegratorOptions {
    IntegratorOptions {
        method: Method::Rk4 { dt },
        t_end,
        sample_dt: None,
        ..Default::default()
    }
}

#[test]
fn nonnegative_orthant_is_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for n in [4, 5] {
        for _ in 0..40 {
            let w0 = WedgeDiagonal::from_fn(n, |_, _| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..2.0) });
            let tr = integrate(&w0, &adaptive(10.0, None)).unwrap();
            let cut = 0.8 * tr.blowup.unwrap_or(10.0);
            for s in tr.samples.iter().filter(|s| s.t <= cut) {
                assert!(s.w.min_pair() >= -1e-9, "n={n} t={} min={}", s.t, s.w.min_pair());
            }
        }
    }
}

#[test]
fn scalar_derivative_matches_summed_rhs() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let dt = 1e-4;
    for n in 4..=6 {
        let w0 = WedgeDiagonal::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let tr = integrate(&w0, &rk4(dt, 0.05)).unwrap();
        for k in 1..tr.samples.len() - 1 {
            let (a, b, c) = (&tr.samples[k - 1], &tr.samples[k], &tr.samples[k + 1]);
            let fd = (c.scalars.scalar - a.scalars.scalar) / (c.t - a.t);
            let exact = reaction_rhs(&b.w).trace();
            assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1.0), "n={n} {fd} vs {exact}");
        }
    }
}

#[test]
fn invariant_patterns_follow_closed_forms() {
    for n in 4..=6 {
        let nf = n as f64;
        for c0 in [0.5, 1.0, 2.0] {
            let t_sphere = 1.0 / ((nf - 1.0) * c0);
            let tr = integrate(&WedgeDiagonal::constant(n, c0), &adaptive(0.8 * t_sphere, Some(t_sphere / 50.0))).unwrap();
            assert_eq!(tr.blowup, None);
            for s in &tr.samples {
                let c = c0 / (1.0 - (nf - 1.0) * c0 * s.t);
                for v in s.w.pairs() {
                    assert!((v - c).abs() <= 1e-9 * c, "sphere n={n} t={}", s.t);
                }
            }

            let t_cyl = 1.0 / ((nf - 2.0) * c0);
            let w0 = WedgeDiagonal::from_fn(n, |i, _| if i == 0 { 0.0 } else { c0 });
            let tr = integrate(&w0, &adaptive(0.8 * t_cyl, Some(t_cyl / 50.0))).unwrap();
            for s in &tr.samples {
                let c = c0 / (1.0 - (nf - 2.0) * c0 * s.t);
                for (i, j) in pairs(n) {
                    let v = s.w.get(i, j);
                    if i == 0 {
                        assert_eq!(v, 0.0);
                    } else {
                        assert!((v - c).abs() <= 1e-9 * c);
                    }
                }
            }
        }
    }
}

/// `M` with one entry differing from the rest spans the rank-structured data the
/// reaction ODE keeps rank-structured; the cylinder and round patterns are special cases.
#[test]
fn projection_residual_small_on_invariant_family() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for n in 4..=6 {
        for _ in 0..10 {
            let a = rng.gen_range(-1.0..1.0);
            let b = rng.gen_range(-1.0..1.0);
            let mut m = vec![b; n];
            m[rng.gen_range(0..n)] = a;
            for dt in [1e-3, 1e-4] {
                let opts = IntegratorOptions {
                    constrained: true,
                    ..rk4(dt, 0.2)
                };
                let tr = integrate(&WedgeDiagonal::rank_structured(m.clone()), &opts).unwrap();
                assert!(tr.max_relative_removed_residual <= 1e-8, "{}", tr.max_relative_removed_residual);
            }
        }
    }
}

/// On generic rank-structured data the step leaves the subspace at first order in `dt`:
/// the removed residual equals `dt` times the normal part of the right-hand side.
#[test]
fn projection_residual_is_first_order_on_generic_data() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for n in 4..=6 {
        let m: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let w0 = WedgeDiagonal::rank_structured(m);
        let normal = conformal_project(&reaction_rhs(&w0)).residual;
        assert!(normal > 1e-3);
        for dt in [1e-3, 1e-4, 1e-5] {
            let opts = IntegratorOptions {
                constrained: true,
                ..rk4(dt, dt)
            };
            let tr = integrate(&w0, &opts).unwrap();
            let ratio = tr.max_removed_residual / (dt * normal);
            assert!((ratio - 1.0).abs() < 20.0 * dt, "n={n} dt={dt} ratio={ratio}");
        }
    }
}

#[test]
fn constrained_projection_keeps_residual_zero_between_steps() {
    let w0 = WedgeDiagonal::rank_structured(vec![-0.3, 0.2, 0.4, 0.7, 0.9]);
    let opts = IntegratorOptions {
        constrained: true,
        ..rk4(1e-3, 0.1)
    };
    let tr = integrate(&w0, &opts).unwrap();
    for s in &tr.samples {
        assert_eq!(s.conformal_residual, 0.0);
        assert!(conformal_project(&s.w).residual <= 1e-12 * s.w.max_abs().max(1.0));
    }
}

fn sorted_mvec(w: &WedgeDiagonal) -> Vec<f64> {
    let mut m = conformal_project(w).m_vec;
    m.sort_by(f64::total_cmp);
    m
}

/// Along unconstrained trajectories from rank-structured data, `u = R + (m+1)ν`
/// grows at least like the comparison ODE wherever the pinching constraints hold.
#[test]
fn comparison_coherence_along_trajectories() {
    let dt = 1e-4;
    let slack = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut checked = 0usize;
    for n in 4..=5 {
        for m in 0u32..=2 {
            let scan = scan_min_f(
                m + 1,
                n,
                &ScanConfig {
                    resolution: 40,
                    samples: 2_000,
                    refine_iters: 50,
                    seed: 5,
                    ..ScanConfig::default()
                },
            )
            .unwrap();
            let c_est = scan.c_est;
            for _ in 0..20 {
                // Two very negative directions against a positive tail puts u below zero
                // while R + mν stays near the constraint boundary.
                let mut mv: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
                mv[0] = -rng.gen_range(0.5..3.0);
                mv[1] = mv[0] + rng.gen_range(0.0..0.5);
                let w0 = WedgeDiagonal::rank_structured(mv);
                let opts = IntegratorOptions {
                    m_list: vec![m, m + 1],
                    ..rk4(dt, 0.02)
                };
                let tr = integrate(&w0, &opts).unwrap();
                for pair in tr.samples.windows(2) {
                    let (a, b) = (&pair[0], &pair[1]);
                    let u0 = a.scalars.pinch_m[1];
                    let u1 = b.scalars.pinch_m[1];
                    let rho = (-a.scalars.pinch_m[0]).max(0.0);
                    if u0 >= 0.0 {
                        continue;
                    }
                    let inst = PinchingInstance::new(sorted_mvec(&a.w), m + 1, rho).unwrap();
                    if !inst.is_feasible() {
                        continue;
                    }
                    checked += 1;
                    let h = b.t - a.t;
                    let lower = u0 + h * (u0 * u0 / (2.0 * (f64::from(m) + 2.0)) - c_est * rho * rho);
                    assert!(u1 >= lower - slack, "n={n} m={m} t={} u0={u0} u1={u1} lower={lower}", a.t);
                }
            }
        }
    }
    assert!(checked > 1000, "only {checked} steps met the constraints");
}

#[test]
fn hamilton_ivey_margin_nonnegative_in_constrained_mode() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in 4..=6 {
        let mut runs = 0;
        while runs < 15 {
            let mv: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..1.0)).collect();
            let w0 = WedgeDiagonal::rank_structured(mv);
            let opts = IntegratorOptions {
                constrained: true,
                ..adaptive(5.0, Some(0.01))
            };
            let tr = integrate(&w0, &opts).unwrap();
            let s0 = &tr.samples[0];
            if s0.scalars.nu < -1.0 || s0.scalars.hi_margin.is_some_and(|m| m < 0.0) {
                continue;
            }
            runs += 1;
            for s in &tr.samples {
                if let Some(margin) = s.scalars.hi_margin {
                    assert!(margin >= -1e-6, "n={n} t={} margin={margin}", s.t);
                }
            }
        }
    }
}

#[test]
fn pair_layout_is_lexicographic() {
    let n = 5;
    let w = WedgeDiagonal::from_fn(n, |i, j| (10 * i + j) as f64);
    let expect: Vec<f64> = pairs(n).map(|(i, j)| (10 * i + j) as f64).collect();
    assert_eq!(w.pairs(), expect.as_slice());
    assert_eq!(w.pairs().len(), pair_count(n));
}
