use approx::assert_relative_eq;
use cosserat_core::alpha::{
    alpha_step, amplification_matrix, newton_solve, spectral_radius, AlphaIntegrator, AlphaParams,
    BandedLu, FirstOrderSystem, LinearSystem, RodSystem, BLOCK, OMEGA, VEL,
};
use cosserat_core::dynamics::{
    dynamic_rhs, Boundary, ConstantLoads, NoLoads, NodeState, RodMaterial, RodModel, RodState,
};
use cosserat_core::harness::random_smooth_state;
use cosserat_core::kinematics::rotation_matrix;
use cosserat_core::{Error, Mat3, Vec3};
use nalgebra::{Complex, DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn family() -> Vec<AlphaParams> {
    [0.0, 0.3, 0.5, 0.8, 1.0]
        .iter()
        .map(|&r| AlphaParams::from_rho_inf(r).unwrap())
        .collect()
}

fn log_dts() -> impl Iterator<Item = f64> {
    (0..=120).map(|k| 10f64.powf(-6.0 + k as f64 * 0.05))
}

#[test]
fn family_is_unconditionally_stable_on_the_scalar_test() {
    for params in family() {
        for dt in log_dts() {
            for lambda in [
                Complex::new(-1.0, 0.0),
                Complex::new(-1e4, 0.0),
                Complex::new(0.0, 1e3),
                Complex::new(-50.0, 2e4),
                Complex::new(-1e6, 1e6),
            ] {
                let r = spectral_radius(&params, lambda * dt);
                assert!(
                    r <= 1.0 + 1e-12,
                    "{params:?} dt {dt:e} λ {lambda}: radius {r}"
                );
            }
        }
    }
}

#[test]
fn family_parameters_satisfy_the_accuracy_conditions() {
    for params in family() {
        assert!(
            params.diagnostics().is_empty(),
            "{:?}",
            params.diagnostics()
        );
        assert_relative_eq!(
            params.gamma,
            0.5 + params.alpha_f - params.alpha_m,
            epsilon = 1e-15
        );
    }
    let p = AlphaParams::from_rho_inf(1.0).unwrap();
    assert_relative_eq!(p.alpha_f, 0.5, epsilon = 1e-15);
    assert_relative_eq!(p.alpha_m, 0.5, epsilon = 1e-15);
    assert_relative_eq!(p.gamma, 0.5, epsilon = 1e-15);
    assert!(AlphaParams::from_rho_inf(1.5).is_err());
    assert!(AlphaParams::from_rho_inf(-0.1).is_err());
}

#[test]
fn high_frequency_radius_approaches_rho_inf() {
    for rho in [0.0, 0.4, 0.9] {
        let params = AlphaParams::from_rho_inf(rho).unwrap();
        let r = spectral_radius(&params, Complex::new(0.0, 1e12));
        assert!((r - rho).abs() <= 1e-5, "ρ∞ {rho}: radius {r}");
    }
}

#[test]
fn dissipative_setting_decays_monotonically_at_high_frequency() {
    let params = AlphaParams::dissipative();
    let radii: Vec<f64> = log_dts()
        .map(|dt| spectral_radius(&params, Complex::new(0.0, 1e3 * dt)))
        .collect();
    assert!(radii.iter().all(|&r| r <= 1.0 + 1e-12));
    // beyond ω Δt ≈ 1 the damping only grows
    let start = log_dts().position(|dt| dt * 1e3 >= 1.0).unwrap();
    for w in radii[start..].windows(2) {
        assert!(
            w[1] <= w[0] + 1e-12,
            "radius rose from {} to {}",
            w[0],
            w[1]
        );
    }
    // with γ = 1 the limit is α_f / (1 - α_f)
    assert_relative_eq!(*radii.last().unwrap(), 2.0 / 3.0, epsilon = 1e-6);

    // the integrator itself: a stiff undamped oscillator loses amplitude every step
    let mut integ =
        AlphaIntegrator::new(LinearSystem::oscillator(1e4), params, vec![1.0, 0.0], 0.0).unwrap();
    let amplitude = |x: &[f64]| (x[0] * x[0] + (x[1] / 1e4).powi(2)).sqrt();
    let mut prev = amplitude(integ.state());
    for _ in 0..50 {
        integ.step(1e-2).unwrap();
        let a = amplitude(integ.state());
        assert!(a <= prev * (1.0 + 1e-12));
        prev = a;
    }
    assert!(prev < 1e-3);
}

#[test]
fn integrator_step_matches_amplification_matrix() {
    for params in family().into_iter().chain([AlphaParams::dissipative()]) {
        for (lambda, dt) in [(-3.0, 0.1), (-200.0, 0.01), (0.5, 0.2)] {
            let (x1, r1) = alpha_step(
                LinearSystem::scalar(lambda),
                &[1.0],
                &[0.3],
                0.0,
                dt,
                params,
            )
            .unwrap();
            let m = amplification_matrix(&params, Complex::new(lambda * dt, 0.0));
            let expected_x = m[(0, 0)] + m[(0, 1)] * (0.3 * dt);
            let expected_b = m[(1, 0)] + m[(1, 1)] * (0.3 * dt);
            assert_relative_eq!(x1[0], expected_x.re, epsilon = 1e-12);
            assert_relative_eq!(r1[0] * dt, expected_b.re, epsilon = 1e-12);
        }
    }
}

fn oscillator_error(params: AlphaParams, dt: f64) -> f64 {
    let omega = 2.0;
    let mut integ =
        AlphaIntegrator::new(LinearSystem::oscillator(omega), params, vec![1.0, 0.0], 0.0).unwrap();
    let steps = (2.0 / dt).round() as usize;
    for _ in 0..steps {
        integ.step(dt).unwrap();
    }
    let t = integ.time();
    let x = integ.state();
    ((x[0] - (omega * t).cos()).powi(2) + ((x[1] + omega * (omega * t).sin()) / omega).powi(2))
        .sqrt()
}

#[test]
fn family_converges_at_second_order() {
    for params in family() {
        let order = (oscillator_error(params, 0.02) / oscillator_error(params, 0.01)).log2();
        assert!(order >= 1.9, "{params:?}: observed order {order:.3}");
    }
}

#[test]
fn dissipative_setting_is_first_order() {
    let params = AlphaParams::dissipative();
    let order = (oscillator_error(params, 0.01) / oscillator_error(params, 0.005)).log2();
    assert!((0.9..1.5).contains(&order), "observed order {order:.3}");
}

#[test]
fn rest_state_is_a_fixed_point() {
    let mut integ = AlphaIntegrator::new(
        LinearSystem::oscillator(3.0),
        AlphaParams::default(),
        vec![0.0, 0.0],
        0.0,
    )
    .unwrap();
    for _ in 0..10 {
        integ.step(0.1).unwrap();
    }
    assert_eq!(integ.state(), &[0.0, 0.0]);

    let ds = 0.02;
    let state = RodState {
        t: 0.0,
        ds,
        nodes: (0..21)
            .map(|i| NodeState {
                p: Vec3::new(0.0, 0.0, 1e-8),
                q: Vec3::new(0.0, 0.0, -(i as f64) * ds),
                ..Default::default()
            })
            .collect(),
    };
    let model = RodModel::straight(
        RodMaterial::circular(5e-3, 1000.0, 1e5, 4e4),
        Boundary::CLAMPED_FREE,
        &state,
    );
    let (sys, x0) = RodSystem::from_rod_state(model, &NoLoads, &state).unwrap();
    let mut integ = AlphaIntegrator::new(sys, AlphaParams::default(), x0.clone(), 0.0).unwrap();
    for _ in 0..20 {
        integ.step(1e-3).unwrap();
    }
    let drift = integ
        .state()
        .iter()
        .zip(&x0)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(drift <= 1e-12, "rest state moved by {drift:e}");
}

#[test]
fn newton_solves_linear_problem_in_one_iteration() {
    let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, -1.0, 0.0, -1.0, 2.0]);
    let b = DVector::from_vec(vec![1.0, -2.0, 0.5]);
    let report = newton_solve(|x| &a * x - &b, DVector::zeros(3), 1e-9, 5).unwrap();
    assert_eq!(report.iterations, 1);
    let exact = a.lu().solve(&b).unwrap();
    assert!((report.solution - exact).norm() <= 1e-9);
}

#[test]
fn newton_converges_quadratically_on_a_square_root() {
    let report = newton_solve(
        |x| x.map(|v| v * v - 4.0),
        DVector::from_element(1, 3.0),
        1e-12,
        6,
    )
    .unwrap();
    assert!(report.iterations <= 6);
    assert_relative_eq!(report.solution[0], 2.0, epsilon = 1e-12);
    // residual roughly squares from one iteration to the next
    let t = &report.trace;
    assert!(t[2] <= 10.0 * t[1] * t[1]);
}

#[test]
fn newton_without_iterations_reports_divergence() {
    let out = newton_solve(
        |x| x.map(|v| v * v - 4.0),
        DVector::from_element(1, 3.0),
        1e-12,
        0,
    );
    assert!(matches!(out, Err(Error::NewtonDivergence { .. })));
}

/// Without loads the director frames never enter the force, so the
/// frozen-frame evaluation used for the iteration matrix must agree with the
/// full one for every state, not just at the point where it was frozen.
#[test]
fn frozen_frame_force_is_exact_without_loads() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let state = random_smooth_state(6, 0.05, &mut rng);
    let model = RodModel::stress_free(
        RodMaterial::circular(5e-3, 1000.0, 1e5, 4e4),
        Boundary::CLAMPED_FREE,
        &state,
    )
    .unwrap();
    let (mut sys, x) = RodSystem::from_rod_state(model, &NoLoads, &state).unwrap();
    let n = sys.dim();
    sys.begin_jacobian(&x, 0.0).unwrap();
    for k in 0..10 {
        let xp: Vec<f64> = x
            .iter()
            .enumerate()
            .map(|(i, v)| v + 1e-2 * ((i * (k + 1)) as f64 * 0.37).sin())
            .collect();
        let (mut full, mut frozen) = (vec![0.0; n], vec![0.0; n]);
        sys.force(&xp, 0.0, &mut full).unwrap();
        sys.jacobian_force(&xp, 0.0, &mut frozen).unwrap();
        let scale = full.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for (a, b) in full.iter().zip(&frozen) {
            assert!((a - b).abs() <= 1e-12 * scale);
        }
    }
}

#[test]
fn state_space_form_matches_dynamic_rhs() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst = 0.0f64;
    for k in 0..100 {
        let state = random_smooth_state(21, 0.02, &mut rng);
        let material =
            RodMaterial::circular(5e-3, 1000.0, 1e5, 4e4).with_damping(0.3 * (k % 2) as f64, 0.0);
        let model = RodModel::straight(material, Boundary::CLAMPED_FREE, &state);
        let loads = ConstantLoads {
            force_density: Vec3::new(0.1, -0.2, -0.8),
            torque_density: Vec3::new(0.0, 1e-3, 0.0),
            tip_force: Vec3::new(0.01, 0.0, 0.02),
            tip_torque: Vec3::new(0.0, 0.0, 1e-3),
        };
        let rates = dynamic_rhs(&state, &model, &loads).unwrap();
        let (mut sys, x) = RodSystem::from_rod_state(model, &loads, &state).unwrap();
        let rot: Vec<Mat3> = state.nodes.iter().map(|n| rotation_matrix(&n.p)).collect();
        let mut g = vec![0.0; x.len()];
        sys.force_with_rotations(&x, &rot, 0.0, &mut g).unwrap();
        let m = sys.mass().to_vec();
        for (i, (wt, vt)) in rates.iter().enumerate() {
            for c in 0..3 {
                let kv = i * BLOCK + VEL + c;
                let kw = i * BLOCK + OMEGA + c;
                worst = worst.max((-g[kv] / m[kv] - vt[c]).abs() / (1.0 + vt.norm()));
                worst = worst.max((-g[kw] / m[kw] - wt[c]).abs() / (1.0 + wt.norm()));
            }
        }
    }
    assert!(worst <= 1e-10, "max deviation {worst:e}");
}

#[test]
fn rod_step_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let state = random_smooth_state(11, 0.03, &mut rng);
    let model = RodModel::stress_free(
        RodMaterial::circular(5e-3, 1000.0, 1e5, 4e4),
        Boundary::CLAMPED_FREE,
        &state,
    )
    .unwrap();
    let loads = ConstantLoads {
        force_density: Vec3::new(0.0, 0.0, -0.3),
        ..Default::default()
    };
    let run = || {
        let (sys, x0) = RodSystem::from_rod_state(model.clone(), &loads, &state).unwrap();
        let mut integ = AlphaIntegrator::new(sys, AlphaParams::default(), x0, 0.0).unwrap();
        for _ in 0..5 {
            integ.step(1e-3).unwrap();
        }
        integ.state().to_vec()
    };
    assert_eq!(run(), run());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn banded_solve_matches_dense(n in 3usize..25, kl in 0usize..4, ku in 0usize..4, seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        use rand::Rng;
        let mut dense = DMatrix::zeros(n, n);
        let mut banded = BandedLu::new(n, kl, ku);
        for i in 0..n {
            for j in i.saturating_sub(kl)..(i + ku + 1).min(n) {
                let v: f64 = rng.gen_range(-1.0..1.0) + if i == j { 4.0 } else { 0.0 };
                dense[(i, j)] = v;
                banded.set(i, j, v);
            }
        }
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let expected = dense.lu().solve(&DVector::from_vec(b.clone())).unwrap();
        banded.factor().unwrap();
        let mut x = b;
        banded.solve(&mut x).unwrap();
        for (a, e) in x.iter().zip(expected.iter()) {
            prop_assert!((a - e).abs() <= 1e-10 * (1.0 + e.abs()));
        }
    }

    #[test]
    fn amplification_never_exceeds_one(rho in 0.0f64..=1.0, re in -1e6f64..0.0, im in -1e6f64..1e6) {
        let params = AlphaParams::from_rho_inf(rho).unwrap();
        prop_assert!(spectral_radius(&params, Complex::new(re, im)) <= 1.0 + 1e-10);
    }
}
