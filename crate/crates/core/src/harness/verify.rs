use std::f64::consts::{PI, TAU};

use nalgebra::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::alpha::{spectral_radius, AlphaParams, FirstOrderSystem, RodSystem, BLOCK, OMEGA, VEL};
use crate::dynamics::{
    dynamic_rhs, energy, Boundary, ConstantLoads, NoLoads, NodeState, RodMaterial, RodModel,
    RodState, SnmIntegrator,
};
use crate::kinematics::{
    directors_from_p, jacobian_det, kappa_from_p, omega_from_p, rotation_coefficients,
    rotation_matrix, solve_pt, DirectorFrame, SERIES_THRESHOLD,
};
use crate::twist::{
    closed_form_state, conserved_quantity, exp_step, frame_constants, omega_frame, OmegaFrame,
};
use crate::{Mat3, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check {
        name,
        passed,
        detail,
    }
}

fn random_unit(rng: &mut ChaCha8Rng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Smooth random `(p, q, ω, v)` field on `nodes` nodes with `|p|` well inside
/// the chart.
pub fn random_smooth_state(nodes: usize, ds: f64, rng: &mut ChaCha8Rng) -> RodState {
    let axis = random_unit(rng);
    let base = rng.gen_range(1.0..2.5);
    let modes: Vec<(Vec3, f64, f64)> = (0..3)
        .map(|_| {
            (
                random_unit(rng) * rng.gen_range(0.05..0.3),
                rng.gen_range(0.5..3.0),
                rng.gen_range(0.0..TAU),
            )
        })
        .collect();
    let length = ds * (nodes - 1) as f64;
    let field = |s: f64, scale: f64, modes: &[(Vec3, f64, f64)]| {
        modes
            .iter()
            .map(|(a, k, ph)| a * scale * (TAU * k * s / length + ph).sin())
            .fold(Vec3::zeros(), |acc, x| acc + x)
    };
    let q_modes: Vec<(Vec3, f64, f64)> = (0..2)
        .map(|_| {
            (
                random_unit(rng) * rng.gen_range(0.01..0.05),
                rng.gen_range(0.5..2.0),
                rng.gen_range(0.0..TAU),
            )
        })
        .collect();
    let w_modes: Vec<(Vec3, f64, f64)> = (0..2)
        .map(|_| {
            (
                random_unit(rng) * rng.gen_range(0.1..2.0),
                rng.gen_range(0.5..2.0),
                rng.gen_range(0.0..TAU),
            )
        })
        .collect();
    let v_modes: Vec<(Vec3, f64, f64)> = (0..2)
        .map(|_| {
            (
                random_unit(rng) * rng.gen_range(0.01..0.2),
                rng.gen_range(0.5..2.0),
                rng.gen_range(0.0..TAU),
            )
        })
        .collect();
    let q_dir = random_unit(rng);
    let nodes = (0..nodes)
        .map(|i| {
            let s = i as f64 * ds;
            NodeState {
                p: axis * base + field(s, 1.0, &modes),
                q: -q_dir * s + field(s, 1.0, &q_modes),
                omega: field(s, 1.0, &w_modes),
                v: field(s, 1.0, &v_modes),
            }
        })
        .collect();
    RodState { t: 0.0, ds, nodes }
}

fn rk4_reduced(p: Vec3, omega: Vec3, dt: f64, steps: usize) -> Vec3 {
    let f = |p: &Vec3| solve_pt(p, &omega).expect("inside chart");
    let h = dt / steps as f64;
    let mut y = p;
    for _ in 0..steps {
        let k1 = f(&y);
        let k2 = f(&(y + 0.5 * h * k1));
        let k3 = f(&(y + 0.5 * h * k2));
        let k4 = f(&(y + h * k3));
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    y
}

/// Reduced-system residual of the closed form at time `t` (central
/// differences with step `h`), relative to `w`.
fn closed_form_residual(sol: &crate::twist::FrameSolution, t: f64, h: f64) -> f64 {
    let (a1, a2, a3, p) = closed_form_state(sol, t).expect("generic solution");
    let (a1p, a2p, a3p, pp) = closed_form_state(sol, t + h).expect("generic solution");
    let (a1m, a2m, a3m, pm) = closed_form_state(sol, t - h).expect("generic solution");
    let w = sol.w;
    let cot = 1.0 / (0.5 * p).tan();
    let d = |x: f64, y: f64| (x - y) / (2.0 * h);
    let r = [
        2.0 * d(a1p, a1m) - (a2 * w - cot * a1 * a3 * w),
        2.0 * d(a2p, a2m) - (-a1 * w - cot * a2 * a3 * w),
        2.0 * d(a3p, a3m) + cot * (a3 * a3 - 1.0) * w,
        d(pp, pm) - a3 * w,
    ];
    r.iter().fold(0.0f64, |m, x| m.max(x.abs())) / w
}

fn random_generic(rng: &mut ChaCha8Rng) -> (f64, f64, f64, f64, OmegaFrame) {
    let frame = omega_frame(&(random_unit(rng) * rng.gen_range(0.2..5.0))).expect("nonzero twist");
    let p = rng.gen_range(0.2..TAU - 0.2);
    let a3: f64 = rng.gen_range(-0.95..0.95);
    let phi = rng.gen_range(0.0..TAU);
    let r = (1.0 - a3 * a3).sqrt();
    (p, r * phi.cos(), r * phi.sin(), a3, frame)
}

/// Fast versions of the library invariants.
pub fn run_checks(seed: u64) -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    // twist-map inversion
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let p = random_unit(&mut rng) * rng.gen_range(0.1..TAU - 0.1);
        let w = Vec3::new(
            rng.gen_range(-10.0..10.0),
            rng.gen_range(-10.0..10.0),
            rng.gen_range(-10.0..10.0),
        );
        let back = omega_from_p(&p, &solve_pt(&p, &w).expect("inside chart"));
        worst = worst.max((back - w).norm() / (1.0 + w.norm()));
    }
    out.push(check(
        "twist-map inversion round trip",
        worst <= 1e-10,
        format!("max error {worst:.2e}"),
    ));

    // series switch
    let mut jump = 0.0f64;
    for x in [SERIES_THRESHOLD, 1.0] {
        let (a1, a2) = rotation_coefficients(x * (1.0 - 1e-15));
        let (b1, b2) = rotation_coefficients(x * (1.0 + 1e-15));
        jump = jump.max(((a1 - b1) / b1).abs()).max(((a2 - b2) / b2).abs());
    }
    out.push(check(
        "series branch continuity",
        jump <= 1e-14,
        format!("max relative jump {jump:.2e}"),
    ));

    let det_ok = (1..1000).all(|k| jacobian_det(k as f64 * TAU / 1000.0) < 0.0)
        && jacobian_det(TAU).abs() < 1e-12;
    out.push(check(
        "jacobian determinant sign",
        det_ok,
        "negative on (0, 2π), zero at 2π".into(),
    ));

    let mut ortho = 0.0f64;
    for _ in 0..1000 {
        let p = random_unit(&mut rng) * rng.gen_range(0.0..TAU - 1e-6);
        ortho = ortho.max(directors_from_p(&p, &DirectorFrame::fixed()).orthonormality_residual());
    }
    out.push(check(
        "director orthonormality",
        ortho <= 1e-12,
        format!("max residual {ortho:.2e}"),
    ));

    // frame/curvature consistency
    let curve = |s: f64| Vec3::new(0.3 + 0.5 * s.sin(), 1.2 * s.cos(), 0.8 + 0.4 * s * s);
    let curve_s = |s: f64| Vec3::new(0.5 * s.cos(), -1.2 * s.sin(), 0.8 * s);
    let frame_error = |h: f64| {
        let s = 0.7;
        let dd = (rotation_matrix(&curve(s + h)) - rotation_matrix(&curve(s - h))) / (2.0 * h);
        let k = kappa_from_p(&curve(s), &curve_s(s));
        let r = rotation_matrix(&curve(s));
        (0..3)
            .map(|c| (dd.column(c) - (r * k).cross(&r.column(c).into_owned())).norm())
            .fold(0.0, f64::max)
    };
    let ratio = frame_error(1e-2) / frame_error(5e-3);
    out.push(check(
        "frame/curvature consistency order",
        ratio >= 3.5,
        format!("error ratio {ratio:.2}"),
    ));

    // closed form vs reduced ODE
    let mut res = 0.0f64;
    let mut cons = 0.0f64;
    for _ in 0..200 {
        let (p, a1, a2, a3, frame) = random_generic(&mut rng);
        let sol = frame_constants(p, a1, a2, a3, &frame, 0.0).expect("valid data");
        let w = sol.w;
        for k in 0..20 {
            let t = k as f64 * 100.0 / w / 20.0 + 0.1 / w;
            res = res.max(closed_form_residual(&sol, t, 1e-6));
            let (_, _, a3t, pt) = closed_form_state(&sol, t).expect("generic");
            cons = cons.max((conserved_quantity(pt, a3t, w) - sol.c).abs() / (w * w));
        }
    }
    out.push(check(
        "closed form satisfies reduced system",
        res <= 1e-6,
        format!("max residual {res:.2e}·w"),
    ));
    out.push(check(
        "conserved quantity",
        cons <= 1e-10,
        format!("max drift {cons:.2e}·w²"),
    ));

    // boundedness under random frozen twists
    let mut p = Vec3::new(1.0, 0.0, 0.0);
    let mut violations = 0usize;
    for _ in 0..100_000 {
        let w = random_unit(&mut rng) * rng.gen_range(0.0..20.0);
        match exp_step(&p, &w, rng.gen_range(1e-4..0.5)) {
            Ok(next) if next.norm() > 0.0 && next.norm() < TAU => p = next,
            _ => violations += 1,
        }
    }
    out.push(check(
        "rotation vector stays in (0, 2π)",
        violations == 0,
        format!("{violations} violations in 1e5 steps"),
    ));

    // degenerate vs perturbed
    let frame = omega_frame(&Vec3::new(0.0, 0.0, 1.0)).expect("nonzero");
    let degenerate = frame_constants(1.0, 0.0, 0.0, 1.0, &frame, 0.0)
        .expect("valid")
        .degenerate;
    let a3: f64 = 1.0 - 1e-8;
    let perturbed =
        frame_constants(1.0, (1.0 - a3 * a3).sqrt(), 0.0, a3, &frame, 0.0).expect("valid");
    let bounded = (0..1000).all(|k| {
        closed_form_state(&perturbed, k as f64 * 0.1)
            .is_ok_and(|(_, _, _, p)| p > 0.0 && p < TAU)
    });
    out.push(check(
        "degenerate branch selection",
        degenerate && !perturbed.degenerate && bounded,
        "A3 = 1 degenerate, A3 = 1 - 1e-8 generic and bounded".into(),
    ));

    // rotation equivariance of the exponential step
    let mut eq = 0.0f64;
    for _ in 0..200 {
        let p = random_unit(&mut rng) * rng.gen_range(0.2..TAU - 0.2);
        let w = random_unit(&mut rng) * rng.gen_range(0.1..5.0);
        let rot = rotation_matrix(&(random_unit(&mut rng) * rng.gen_range(0.0..PI)));
        let a = rot * exp_step(&p, &w, 0.3).expect("inside chart");
        let b = exp_step(&(rot * p), &(rot * w), 0.3).expect("inside chart");
        eq = eq.max((a - b).norm());
    }
    out.push(check(
        "exp_step frame independence",
        eq <= 1e-10,
        format!("max deviation {eq:.2e}"),
    ));

    let oracle_gap = {
        let p = Vec3::new(1.0, 0.0, 0.0);
        let w = Vec3::new(0.0, 0.0, 1.0);
        (exp_step(&p, &w, 0.1).expect("inside chart") - rk4_reduced(p, w, 0.1, 100_000)).norm()
    };
    out.push(check(
        "exp_step matches fine RK4",
        oracle_gap <= 1e-8,
        format!("deviation {oracle_gap:.2e}"),
    ));

    // α-method stability
    let mut radius = 0.0f64;
    for rho in [0.0, 0.5, 0.8, 1.0] {
        let params = AlphaParams::from_rho_inf(rho).expect("valid");
        for k in 0..=60 {
            let dt = 10f64.powf(-6.0 + k as f64 * 0.1);
            for lambda in [
                Complex::new(-1e3, 0.0),
                Complex::new(0.0, 1e3),
                Complex::new(-10.0, 1e4),
            ] {
                radius = radius.max(spectral_radius(&params, lambda * dt));
            }
        }
    }
    out.push(check(
        "generalized-α unconditional stability",
        radius <= 1.0 + 1e-12,
        format!("max spectral radius {radius:.6}"),
    ));

    // cross-module consistency
    let mut gap = 0.0f64;
    for _ in 0..20 {
        let state = random_smooth_state(21, 0.02, &mut rng);
        let material = RodMaterial::circular(5e-3, 1000.0, 1e5, 4e4).with_damping(0.3, 0.0);
        let model = RodModel::straight(material, Boundary::CLAMPED_FREE, &state);
        let loads = ConstantLoads {
            force_density: Vec3::new(0.1, -0.2, -0.8),
            tip_force: Vec3::new(0.01, 0.0, 0.02),
            ..Default::default()
        };
        let Ok(rates) = dynamic_rhs(&state, &model, &loads) else {
            gap = f64::INFINITY;
            break;
        };
        let Ok((mut sys, x)) = RodSystem::from_rod_state(model, &loads, &state) else {
            gap = f64::INFINITY;
            break;
        };
        let rot: Vec<Mat3> = state.nodes.iter().map(|n| rotation_matrix(&n.p)).collect();
        let mut g = vec![0.0; x.len()];
        if sys.force_with_rotations(&x, &rot, 0.0, &mut g).is_err() {
            gap = f64::INFINITY;
            break;
        }
        let m = sys.mass().to_vec();
        for (i, (wt, vt)) in rates.iter().enumerate() {
            for c in 0..3 {
                let kv = i * BLOCK + VEL + c;
                let kw = i * BLOCK + OMEGA + c;
                let ev = (-g[kv] / m[kv] - vt[c]).abs() / (1.0 + vt.norm());
                let ew = (-g[kw] / m[kw] - wt[c]).abs() / (1.0 + wt.norm());
                gap = gap.max(ev).max(ew);
            }
        }
    }
    out.push(check(
        "state-space form matches dynamic rhs",
        gap <= 1e-10,
        format!("max deviation {gap:.2e}"),
    ));

    // equilibrium and energy
    let straight = RodState {
        t: 0.0,
        ds: 0.01,
        nodes: (0..31)
            .map(|i| NodeState {
                p: Vec3::new(0.0, 0.0, 1e-8),
                q: Vec3::new(0.0, 0.0, -(i as f64) * 0.01),
                ..Default::default()
            })
            .collect(),
    };
    let material = RodMaterial::circular(5e-3, 1000.0, 1e5, 4e4);
    let model = RodModel::straight(material, Boundary::FREE_FREE, &straight);
    let drift = SnmIntegrator::new(model.clone(), &straight).and_then(|mut integ| {
        for _ in 0..100 {
            integ.step(&NoLoads, 1e-4)?;
        }
        let s = integ.state();
        Ok(s.nodes
            .iter()
            .zip(&straight.nodes)
            .map(|(a, b)| (a.p - b.p).norm() + (a.q - b.q).norm() + a.omega.norm() + a.v.norm())
            .fold(0.0, f64::max))
    });
    let drift = drift.unwrap_or(f64::INFINITY);
    out.push(check(
        "straight rod at rest is stationary",
        drift <= 1e-12,
        format!("max change {drift:.2e}"),
    ));

    let mut bent = straight.clone();
    for (i, n) in bent.nodes.iter_mut().enumerate() {
        let s = i as f64 * 0.01;
        n.omega = Vec3::new(0.5 * (PI * s / 0.3).sin(), 0.0, 0.2);
        n.v = Vec3::new(0.0, 0.02 * (PI * s / 0.3).cos(), 0.0);
    }
    let energy_drift = SnmIntegrator::new(model.clone(), &bent).and_then(|mut integ| {
        let e0 = energy(&integ.state(), &model)?.total();
        let mut worst = 0.0f64;
        for _ in 0..2000 {
            integ.step(&NoLoads, 5e-5)?;
            worst = worst.max((energy(&integ.state(), &model)?.total() - e0).abs() / e0);
        }
        Ok(worst)
    });
    let energy_drift = energy_drift.unwrap_or(f64::INFINITY);
    out.push(check(
        "energy drift, free undamped rod",
        energy_drift <= 0.01,
        format!("max relative drift {energy_drift:.2e}"),
    ));

    out
}
