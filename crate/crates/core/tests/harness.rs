use std::f64::consts::TAU;

use approx::assert_relative_eq;
use cosserat_core::alpha::AlphaParams;
use cosserat_core::dynamics::{Boundary, NoLoads, NodeState, RodMaterial, RodModel, RodState};
use cosserat_core::harness::{
    benchmark_against, build_scenario, initial_geometry, initial_state, oracle_integrate_at,
    parse_scenarios, relative_l2, run, smoothstep, write_benchmark_csv, BenchmarkOptions, Damping,
    Field, InitialShape, IntegratorKind, LoadSpec, NodeSample, Overrides, Rk4Integrator,
    SamplePlan, ScenarioConfig, ScenarioId, Schedule, Trace,
};
use cosserat_core::kinematics::rotation_matrix;
use cosserat_core::{Error, Vec3};
use proptest::prelude::*;

fn short(id: ScenarioId, segments: usize, duration: f64) -> ScenarioConfig {
    build_scenario(
        id,
        &Overrides {
            segments: Some(segments),
            duration: Some(duration),
            ..Default::default()
        },
    )
    .unwrap()
}

#[test]
fn built_in_scenarios_match_their_descriptions() {
    for id in ScenarioId::BENCHMARK {
        let cfg = build_scenario(id, &Overrides::default()).unwrap();
        assert_eq!(cfg.segments, 100);
        assert_eq!(cfg.duration, 8.0);
        assert_eq!(cfg.loads.gravity, [0.0, 0.0, -9.81]);
        assert_eq!(cfg.boundary, Boundary::CLAMPED_FREE);
    }
    let i = build_scenario(ScenarioId::I, &Overrides::default()).unwrap();
    assert!(matches!(i.initial_shape, InitialShape::Sinusoidal { .. }));
    assert_eq!(i.damping, Damping::default());
    assert_eq!(i.loads.tip_force, Schedule::None);

    let ii = build_scenario(ScenarioId::Ii, &Overrides::default()).unwrap();
    assert!(matches!(ii.initial_shape, InitialShape::Helix { .. }));
    assert_eq!(ii.alpha_params, AlphaParams::dissipative());
    assert!(ii.damping.alpha > 0.0);
    assert!(matches!(ii.loads.tip_force, Schedule::Sine { .. }));

    let iii = build_scenario(ScenarioId::Iii, &Overrides::default()).unwrap();
    assert_eq!(iii.length, 0.45);
    assert!(matches!(iii.initial_shape, InitialShape::Straight { .. }));
    assert!(matches!(iii.loads.tip_torque, Schedule::Sine { .. }));
    assert_eq!(iii.damping, Damping::default());

    let iv = build_scenario(ScenarioId::Iv, &Overrides::default()).unwrap();
    assert!(matches!(iv.loads.tip_force, Schedule::Pulse { until, .. } if until == 0.1));
    assert!(iv.damping.alpha > 0.0 && iv.damping.alpha < ii.damping.alpha);

    assert!(matches!(
        build_scenario(ScenarioId::Custom, &Overrides::default()),
        Err(Error::UnknownScenario(_))
    ));
}

#[test]
fn overrides_are_applied_and_validated() {
    let cfg = build_scenario(
        ScenarioId::Iii,
        &Overrides {
            segments: Some(40),
            dt: Some(1e-4),
            duration: Some(0.5),
            integrator: Some(IntegratorKind::Alpha),
        },
    )
    .unwrap();
    assert_eq!(
        (cfg.segments, cfg.dt, cfg.duration, cfg.integrator),
        (40, 1e-4, 0.5, IntegratorKind::Alpha)
    );
    for bad in [
        Overrides {
            segments: Some(1),
            ..Default::default()
        },
        Overrides {
            dt: Some(-1e-3),
            ..Default::default()
        },
        Overrides {
            duration: Some(0.0),
            ..Default::default()
        },
    ] {
        assert!(matches!(
            build_scenario(ScenarioId::I, &bad),
            Err(Error::Config(_))
        ));
    }
}

#[test]
fn config_json_round_trips() {
    let cfg = build_scenario(ScenarioId::Iv, &Overrides::default()).unwrap();
    let back = ScenarioConfig::from_json(&cfg.to_json()).unwrap();
    assert_eq!(back, cfg);
}

#[test]
fn config_json_rejects_unknown_keys() {
    let cfg = build_scenario(ScenarioId::I, &Overrides::default()).unwrap();
    let mut value: serde_json::Value = serde_json::from_str(&cfg.to_json()).unwrap();
    value["colour"] = serde_json::json!("red");
    assert!(matches!(
        ScenarioConfig::from_json(&value.to_string()),
        Err(Error::Config(_))
    ));

    let mut nested: serde_json::Value = serde_json::from_str(&cfg.to_json()).unwrap();
    nested["material"]["stiffness"] = serde_json::json!(1.0);
    assert!(matches!(
        ScenarioConfig::from_json(&nested.to_string()),
        Err(Error::Config(_))
    ));

    let mut missing: serde_json::Value = serde_json::from_str(&cfg.to_json()).unwrap();
    missing.as_object_mut().unwrap().remove("length");
    assert!(matches!(
        ScenarioConfig::from_json(&missing.to_string()),
        Err(Error::Config(_))
    ));

    assert!(matches!(
        ScenarioConfig::from_json("{ not json"),
        Err(Error::Config(_))
    ));
}

#[test]
fn invalid_helix_is_rejected() {
    let mut cfg = build_scenario(ScenarioId::Ii, &Overrides::default()).unwrap();
    cfg.initial_shape = InitialShape::Helix {
        radius: 1.0,
        turns: 5.0,
    };
    assert!(matches!(cfg.validate(), Err(Error::Config(_))));
}

#[test]
fn schedules_evaluate_as_documented() {
    let sine = Schedule::Sine {
        amplitude: [2.0, 0.0, -1.0],
        period: 0.5,
    };
    assert_relative_eq!(sine.eval(0.125), Vec3::new(2.0, 0.0, -1.0), epsilon = 1e-15);
    let pulse = Schedule::Pulse {
        value: [0.0, 0.0, 3.0],
        until: 0.1,
        fade: 0.0,
    };
    assert_eq!(pulse.eval(0.05), Vec3::new(0.0, 0.0, 3.0));
    assert_eq!(pulse.eval(0.1), Vec3::zeros());
    let faded = Schedule::Pulse {
        value: [0.0, 0.0, 3.0],
        until: 0.1,
        fade: 0.2,
    };
    assert_relative_eq!(faded.eval(0.2).z, 1.5, epsilon = 1e-15);
    assert!(faded.eval(0.3).norm() <= 1e-14);
    assert_eq!(
        Schedule::Constant {
            value: [1.0, 2.0, 3.0]
        }
        .eval(7.0),
        Vec3::new(1.0, 2.0, 3.0)
    );
    assert_eq!(smoothstep(-1.0), 0.0);
    assert_eq!(smoothstep(0.5), 0.5);
    assert_eq!(smoothstep(2.0), 1.0);
}

#[test]
fn initial_geometry_has_unit_speed_and_matching_frames() {
    for id in ScenarioId::BENCHMARK {
        let cfg = short(id, 50, 0.1);
        let (pos, frames) = initial_geometry(&cfg);
        assert_eq!(pos[0], Vec3::zeros());
        for i in 0..pos.len() - 1 {
            let chord = (pos[i + 1] - pos[i]).norm();
            assert!(chord <= cfg.ds() * (1.0 + 1e-12) && chord >= 0.98 * cfg.ds());
        }
        for f in &frames {
            assert!((f.transpose() * f - cosserat_core::Mat3::identity()).amax() <= 1e-12);
            assert_relative_eq!(f.determinant(), 1.0, epsilon = 1e-12);
        }
        let (state, _) = initial_state(&cfg).unwrap();
        for (n, (r, f)) in state.nodes.iter().zip(pos.iter().zip(&frames)) {
            assert!((rotation_matrix(&n.p) - f).amax() <= 1e-10);
            assert!((-(f * n.q) - r).norm() <= 1e-10);
        }
    }
}

#[test]
fn helix_closes_on_its_axis() {
    let cfg = short(ScenarioId::Ii, 60, 0.1);
    let InitialShape::Helix { radius, .. } = cfg.initial_shape else {
        unreachable!()
    };
    let (pos, _) = initial_geometry(&cfg);
    let axis = Vec3::new(-radius, 0.0, 0.0);
    for p in pos {
        assert_relative_eq!(((p - axis).xy()).norm(), radius, epsilon = 1e-12);
    }
}

#[test]
fn sample_plan_divides_the_interval() {
    let plan = SamplePlan::new(8.0, 3e-4);
    assert_eq!(plan.intervals, 1600);
    assert!(plan.dt <= 3e-4);
    assert_relative_eq!(
        plan.dt * plan.steps_per_interval as f64,
        1.0 / 200.0,
        epsilon = 1e-15
    );
    let coarse = SamplePlan::new(1.0, 1.0);
    assert_eq!(coarse.steps_per_interval, 1);
    assert_relative_eq!(coarse.dt, 1.0 / 200.0, epsilon = 1e-15);
}

fn sample(r: Vec3, velocity: Vec3) -> NodeSample {
    NodeSample {
        p: Vec3::zeros(),
        q: Vec3::zeros(),
        omega: Vec3::zeros(),
        v: velocity,
        r,
        velocity,
    }
}

fn toy_trace(scale: f64) -> Trace {
    let mut t = Trace::default();
    for k in 0..3 {
        let row = (0..4)
            .map(|i| {
                sample(
                    Vec3::new(i as f64, k as f64, 1.0) * scale,
                    Vec3::new(1.0, -(i as f64), 0.5) * scale,
                )
            })
            .collect();
        t.push(k as f64 * 0.1, row);
    }
    t
}

#[test]
fn relative_l2_examples() {
    let b = toy_trace(1.0);
    assert_eq!(relative_l2(&b, &b, Field::Position).unwrap(), 0.0);
    assert_relative_eq!(
        relative_l2(&toy_trace(2.0), &b, Field::Position).unwrap(),
        1.0,
        epsilon = 1e-15
    );
    assert_relative_eq!(
        relative_l2(&toy_trace(1.01), &b, Field::Velocity).unwrap(),
        0.01,
        epsilon = 1e-13
    );
    let mut shorter = b.clone();
    shorter.times.pop();
    shorter.samples.pop();
    assert!(matches!(
        relative_l2(&shorter, &b, Field::Position),
        Err(Error::ShapeMismatch(_))
    ));
    let mut shifted = b.clone();
    shifted.times[1] += 1e-3;
    assert!(matches!(
        relative_l2(&shifted, &b, Field::Position),
        Err(Error::ShapeMismatch(_))
    ));
}

#[test]
fn trace_csv_has_the_documented_layout() {
    let mut buf = Vec::new();
    toy_trace(1.0).write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "t,node,px,py,pz,qx,qy,qz,wx,wy,wz,vx,vy,vz,rx,ry,rz"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|r| r.split(',').count() == 17));
    assert!(rows[5].starts_with("0.100000,1,"));
}

#[test]
fn benchmark_csv_has_the_documented_header() {
    let mut buf = Vec::new();
    write_benchmark_csv(&[], &mut buf).unwrap();
    assert_eq!(
        String::from_utf8(buf).unwrap().trim(),
        "scenario,integrator,dt,wall_time_s,rel_l2_pos,rel_l2_vel,speedup"
    );
}

#[test]
fn scenario_lists_parse() {
    assert_eq!(
        parse_scenarios("i,ii,iii,iv").unwrap(),
        ScenarioId::BENCHMARK.to_vec()
    );
    assert_eq!(
        parse_scenarios("iv, 1").unwrap(),
        vec![ScenarioId::Iv, ScenarioId::I]
    );
    assert!(parse_scenarios("i,v").is_err());
}

#[test]
fn oracle_converges_at_fourth_order() {
    let cfg = short(ScenarioId::I, 10, 0.2);
    let reference = oracle_integrate_at(&cfg, 1.25e-5).unwrap().trace;
    let err = |dt: f64| {
        let t = oracle_integrate_at(&cfg, dt).unwrap().trace;
        relative_l2(&t, &reference, Field::Velocity).unwrap()
    };
    let (coarse, fine) = (err(2e-4), err(1e-4));
    assert!(coarse / fine >= 12.0, "error ratio {:.2}", coarse / fine);
}

#[test]
fn oracle_spins_a_free_rod_rigidly() {
    let ds = 0.02;
    let spin = 3.0;
    let state = RodState {
        t: 0.0,
        ds,
        nodes: (0..11)
            .map(|i| NodeState {
                p: Vec3::new(0.0, 0.0, 1e-3),
                q: Vec3::new(0.0, 0.0, -(i as f64) * ds),
                omega: Vec3::new(0.0, 0.0, spin),
                ..Default::default()
            })
            .collect(),
    };
    let model = RodModel::straight(
        RodMaterial::circular(5e-3, 1000.0, 1e5, 4e4),
        Boundary::FREE_FREE,
        &state,
    );
    let mut integ = Rk4Integrator::new(model, &state).unwrap();
    for _ in 0..1000 {
        integ.step(&NoLoads, 1e-3).unwrap();
    }
    let expected =
        rotation_matrix(&Vec3::new(0.0, 0.0, 1e-3)) * rotation_matrix(&Vec3::new(0.0, 0.0, spin));
    for (n, n0) in integ.state().nodes.iter().zip(&state.nodes) {
        assert!((rotation_matrix(&n.p) - expected).amax() <= 1e-9);
        assert!((n.q - n0.q).norm() <= 1e-12);
        assert!((n.omega - n0.omega).norm() <= 1e-12 && n.v.norm() <= 1e-12);
    }
}

#[test]
fn split_step_error_shrinks_along_a_step_ladder() {
    let cfg = short(ScenarioId::Iii, 20, 0.2);
    let reference = oracle_integrate_at(&cfg, 5e-6).unwrap().trace;
    let errors: Vec<f64> = [4e-4, 2e-4, 1e-4]
        .iter()
        .map(|&dt| {
            let out = run(&cfg, IntegratorKind::Snm, dt, None).unwrap();
            assert_eq!(out.invariant_violations, 0);
            relative_l2(&out.trace, &reference, Field::Velocity).unwrap()
        })
        .collect();
    for w in errors.windows(2) {
        assert!(w[1] <= 1.1 * w[0], "errors {errors:?}");
    }
    assert!(errors[2] < errors[0]);
}

#[test]
fn runs_are_deterministic() {
    let cfg = short(ScenarioId::Iv, 12, 0.05);
    for (kind, dt) in [
        (IntegratorKind::Snm, 2e-4),
        (IntegratorKind::Alpha, 1e-3),
        (IntegratorKind::Oracle, 1e-4),
    ] {
        let a = run(&cfg, kind, dt, None).unwrap();
        let b = run(&cfg, kind, dt, None).unwrap();
        assert_eq!(a.trace, b.trace, "{kind}");
        assert_eq!(a.steps, b.steps);
    }
}

#[test]
fn runs_sample_at_the_trace_rate() {
    let cfg = short(ScenarioId::I, 10, 0.1);
    let out = run(&cfg, IntegratorKind::Alpha, 1e-3, None).unwrap();
    assert_eq!(out.trace.len(), 21);
    assert_eq!(out.trace.nodes(), 11);
    assert_eq!(out.steps, 100);
    for (k, t) in out.trace.times.iter().enumerate() {
        assert_relative_eq!(*t, k as f64 * 0.005, epsilon = 1e-12);
    }
}

#[test]
fn degenerate_two_segment_rod_is_flagged_low_resolution() {
    let cfg = short(ScenarioId::Iii, 2, 0.05);
    let reference = oracle_integrate_at(&cfg, 1e-5).unwrap().trace;
    let opts = BenchmarkOptions {
        dt_max: 1e-3,
        repetitions: 1,
        ..Default::default()
    };
    let rows = benchmark_against(&cfg, &reference, &opts).unwrap();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert!(r.low_resolution);
        assert!(r.rel_l2_pos <= 0.01 && r.rel_l2_vel <= 0.01);
    }
    let alpha = rows
        .iter()
        .find(|r| r.integrator == IntegratorKind::Alpha)
        .unwrap();
    assert_relative_eq!(alpha.speedup, 1.0, epsilon = 1e-15);
}

#[test]
fn unreachable_accuracy_is_reported() {
    let cfg = short(ScenarioId::Iii, 10, 0.05);
    let mut reference = oracle_integrate_at(&cfg, 1e-5).unwrap().trace;
    for row in &mut reference.samples {
        for s in row {
            s.r += Vec3::new(1.0, 0.0, 0.0);
        }
    }
    let opts = BenchmarkOptions {
        dt_min: 2.5e-4,
        dt_max: 1e-3,
        repetitions: 1,
        ..Default::default()
    };
    assert!(matches!(
        benchmark_against(&cfg, &reference, &opts),
        Err(Error::AccuracyUnreachable { .. })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sample_plan_never_exceeds_the_requested_step(duration in 0.01f64..10.0, dt in 1e-6f64..0.1) {
        let plan = SamplePlan::new(duration, dt);
        prop_assert!(plan.dt <= dt * (1.0 + 1e-12));
        prop_assert!((plan.dt * plan.steps() as f64 - duration).abs() <= 1e-9 * duration.max(1.0));
    }

    #[test]
    fn helix_frames_are_orthonormal(radius in 0.005f64..0.05, turns in 0.5f64..5.0) {
        let mut cfg = short(ScenarioId::Ii, 30, 0.1);
        prop_assume!(cfg.length / turns > TAU * radius * 1.01);
        cfg.initial_shape = InitialShape::Helix { radius, turns };
        let (_, frames) = initial_geometry(&cfg);
        for f in frames {
            prop_assert!((f.transpose() * f - cosserat_core::Mat3::identity()).amax() <= 1e-12);
        }
    }

    #[test]
    fn relative_l2_is_scale_invariant(s in 0.1f64..10.0, k in 0.5f64..2.0) {
        let a = toy_trace(k * s);
        let b = toy_trace(s);
        let e = relative_l2(&a, &b, Field::Position).unwrap();
        prop_assert!((e - (k - 1.0).abs()).abs() <= 1e-12);
    }
}

#[test]
fn load_spec_defaults_the_ramp() {
    let json =
        r#"{"gravity":[0,0,-9.81],"tip_force":{"kind":"none"},"tip_torque":{"kind":"none"}}"#;
    let spec: LoadSpec = serde_json::from_str(json).unwrap();
    assert_eq!(spec.ramp, 0.0);
}
