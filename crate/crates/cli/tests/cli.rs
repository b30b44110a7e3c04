use std::path::Path;
use std::process::{Command, Output};

fn cosserat(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cosserat"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn first_line(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap_or_default()
        .to_string()
}

#[test]
fn simulate_writes_trace_with_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.csv");
    let res = cosserat(&[
        "simulate",
        "--scenario",
        "i",
        "--integrator",
        "snm",
        "--segments",
        "10",
        "--dt",
        "1e-4",
        "--duration",
        "0.05",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(
        first_line(&out),
        "t,node,px,py,pz,qx,qy,qz,wx,wy,wz,vx,vy,vz,rx,ry,rz"
    );
    let rows = std::fs::read_to_string(&out).unwrap().lines().count() - 1;
    assert_eq!(rows % 11, 0);
    assert!(rows > 11);
}

#[test]
fn simulate_accepts_every_integrator() {
    for kind in ["snm", "alpha", "oracle"] {
        let res = cosserat(&[
            "simulate",
            "--scenario",
            "iii",
            "--integrator",
            kind,
            "--segments",
            "6",
            "--dt",
            "1e-4",
            "--duration",
            "0.01",
        ]);
        assert_eq!(
            code(&res),
            0,
            "{kind}: {}",
            String::from_utf8_lossy(&res.stderr)
        );
    }
}

#[test]
fn json_config_round_trips_through_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = cosserat_core::harness::build_scenario(
        cosserat_core::harness::ScenarioId::Ii,
        &cosserat_core::harness::Overrides {
            segments: Some(8),
            duration: Some(0.01),
            ..Default::default()
        },
    )
    .unwrap();
    let path = dir.path().join("ii.json");
    std::fs::write(&path, cfg.to_json()).unwrap();
    let res = cosserat(&["simulate", "--scenario", path.to_str().unwrap()]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = cosserat_core::harness::build_scenario(
        cosserat_core::harness::ScenarioId::I,
        &Default::default(),
    )
    .unwrap();
    let mut json: serde_json::Value = serde_json::from_str(&cfg.to_json()).unwrap();
    json["stiffness_boost"] = serde_json::json!(2.0);
    let path = dir.path().join("bad.json");
    std::fs::write(&path, json.to_string()).unwrap();
    let res = cosserat(&["simulate", "--scenario", path.to_str().unwrap()]);
    assert_eq!(code(&res), 4);
    assert!(String::from_utf8_lossy(&res.stderr).contains("stiffness_boost"));
}

#[test]
fn bad_arguments_are_config_errors() {
    assert_eq!(
        code(&cosserat(&[
            "simulate",
            "--scenario",
            "i",
            "--integrator",
            "euler"
        ])),
        4
    );
    assert_eq!(
        code(&cosserat(&["simulate", "--scenario", "i", "--dt", "-1"])),
        4
    );
    assert_eq!(
        code(&cosserat(&[
            "simulate",
            "--scenario",
            "/nonexistent/config.json"
        ])),
        4
    );
    assert_eq!(
        code(&cosserat(&[
            "benchmark",
            "--scenarios",
            "i,v",
            "--out",
            "unused.csv"
        ])),
        4
    );
    assert_eq!(code(&cosserat(&["frobnicate"])), 4);
    assert_eq!(code(&cosserat(&["--help"])), 0);
}

#[test]
fn benchmark_writes_csv_with_header() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.csv");
    let res = cosserat(&[
        "benchmark",
        "--scenarios",
        "iii",
        "--segments",
        "6",
        "--duration",
        "0.05",
        "--tolerance",
        "0.5",
        "--repetitions",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 0, "{}", String::from_utf8_lossy(&res.stderr));
    assert_eq!(
        first_line(&out),
        "scenario,integrator,dt,wall_time_s,rel_l2_pos,rel_l2_vel,speedup"
    );
    let text = std::fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 3);
    assert!(text.contains("iii,snm,") && text.contains("iii,alpha,"));
}

#[test]
fn unreachable_accuracy_exits_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bench.csv");
    let res = cosserat(&[
        "benchmark",
        "--scenarios",
        "i",
        "--segments",
        "4",
        "--duration",
        "0.01",
        "--tolerance",
        "1e-16",
        "--repetitions",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&res), 2, "{}", String::from_utf8_lossy(&res.stderr));
}

#[test]
fn chart_exit_exits_with_3() {
    use cosserat_core::harness::{
        build_scenario, InitialShape, IntegratorKind, Overrides, ScenarioId, Schedule,
    };
    // a free rod spun up about its own axis: the continuous rotation vector
    // of the reference integrator grows through |p| = 2π
    let mut cfg = build_scenario(
        ScenarioId::Iii,
        &Overrides {
            segments: Some(4),
            duration: Some(0.2),
            integrator: Some(IntegratorKind::Oracle),
            ..Default::default()
        },
    )
    .unwrap();
    cfg.initial_shape = InitialShape::Straight {
        direction: [0.0, 0.0, 1.0],
    };
    cfg.boundary = cosserat_core::dynamics::Boundary::FREE_FREE;
    cfg.loads.gravity = [0.0; 3];
    cfg.loads.tip_torque = Schedule::Constant {
        value: [0.0, 0.0, 100.0],
    };
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("spin.json");
    std::fs::write(&path, cfg.to_json()).unwrap();
    let res = cosserat(&["simulate", "--scenario", path.to_str().unwrap()]);
    assert_eq!(code(&res), 3, "{}", String::from_utf8_lossy(&res.stderr));
    assert!(String::from_utf8_lossy(&res.stderr).contains("singular"));
}

#[test]
fn verify_passes() {
    let res = cosserat(&["verify"]);
    let text = String::from_utf8_lossy(&res.stdout);
    assert_eq!(code(&res), 0, "{text}");
    assert!(text.lines().filter(|l| l.starts_with("[PASS]")).count() >= 10);
    assert!(!text.contains("[FAIL]"));
}
