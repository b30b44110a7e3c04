use std::hint::black_box;

use cosserat_core::alpha::{AlphaIntegrator, RodSystem};
use cosserat_core::dynamics::SnmIntegrator;
use cosserat_core::harness::{build_scenario, initial_state, Overrides, ScenarioId};
use cosserat_core::kinematics::solve_pt;
use cosserat_core::twist::exp_step;
use cosserat_core::Vec3;
use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

fn kinematics(c: &mut Criterion) {
    let p = Vec3::new(0.7, -1.9, 1.2);
    let omega = Vec3::new(0.3, 2.0, -0.5);
    c.bench_function("solve_pt", |b| {
        b.iter(|| solve_pt(black_box(&p), black_box(&omega)))
    });
    c.bench_function("exp_step", |b| {
        b.iter(|| exp_step(black_box(&p), black_box(&omega), black_box(1e-3)))
    });
}

fn rod_steps(c: &mut Criterion) {
    let cfg = build_scenario(ScenarioId::I, &Overrides::default()).unwrap();
    let (state, model) = initial_state(&cfg).unwrap();
    let loads = cfg.scenario_loads();

    let snm = SnmIntegrator::new(model.clone(), &state).unwrap();
    c.bench_function("snm_step/100", |b| {
        b.iter_batched_ref(
            || snm.clone(),
            |s| s.step(&loads, 1.25e-4).unwrap(),
            BatchSize::SmallInput,
        )
    });

    let mut group = c.benchmark_group("alpha_step/100");
    group.sample_size(20);
    for (name, reuse) in [("reused_jacobian", true), ("fresh_jacobian", false)] {
        let (sys, x0) = RodSystem::from_rod_state(model.clone(), &loads, &state).unwrap();
        let mut integrator = AlphaIntegrator::new(sys, cfg.alpha_params, x0, 0.0)
            .unwrap()
            .with_jacobian_reuse(reuse);
        integrator.step(5e-4).unwrap();
        group.bench_function(name, |b| b.iter(|| integrator.step(5e-4).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, kinematics, rod_steps);
criterion_main!(benches);
