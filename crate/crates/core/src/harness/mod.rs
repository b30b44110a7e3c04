//! Benchmark scenarios, the Runge–Kutta reference, error metrics and timing.

mod benchmark;
mod config;
mod oracle;
mod run;
mod scenario;
mod trace;
mod verify;

pub use benchmark::{
    benchmark, benchmark_against, benchmark_scenario, find_accurate_dt, parse_scenarios,
    write_benchmark_csv, AccurateStep, BenchmarkOptions, BenchmarkRow,
};
pub use config::{
    build_scenario, default_material, smoothstep, Damping, InitialShape, IntegratorKind, LoadSpec,
    Overrides, ScenarioConfig, ScenarioId, ScenarioLoads, Schedule, DEFAULT_RADIUS, DEFAULT_YOUNG,
    GRAVITY, LOAD_RAMP, TRACE_RATE,
};
pub use oracle::{oracle_dt, oracle_integrate, oracle_integrate_at, Rk4Integrator, ORACLE_DT};
pub use run::{run, simulate, ErrorBudget, RunOutcome, RunReport, SamplePlan, ORTHONORMALITY_TOL};
pub use scenario::{fallback_axis, initial_geometry, initial_state};
pub use trace::{relative_l2, Field, NodeSample, Trace};
pub use verify::{random_smooth_state, run_checks, Check};
