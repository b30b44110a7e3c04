use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use cosserat_core::harness::{
    benchmark, build_scenario, oracle_integrate, parse_scenarios, relative_l2, run_checks,
    simulate, write_benchmark_csv, BenchmarkOptions, Field, IntegratorKind, Overrides,
    ScenarioConfig, ScenarioId,
};
use cosserat_core::Error;

#[derive(Parser)]
#[command(
    name = "cosserat",
    version,
    about = "Cosserat rod dynamics: simulation and integrator benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one scenario and write its trace.
    Simulate(SimulateArgs),
    /// Find the largest accurate step of each integrator and time it.
    Benchmark(BenchmarkArgs),
    /// Run the invariant checks.
    Verify {
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

#[derive(Args)]
struct SimulateArgs {
    /// Built-in scenario (i, ii, iii, iv) or path to a JSON config.
    #[arg(long)]
    scenario: String,
    #[arg(long)]
    integrator: Option<IntegratorKind>,
    #[arg(long)]
    segments: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    duration: Option<f64>,
    /// Trace CSV destination.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also run the reference integrator and report relative L2 errors.
    #[arg(long)]
    compare: bool,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long, default_value = "i,ii,iii,iv")]
    scenarios: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    segments: Option<usize>,
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    tolerance: f64,
    #[arg(long, default_value_t = 3)]
    repetitions: usize,
    /// Reference step (defaults to 1e-5 s).
    #[arg(long)]
    oracle_dt: Option<f64>,
}

fn load_config(args: &SimulateArgs) -> anyhow::Result<ScenarioConfig> {
    let overrides = Overrides {
        segments: args.segments,
        dt: args.dt,
        duration: args.duration,
        integrator: args.integrator,
    };
    let cfg = match args.scenario.parse::<ScenarioId>() {
        Ok(ScenarioId::Custom) | Err(_) => {
            let mut cfg = ScenarioConfig::from_file(args.scenario.as_ref())?;
            cfg.apply(&overrides)?;
            cfg
        }
        Ok(id) => build_scenario(id, &overrides)?,
    };
    Ok(cfg)
}

fn run_simulate(args: SimulateArgs) -> anyhow::Result<()> {
    let cfg = load_config(&args)?;
    let (outcome, report) = simulate(&cfg, args.out.as_deref())?;
    println!(
        "scenario {} integrator {} dt {:.3e} steps {} wall {:.3} s",
        cfg.id, cfg.integrator, outcome.plan.dt, report.steps, report.wall_time
    );
    if report.invariant_violations > 0 {
        println!("invariant violations: {}", report.invariant_violations);
    }
    if let Some(path) = &report.trace_path {
        println!("trace written to {}", path.display());
    }
    if args.compare {
        let reference = oracle_integrate(&cfg)?;
        let pos = relative_l2(&outcome.trace, &reference.trace, Field::Position)?;
        let vel = relative_l2(&outcome.trace, &reference.trace, Field::Velocity)?;
        println!("rel_l2_pos {pos:.3e} rel_l2_vel {vel:.3e}");
    }
    Ok(())
}

fn run_benchmark(args: BenchmarkArgs) -> anyhow::Result<()> {
    let overrides = Overrides {
        segments: args.segments,
        duration: args.duration,
        ..Default::default()
    };
    let configs = parse_scenarios(&args.scenarios)?
        .into_iter()
        .map(|id| build_scenario(id, &overrides))
        .collect::<Result<Vec<_>, _>>()?;
    let opts = BenchmarkOptions {
        tolerance: args.tolerance,
        repetitions: args.repetitions,
        oracle_dt: args.oracle_dt,
        ..Default::default()
    };
    let rows = benchmark(&configs, &opts)?;
    let file = std::fs::File::create(&args.out)
        .with_context(|| format!("creating {}", args.out.display()))?;
    write_benchmark_csv(&rows, file)?;
    for r in &rows {
        println!(
            "{:>4} {:>6} dt {:.3e} wall {:8.3} s pos {:.2e} vel {:.2e} speedup {:.2}{}",
            r.scenario,
            r.integrator,
            r.dt,
            r.wall_time_s,
            r.rel_l2_pos,
            r.rel_l2_vel,
            r.speedup,
            if r.low_resolution {
                " (low resolution)"
            } else {
                ""
            }
        );
    }
    Ok(())
}

fn run_verify(seed: u64) -> bool {
    let checks = run_checks(seed);
    for c in &checks {
        println!(
            "[{}] {}: {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!(
        "{} of {} checks passed",
        checks.len() - failed,
        checks.len()
    );
    failed == 0
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::AccuracyUnreachable { .. }) => 2,
        Some(Error::Singularity { .. }) => 3,
        Some(Error::Config(_) | Error::UnknownScenario(_)) => 4,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // clap's own usage code (2) is taken by accuracy failures
            return if e.use_stderr() {
                ExitCode::from(4)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Simulate(args) => run_simulate(args),
        Command::Benchmark(args) => run_benchmark(args),
        Command::Verify { seed } => {
            return if run_verify(seed) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            };
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
