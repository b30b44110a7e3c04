use std::io::Write;

use super::config::{IntegratorKind, ScenarioConfig, ScenarioId};
use super::oracle::{oracle_integrate_at, ORACLE_DT};
use super::run::{run, ErrorBudget, RunOutcome};
use super::trace::{relative_l2, Field, Trace};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkOptions {
    /// Relative L² bound for both positions and velocities.
    pub tolerance: f64,
    /// Smallest and largest step considered.
    pub dt_min: f64,
    pub dt_max: f64,
    /// Search stops once the bracket `[pass, fail]` is this tight (ratio).
    pub bracket_ratio: f64,
    pub repetitions: usize,
    /// Oracle step; defaults to [`ORACLE_DT`].
    pub oracle_dt: Option<f64>,
}

impl Default for BenchmarkOptions {
    fn default() -> Self {
        Self {
            tolerance: 0.01,
            dt_min: 1e-6,
            dt_max: 1e-2,
            bracket_ratio: 1.1,
            repetitions: 3,
            oracle_dt: None,
        }
    }
}

impl BenchmarkOptions {
    pub fn oracle_step(&self) -> f64 {
        self.oracle_dt.unwrap_or(ORACLE_DT)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub scenario: String,
    pub integrator: IntegratorKind,
    pub dt: f64,
    pub wall_time_s: f64,
    pub rel_l2_pos: f64,
    pub rel_l2_vel: f64,
    /// Wall time of the α-method divided by this row's wall time.
    pub speedup: f64,
    pub steps: usize,
    pub invariant_violations: usize,
    /// Fewer than 10 segments: accuracy figures say little about the rod.
    pub low_resolution: bool,
}

/// Largest step meeting the tolerance and the corresponding full run.
#[derive(Debug, Clone)]
pub struct AccurateStep {
    pub dt: f64,
    pub outcome: RunOutcome,
    pub rel_l2_pos: f64,
    pub rel_l2_vel: f64,
    /// Every `(dt, passed)` tried, in order.
    pub tried: Vec<(f64, bool)>,
}

fn evaluate(
    cfg: &ScenarioConfig,
    kind: IntegratorKind,
    k: usize,
    interval: f64,
    reference: &Trace,
    tolerance: f64,
) -> Result<Option<(RunOutcome, f64, f64)>> {
    let dt = interval / k as f64;
    let budget = ErrorBudget {
        reference,
        tolerance,
    };
    match run(cfg, kind, dt, Some(&budget)) {
        Ok(out) if !out.aborted => {
            let pos = relative_l2(&out.trace, reference, Field::Position)?;
            let vel = relative_l2(&out.trace, reference, Field::Velocity)?;
            Ok((pos <= tolerance && vel <= tolerance).then_some((out, pos, vel)))
        }
        Ok(_) => Ok(None),
        Err(Error::Config(msg)) => Err(Error::Config(msg)),
        Err(Error::ShapeMismatch(msg)) => Err(Error::ShapeMismatch(msg)),
        // blow-ups, chart exits and Newton failures all count as inaccurate
        Err(_) => Ok(None),
    }
}

/// Searches the largest step in `[dt_min, dt_max]` whose run stays within
/// the tolerance of `reference`.
///
/// Steps are restricted to whole fractions `interval / k` of the sample
/// interval. The search halves the step from `dt_max` until a run passes,
/// then bisects (in `k`) between the last failing and the first passing step.
pub fn find_accurate_dt(
    cfg: &ScenarioConfig,
    kind: IntegratorKind,
    reference: &Trace,
    opts: &BenchmarkOptions,
) -> Result<AccurateStep> {
    let interval = super::run::SamplePlan::new(cfg.duration, opts.dt_max).interval();
    let k_max = (interval / opts.dt_min).floor().max(1.0) as usize;
    let mut tried = Vec::new();
    let mut k_fail = 0usize;
    let mut k = ((interval / opts.dt_max) - 1e-9).ceil().max(1.0) as usize;
    let mut best = loop {
        let result = evaluate(cfg, kind, k, interval, reference, opts.tolerance)?;
        tried.push((interval / k as f64, result.is_some()));
        match result {
            Some(found) => break (k, found),
            None if k >= k_max => {
                return Err(Error::AccuracyUnreachable {
                    lo: opts.dt_min,
                    hi: opts.dt_max,
                    tolerance: opts.tolerance,
                })
            }
            None => {
                k_fail = k;
                k = (2 * k).min(k_max);
            }
        }
    };
    while k_fail > 0 && best.0 > k_fail + 1 && best.0 as f64 / k_fail as f64 > opts.bracket_ratio {
        let mid =
            ((k_fail as f64 * best.0 as f64).sqrt().round() as usize).clamp(k_fail + 1, best.0 - 1);
        let result = evaluate(cfg, kind, mid, interval, reference, opts.tolerance)?;
        tried.push((interval / mid as f64, result.is_some()));
        match result {
            Some(found) => best = (mid, found),
            None => k_fail = mid,
        }
    }
    let (k, (outcome, pos, vel)) = best;
    Ok(AccurateStep {
        dt: interval / k as f64,
        outcome,
        rel_l2_pos: pos,
        rel_l2_vel: vel,
        tried,
    })
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Median wall time over `repetitions` runs at the accepted step; the search
/// run counts as the first repetition.
fn timed(
    cfg: &ScenarioConfig,
    kind: IntegratorKind,
    found: &AccurateStep,
    repetitions: usize,
) -> Result<f64> {
    let mut times = vec![found.outcome.wall_time];
    for _ in 1..repetitions.max(1) {
        times.push(run(cfg, kind, found.dt, None)?.wall_time);
    }
    Ok(median(times))
}

/// Per-scenario comparison: one row per integrator.
pub fn benchmark_scenario(
    cfg: &ScenarioConfig,
    opts: &BenchmarkOptions,
) -> Result<Vec<BenchmarkRow>> {
    let oracle = oracle_integrate_at(cfg, opts.oracle_step())?;
    benchmark_against(cfg, &oracle.trace, opts)
}

pub fn benchmark_against(
    cfg: &ScenarioConfig,
    reference: &Trace,
    opts: &BenchmarkOptions,
) -> Result<Vec<BenchmarkRow>> {
    let mut rows = Vec::new();
    let mut found = Vec::new();
    for kind in [IntegratorKind::Snm, IntegratorKind::Alpha] {
        let step = find_accurate_dt(cfg, kind, reference, opts)?;
        let wall = timed(cfg, kind, &step, opts.repetitions)?;
        found.push((kind, step, wall));
    }
    let alpha_time = found
        .iter()
        .find(|(k, _, _)| *k == IntegratorKind::Alpha)
        .map(|(_, _, w)| *w)
        .unwrap_or(f64::NAN);
    for (kind, step, wall) in found {
        rows.push(BenchmarkRow {
            scenario: cfg.id.to_string(),
            integrator: kind,
            dt: step.dt,
            wall_time_s: wall,
            rel_l2_pos: step.rel_l2_pos,
            rel_l2_vel: step.rel_l2_vel,
            speedup: alpha_time / wall,
            steps: step.outcome.steps,
            invariant_violations: step.outcome.invariant_violations,
            low_resolution: cfg.segments < 10,
        });
    }
    Ok(rows)
}

/// Runs the comparison for each scenario in turn.
pub fn benchmark(configs: &[ScenarioConfig], opts: &BenchmarkOptions) -> Result<Vec<BenchmarkRow>> {
    let mut rows = Vec::new();
    for cfg in configs {
        rows.extend(benchmark_scenario(cfg, opts)?);
    }
    Ok(rows)
}

pub fn write_benchmark_csv<W: Write>(rows: &[BenchmarkRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "scenario",
        "integrator",
        "dt",
        "wall_time_s",
        "rel_l2_pos",
        "rel_l2_vel",
        "speedup",
    ])?;
    for r in rows {
        w.write_record([
            r.scenario.clone(),
            r.integrator.to_string(),
            format!("{:e}", r.dt),
            format!("{:.6}", r.wall_time_s),
            format!("{:.6e}", r.rel_l2_pos),
            format!("{:.6e}", r.rel_l2_vel),
            format!("{:.3}", r.speedup),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Scenario list as accepted by the command line, e.g. `"i,ii,iv"`.
pub fn parse_scenarios(list: &str) -> Result<Vec<ScenarioId>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}
