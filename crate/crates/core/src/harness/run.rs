use std::path::PathBuf;
use std::time::Instant;

use super::config::{IntegratorKind, ScenarioConfig, ScenarioLoads, TRACE_RATE};
use super::oracle::Rk4Integrator;
use super::scenario::initial_state;
use super::trace::{Field, NodeSample, Trace};
use crate::alpha::{AlphaIntegrator, RodSystem};
use crate::dynamics::{RodState, SnmIntegrator};
use crate::kinematics::{in_chart, rotation_vector_near, DirectorFrame};
use crate::{Error, Result, Vec3};

/// Orthonormality drift above which a sample counts as an invariant violation.
pub const ORTHONORMALITY_TOL: f64 = 1e-8;

/// How a run advances between trace samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplePlan {
    /// Number of sample intervals; the trace holds `intervals + 1` rows.
    pub intervals: usize,
    pub steps_per_interval: usize,
    /// Step actually used: the largest `dt' ≤ dt` dividing the sample interval.
    pub dt: f64,
}

impl SamplePlan {
    pub fn new(duration: f64, dt: f64) -> Self {
        let intervals = ((duration * TRACE_RATE) + 1e-9).floor().max(1.0) as usize;
        let interval = duration / intervals as f64;
        let steps_per_interval = ((interval / dt) - 1e-9).ceil().max(1.0) as usize;
        Self {
            intervals,
            steps_per_interval,
            dt: interval / steps_per_interval as f64,
        }
    }

    pub fn interval(&self) -> f64 {
        self.dt * self.steps_per_interval as f64
    }

    pub fn steps(&self) -> usize {
        self.intervals * self.steps_per_interval
    }
}

/// Result of one integration.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub trace: Trace,
    pub plan: SamplePlan,
    /// Wall time of the integration loop including sampling, excluding setup
    /// and output.
    pub wall_time: f64,
    pub steps: usize,
    pub invariant_violations: usize,
    /// Set when the run stopped early because it exceeded an [`ErrorBudget`].
    pub aborted: bool,
}

/// Stops a run as soon as its accumulated squared error already exceeds
/// `tolerance² ‖reference‖²` for either field.
#[derive(Debug, Clone)]
pub struct ErrorBudget<'a> {
    pub reference: &'a Trace,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub wall_time: f64,
    pub steps: usize,
    /// Errors against the oracle, when one was computed.
    pub rel_l2_position: Option<f64>,
    pub rel_l2_velocity: Option<f64>,
    pub trace_path: Option<PathBuf>,
    pub invariant_violations: usize,
}

enum Stepper<'a> {
    Snm(SnmIntegrator),
    Oracle(Rk4Integrator),
    Alpha(Box<AlphaIntegrator<RodSystem<'a>>>),
}

impl Stepper<'_> {
    fn step(&mut self, loads: &ScenarioLoads, dt: f64) -> Result<()> {
        match self {
            Stepper::Snm(s) => s.step(loads, dt),
            Stepper::Oracle(s) => s.step(loads, dt),
            Stepper::Alpha(s) => s.step(dt),
        }
    }
}

fn sample_rod(trace: &mut Trace, state: &RodState) -> Result<usize> {
    trace.push_state(state)?;
    Ok(state.nodes.iter().filter(|n| !in_chart(&n.p)).count())
}

fn sample_alpha(
    trace: &mut Trace,
    integ: &AlphaIntegrator<RodSystem<'_>>,
    hint: &mut Vec<Vec3>,
) -> usize {
    let sys = &integ.system;
    let x = integ.state();
    let rot = sys.rotations(x);
    let pos = sys.positions(x);
    let mut violations = 0;
    let mut prev = Vec3::zeros();
    let row = (0..sys.nodes())
        .map(|i| {
            let near = if hint.len() == sys.nodes() {
                hint[i]
            } else {
                prev
            };
            let p = rotation_vector_near(&rot[i], &near);
            prev = p;
            if DirectorFrame::from_matrix(&rot[i]).orthonormality_residual() > ORTHONORMALITY_TOL
                || !in_chart(&p)
            {
                violations += 1;
            }
            let k = i * crate::alpha::BLOCK;
            let v = Vec3::new(x[k], x[k + 1], x[k + 2]);
            let omega = Vec3::new(x[k + 3], x[k + 4], x[k + 5]);
            NodeSample {
                p,
                q: -(rot[i].transpose() * pos[i]),
                omega,
                v,
                r: pos[i],
                velocity: rot[i] * v,
            }
        })
        .collect::<Vec<_>>();
    *hint = row.iter().map(|s| s.p).collect();
    trace.push(integ.time(), row);
    violations
}

/// Integrates `cfg` with `kind` at (at most) `dt`, sampling at the trace rate.
pub fn run(
    cfg: &ScenarioConfig,
    kind: IntegratorKind,
    dt: f64,
    budget: Option<&ErrorBudget>,
) -> Result<RunOutcome> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::Config(format!(
            "time step must be positive, got {dt}"
        )));
    }
    let (state, model) = initial_state(cfg)?;
    let loads = cfg.scenario_loads();
    let plan = SamplePlan::new(cfg.duration, dt);
    if let Some(b) = budget {
        if b.reference.len() != plan.intervals + 1 || b.reference.nodes() != state.nodes.len() {
            return Err(Error::ShapeMismatch(
                "reference trace does not match the run".into(),
            ));
        }
    }
    let limits = budget.map(|b| {
        let total = |f: Field| {
            (0..b.reference.len())
                .map(|k| b.reference.row_norm_squared(k, f))
                .sum::<f64>()
        };
        let t2 = b.tolerance * b.tolerance;
        (t2 * total(Field::Position), t2 * total(Field::Velocity))
    });

    let mut stepper = match kind {
        IntegratorKind::Snm => Stepper::Snm(SnmIntegrator::new(model, &state)?),
        IntegratorKind::Oracle => Stepper::Oracle(Rk4Integrator::new(model, &state)?),
        IntegratorKind::Alpha => {
            let (sys, x0) = RodSystem::from_rod_state(model, &loads, &state)?;
            Stepper::Alpha(Box::new(AlphaIntegrator::new(
                sys,
                cfg.alpha_params,
                x0,
                state.t,
            )?))
        }
    };

    let start = Instant::now();
    let mut trace = Trace::default();
    let mut hint = Vec::new();
    let mut violations = 0;
    let mut sample = |stepper: &Stepper, trace: &mut Trace| -> Result<usize> {
        match stepper {
            Stepper::Snm(s) => sample_rod(trace, &s.state()),
            Stepper::Oracle(s) => sample_rod(trace, &s.state()),
            Stepper::Alpha(s) => Ok(sample_alpha(trace, s, &mut hint)),
        }
    };
    violations += sample(&stepper, &mut trace)?;
    let mut err = (0.0, 0.0);
    let mut steps = 0;
    let mut aborted = false;
    for k in 1..=plan.intervals {
        for _ in 0..plan.steps_per_interval {
            stepper.step(&loads, plan.dt)?;
            steps += 1;
        }
        violations += sample(&stepper, &mut trace)?;
        // pin the sample time to the grid to avoid drift in the comparison
        *trace.times.last_mut().expect("sample pushed") = k as f64 * plan.interval();
        if let (Some(b), Some((lp, lv))) = (budget, limits) {
            let row = &trace.samples[k];
            let reference = &b.reference.samples[k];
            for (a, r) in row.iter().zip(reference) {
                err.0 += (a.r - r.r).norm_squared();
                err.1 += (a.velocity - r.velocity).norm_squared();
            }
            if !(err.0 <= lp && err.1 <= lv) {
                aborted = true;
                break;
            }
        }
    }
    let wall_time = start.elapsed().as_secs_f64();
    Ok(RunOutcome {
        trace,
        plan,
        wall_time,
        steps,
        invariant_violations: violations,
        aborted,
    })
}

/// Runs `cfg` with its own integrator and step, optionally writing the trace.
pub fn simulate(
    cfg: &ScenarioConfig,
    out: Option<&std::path::Path>,
) -> Result<(RunOutcome, RunReport)> {
    let outcome = if cfg.integrator == IntegratorKind::Oracle {
        super::oracle::oracle_integrate(cfg)?
    } else {
        run(cfg, cfg.integrator, cfg.dt, None)?
    };
    if let Some(path) = out {
        outcome.trace.save_csv(path)?;
    }
    let report = RunReport {
        wall_time: outcome.wall_time,
        steps: outcome.steps,
        rel_l2_position: None,
        rel_l2_velocity: None,
        trace_path: out.map(|p| p.to_path_buf()),
        invariant_violations: outcome.invariant_violations,
    };
    Ok((outcome, report))
}
