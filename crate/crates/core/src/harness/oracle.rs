use super::config::IntegratorKind;
use super::config::ScenarioConfig;
use super::run::{run, RunOutcome};
use crate::dynamics::{q_rhs, Loads, NodeFields, RhsEvaluator, RodModel, RodState};
use crate::kinematics::solve_pt;
use crate::{Error, Result, Vec3};

/// Classical fourth-order Runge–Kutta on the full `(p, q, ω, v)` system,
/// with `p_t` recovered from `ω` at every stage.
#[derive(Debug, Clone)]
pub struct Rk4Integrator {
    model: RodModel,
    fields: NodeFields,
    t: f64,
    ds: f64,
    eval: RhsEvaluator,
    stage: NodeFields,
    k: [NodeFields; 4],
}

impl Rk4Integrator {
    pub fn new(model: RodModel, state: &RodState) -> Result<Self> {
        let n = state.nodes.len();
        if model.nodes() != n {
            return Err(Error::ShapeMismatch(format!(
                "model has {} nodes, state {n}",
                model.nodes()
            )));
        }
        let fields = NodeFields::from_state(state);
        let eval = RhsEvaluator::new(n, state.ds)?;
        let z = NodeFields {
            p: vec![Vec3::zeros(); n],
            q: vec![Vec3::zeros(); n],
            omega: vec![Vec3::zeros(); n],
            v: vec![Vec3::zeros(); n],
        };
        Ok(Self {
            model,
            fields,
            t: state.t,
            ds: state.ds,
            eval,
            stage: z.clone(),
            k: [z.clone(), z.clone(), z.clone(), z],
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn state(&self) -> RodState {
        self.fields.to_state(self.t, self.ds)
    }

    fn derivative(
        &mut self,
        which: usize,
        loads: &dyn Loads,
        t: f64,
        from_stage: bool,
    ) -> Result<()> {
        let src = if from_stage {
            &self.stage
        } else {
            &self.fields
        };
        self.eval.configure(&src.p, &src.q)?;
        let k = &mut self.k[which];
        self.eval.rates(
            &self.model,
            loads,
            &src.omega,
            &src.v,
            t,
            &mut k.omega,
            &mut k.v,
        )?;
        for i in 0..src.len() {
            if self.model.is_clamped(i) {
                k.p[i] = Vec3::zeros();
                k.q[i] = Vec3::zeros();
                continue;
            }
            k.p[i] = solve_pt(&src.p[i], &src.omega[i]).map_err(|e| match e {
                Error::Singularity { magnitude, .. } => Error::Singularity {
                    magnitude,
                    node: Some(i),
                    time: Some(t),
                },
                other => other,
            })?;
            k.q[i] = q_rhs(&src.q[i], &src.omega[i], &src.v[i]);
        }
        Ok(())
    }

    fn set_stage(&mut self, which: usize, h: f64) {
        let k = &self.k[which];
        let f = &self.fields;
        for i in 0..f.len() {
            self.stage.p[i] = f.p[i] + h * k.p[i];
            self.stage.q[i] = f.q[i] + h * k.q[i];
            self.stage.omega[i] = f.omega[i] + h * k.omega[i];
            self.stage.v[i] = f.v[i] + h * k.v[i];
        }
    }

    pub fn step(&mut self, loads: &dyn Loads, dt: f64) -> Result<()> {
        let t = self.t;
        self.derivative(0, loads, t, false)?;
        self.set_stage(0, 0.5 * dt);
        self.derivative(1, loads, t + 0.5 * dt, true)?;
        self.set_stage(1, 0.5 * dt);
        self.derivative(2, loads, t + 0.5 * dt, true)?;
        self.set_stage(2, dt);
        self.derivative(3, loads, t + dt, true)?;
        let w = dt / 6.0;
        let [k1, k2, k3, k4] = &self.k;
        let f = &mut self.fields;
        for i in 0..f.len() {
            f.p[i] += w * (k1.p[i] + 2.0 * k2.p[i] + 2.0 * k3.p[i] + k4.p[i]);
            f.q[i] += w * (k1.q[i] + 2.0 * k2.q[i] + 2.0 * k3.q[i] + k4.q[i]);
            f.omega[i] += w * (k1.omega[i] + 2.0 * k2.omega[i] + 2.0 * k3.omega[i] + k4.omega[i]);
            f.v[i] += w * (k1.v[i] + 2.0 * k2.v[i] + 2.0 * k3.v[i] + k4.v[i]);
        }
        self.t = t + dt;
        for (i, p) in f.p.iter().enumerate() {
            if !crate::kinematics::in_chart(p) {
                return Err(Error::Singularity {
                    magnitude: p.norm(),
                    node: Some(i),
                    time: Some(self.t),
                });
            }
        }
        Ok(())
    }
}

/// Default reference step. RK4 at this step agrees with itself at half the
/// step to ~1e-7 (relative L²) on the built-in scenarios.
pub const ORACLE_DT: f64 = 1e-5;

/// Oracle time step for a configuration: a tenth of its step, capped at
/// [`ORACLE_DT`].
pub fn oracle_dt(cfg: &ScenarioConfig) -> f64 {
    (cfg.dt / 10.0).min(ORACLE_DT)
}

/// Reference trajectory of `cfg`. On a chart singularity the oracle step is
/// refined tenfold, at most twice.
pub fn oracle_integrate(cfg: &ScenarioConfig) -> Result<RunOutcome> {
    oracle_integrate_at(cfg, oracle_dt(cfg))
}

pub fn oracle_integrate_at(cfg: &ScenarioConfig, dt: f64) -> Result<RunOutcome> {
    let mut dt = dt;
    let mut refinements = 0;
    loop {
        match run(cfg, IntegratorKind::Oracle, dt, None) {
            Err(Error::Singularity { .. }) if refinements < 2 => {
                dt /= 10.0;
                refinements += 1;
            }
            other => return other,
        }
    }
}
