use super::loads::Loads;
use super::material::RodModel;
use super::rhs::{q_rhs, RhsEvaluator};
use super::state::{NodeFields, RodState};
use crate::twist::exp_step;
use crate::{Error, Result, Vec3};

/// Split integrator: velocity half-kick, exact frozen-twist update of `p`,
/// midpoint update of `q`, velocity half-kick.
///
/// Keeps the configuration-dependent part of the right-hand side between
/// steps, so consecutive calls to [`step`](Self::step) evaluate the
/// kinematics once per step.
#[derive(Debug, Clone)]
pub struct SnmIntegrator {
    model: RodModel,
    fields: NodeFields,
    t: f64,
    ds: f64,
    eval: RhsEvaluator,
    k_omega: Vec<Vec3>,
    k_v: Vec<Vec3>,
    mid_omega: Vec<Vec3>,
    mid_v: Vec<Vec3>,
}

impl SnmIntegrator {
    pub fn new(model: RodModel, state: &RodState) -> Result<Self> {
        let n = state.nodes.len();
        if model.nodes() != n {
            return Err(Error::ShapeMismatch(format!(
                "model has {} nodes, state {n}",
                model.nodes()
            )));
        }
        let fields = NodeFields::from_state(state);
        let mut eval = RhsEvaluator::new(n, state.ds)?;
        eval.configure(&fields.p, &fields.q)?;
        let z = vec![Vec3::zeros(); n];
        Ok(Self {
            model,
            fields,
            t: state.t,
            ds: state.ds,
            eval,
            k_omega: z.clone(),
            k_v: z.clone(),
            mid_omega: z.clone(),
            mid_v: z,
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn model(&self) -> &RodModel {
        &self.model
    }

    pub fn fields(&self) -> &NodeFields {
        &self.fields
    }

    pub fn state(&self) -> RodState {
        self.fields.to_state(self.t, self.ds)
    }

    /// Advances by `dt`. On error the integrator is left mid-step and should
    /// be discarded.
    pub fn step(&mut self, loads: &dyn Loads, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!(
                "time step must be positive, got {dt}"
            )));
        }
        let t0 = self.t;
        let half = 0.5 * dt;

        self.kick(loads, t0, half)?;

        let n = self.fields.len();
        for i in 0..n {
            if self.model.is_clamped(i) {
                continue;
            }
            self.fields.p[i] =
                exp_step(&self.fields.p[i], &self.fields.omega[i], dt).map_err(|e| match e {
                    Error::Singularity { magnitude, .. } => Error::Singularity {
                        magnitude,
                        node: Some(i),
                        time: Some(t0 + dt),
                    },
                    other => other,
                })?;
            let (q, w, v) = (self.fields.q[i], self.fields.omega[i], self.fields.v[i]);
            let q_mid = q + half * q_rhs(&q, &w, &v);
            self.fields.q[i] = q + dt * q_rhs(&q_mid, &w, &v);
        }
        self.enforce_boundary();
        self.eval.configure(&self.fields.p, &self.fields.q)?;

        self.kick(loads, t0 + half, half)?;
        self.enforce_boundary();
        self.t = t0 + dt;
        if !self
            .fields
            .omega
            .iter()
            .chain(&self.fields.v)
            .chain(&self.fields.q)
            .all(|x| x.iter().all(|c| c.is_finite()))
        {
            return Err(Error::NonFinite(self.t));
        }
        Ok(())
    }

    /// Explicit midpoint on `(ω, v)` over `h` with `(p, q)` held fixed.
    fn kick(&mut self, loads: &dyn Loads, t: f64, h: f64) -> Result<()> {
        let f = &mut self.fields;
        self.eval.rates(
            &self.model,
            loads,
            &f.omega,
            &f.v,
            t,
            &mut self.k_omega,
            &mut self.k_v,
        )?;
        for i in 0..f.len() {
            self.mid_omega[i] = f.omega[i] + 0.5 * h * self.k_omega[i];
            self.mid_v[i] = f.v[i] + 0.5 * h * self.k_v[i];
        }
        self.eval.rates(
            &self.model,
            loads,
            &self.mid_omega,
            &self.mid_v,
            t + 0.5 * h,
            &mut self.k_omega,
            &mut self.k_v,
        )?;
        for i in 0..f.len() {
            f.omega[i] += h * self.k_omega[i];
            f.v[i] += h * self.k_v[i];
        }
        Ok(())
    }

    fn enforce_boundary(&mut self) {
        let n = self.fields.len();
        let f = &mut self.fields;
        if let Some((p, q)) = self.model.clamp_start {
            f.p[0] = p;
            f.q[0] = q;
            f.omega[0] = Vec3::zeros();
            f.v[0] = Vec3::zeros();
        }
        if let Some((p, q)) = self.model.clamp_end {
            f.p[n - 1] = p;
            f.q[n - 1] = q;
            f.omega[n - 1] = Vec3::zeros();
            f.v[n - 1] = Vec3::zeros();
        }
    }
}

/// One split step from `state`; convenience wrapper around [`SnmIntegrator`].
pub fn snm_step(
    state: &RodState,
    model: &RodModel,
    loads: &dyn Loads,
    dt: f64,
) -> Result<RodState> {
    let mut integrator = SnmIntegrator::new(model.clone(), state)?;
    integrator.step(loads, dt)?;
    Ok(integrator.state())
}
