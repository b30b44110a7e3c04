use nalgebra::DMatrix;

use super::banded::BandedLu;
use super::params::AlphaParams;
use super::system::FirstOrderSystem;
use crate::{Error, Result};

/// Relative Newton tolerance on the state increment, checked per block.
pub const NEWTON_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 25;
/// Once the residual stops falling it sits at the rounding level of the
/// stiff internal forces and the increments are amplified rounding noise.
/// A stalled iteration is accepted if its last increment was within this
/// factor of the Newton tolerance.
pub const STALL_FACTOR: f64 = 1e3;
const ABS_FLOOR: f64 = 1e-14;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub steps: usize,
    pub newton_iterations: usize,
    pub jacobians: usize,
}

enum Factor {
    Dense(nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>),
    Banded(BandedLu),
}

/// Generalized-α integrator for `M ẋ + G(x, t) = 0`.
///
/// Each step solves for `ẋ_i` with a Newton iteration whose Jacobian
/// `(1 - α_m) M + (1 - α_f) γ Δt ∂G/∂x` is formed by finite differences at
/// the start of a step (column-colored when `G` is banded). The factorization
/// is carried over to later steps of the same size and rebuilt whenever the
/// iteration stops contracting.
pub struct AlphaIntegrator<S: FirstOrderSystem> {
    pub system: S,
    params: AlphaParams,
    x: Vec<f64>,
    xdot: Vec<f64>,
    t: f64,
    stats: StepStats,
    tol: f64,
    max_iter: usize,
    // scratch
    x_new: Vec<f64>,
    x_f: Vec<f64>,
    a: Vec<f64>,
    g0: Vec<f64>,
    g1: Vec<f64>,
    res: Vec<f64>,
    factor: Option<Factor>,
    /// Step size the current factorization was built for.
    factor_dt: f64,
    reuse: bool,
}

impl<S: FirstOrderSystem> AlphaIntegrator<S> {
    /// Starts from `x0` with the consistent initial rate `ẋ0 = -M⁻¹ G(x0, t0)`.
    pub fn new(mut system: S, params: AlphaParams, x0: Vec<f64>, t0: f64) -> Result<Self> {
        params.validate()?;
        let n = system.dim();
        if x0.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "state {} vs system {n}",
                x0.len()
            )));
        }
        let mut g = vec![0.0; n];
        system.force(&x0, t0, &mut g)?;
        let xdot = g.iter().zip(system.mass()).map(|(g, m)| -g / m).collect();
        Ok(Self::with_rate(system, params, x0, xdot, t0))
    }

    pub fn with_rate(
        system: S,
        params: AlphaParams,
        x0: Vec<f64>,
        xdot0: Vec<f64>,
        t0: f64,
    ) -> Self {
        let n = x0.len();
        Self {
            system,
            params,
            x: x0,
            xdot: xdot0,
            t: t0,
            stats: StepStats::default(),
            tol: NEWTON_TOL,
            max_iter: NEWTON_MAX_ITER,
            x_new: vec![0.0; n],
            x_f: vec![0.0; n],
            a: vec![0.0; n],
            g0: vec![0.0; n],
            g1: vec![0.0; n],
            res: vec![0.0; n],
            factor: None,
            factor_dt: f64::NAN,
            reuse: true,
        }
    }

    pub fn with_newton(mut self, tol: f64, max_iter: usize) -> Self {
        self.tol = tol;
        self.max_iter = max_iter;
        self
    }

    /// With `false`, the iteration matrix is rebuilt at the start of every
    /// step instead of being carried over while Newton keeps contracting.
    pub fn with_jacobian_reuse(mut self, reuse: bool) -> Self {
        self.reuse = reuse;
        self
    }

    pub fn state(&self) -> &[f64] {
        &self.x
    }

    pub fn rate(&self) -> &[f64] {
        &self.xdot
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn stats(&self) -> StepStats {
        self.stats
    }

    pub fn params(&self) -> &AlphaParams {
        &self.params
    }

    fn update_state(&mut self, dt: f64) {
        let AlphaParams { alpha_f, gamma, .. } = self.params;
        for i in 0..self.x.len() {
            self.x_new[i] = self.x[i] + dt * ((1.0 - gamma) * self.xdot[i] + gamma * self.a[i]);
            self.x_f[i] = (1.0 - alpha_f) * self.x_new[i] + alpha_f * self.x[i];
        }
    }

    fn residual(&mut self, dt: f64) -> Result<()> {
        let AlphaParams {
            alpha_m, alpha_f, ..
        } = self.params;
        self.update_state(dt);
        let t_f = self.t + (1.0 - alpha_f) * dt;
        self.system.force(&self.x_f, t_f, &mut self.res)?;
        let m = self.system.mass();
        for i in 0..self.res.len() {
            self.res[i] += m[i] * ((1.0 - alpha_m) * self.a[i] + alpha_m * self.xdot[i]);
        }
        if !self.res.iter().all(|r| r.is_finite()) {
            return Err(Error::NonFinite(self.t + dt));
        }
        Ok(())
    }

    fn build_jacobian(&mut self, dt: f64) -> Result<()> {
        let AlphaParams {
            alpha_m,
            alpha_f,
            gamma,
            ..
        } = self.params;
        let n = self.x.len();
        let t_f = self.t + (1.0 - alpha_f) * dt;
        self.update_state(dt);
        self.system.begin_jacobian(&self.x_f, t_f)?;
        self.system.jacobian_force(&self.x_f, t_f, &mut self.g0)?;
        let scale = (1.0 - alpha_f) * gamma * dt;
        let colors = match self.system.half_bandwidth() {
            Some(b) if 2 * b + 1 < n => Some(b),
            _ => None,
        };
        self.stats.jacobians += 1;
        self.factor_dt = dt;
        match colors {
            Some(b) => {
                let mut lu = match self.factor.take() {
                    Some(Factor::Banded(lu)) if lu.dim() == n => lu,
                    _ => BandedLu::new(n, b, b),
                };
                lu.clear();
                let stride = 2 * b + 1;
                let mut xp = self.x_f.clone();
                let mut h = vec![0.0; n];
                for color in 0..stride {
                    for j in (color..n).step_by(stride) {
                        h[j] = 1e-7 * (1.0 + self.x_f[j].abs());
                        xp[j] = self.x_f[j] + h[j];
                    }
                    self.system.jacobian_force(&xp, t_f, &mut self.g1)?;
                    for j in (color..n).step_by(stride) {
                        xp[j] = self.x_f[j];
                        let lo = j.saturating_sub(b);
                        let hi = (j + b).min(n - 1);
                        for i in lo..=hi {
                            let d = (self.g1[i] - self.g0[i]) / h[j];
                            if d != 0.0 {
                                lu.set(i, j, scale * d);
                            }
                        }
                    }
                }
                let m = self.system.mass();
                for i in 0..n {
                    lu.add(i, i, (1.0 - alpha_m) * m[i]);
                }
                lu.factor()?;
                self.factor = Some(Factor::Banded(lu));
            }
            None => {
                let mut jac = DMatrix::zeros(n, n);
                let mut xp = self.x_f.clone();
                for j in 0..n {
                    let h = 1e-7 * (1.0 + self.x_f[j].abs());
                    xp[j] = self.x_f[j] + h;
                    self.system.jacobian_force(&xp, t_f, &mut self.g1)?;
                    xp[j] = self.x_f[j];
                    for i in 0..n {
                        jac[(i, j)] = scale * (self.g1[i] - self.g0[i]) / h;
                    }
                }
                let m = self.system.mass();
                for i in 0..n {
                    jac[(i, i)] += (1.0 - alpha_m) * m[i];
                }
                let lu = jac.lu();
                if !lu.is_invertible() {
                    return Err(Error::SingularJacobian);
                }
                self.factor = Some(Factor::Dense(lu));
            }
        }
        Ok(())
    }

    fn solve(&self, rhs: &mut [f64]) -> Result<()> {
        match &self.factor {
            Some(Factor::Banded(lu)) => lu.solve(rhs),
            Some(Factor::Dense(lu)) => {
                let b = nalgebra::DVector::from_column_slice(rhs);
                let x = lu.solve(&b).ok_or(Error::SingularJacobian)?;
                rhs.copy_from_slice(x.as_slice());
                Ok(())
            }
            None => Err(Error::SingularJacobian),
        }
    }

    /// Largest block-relative state increment produced by `delta_a`.
    fn increment_ratio(&self, delta_a: &[f64], dt: f64) -> f64 {
        let blocks = self.system.block_count();
        let mut dx = vec![0.0f64; blocks];
        let mut xs = vec![0.0f64; blocks];
        let g = self.params.gamma * dt;
        for (j, d) in delta_a.iter().enumerate() {
            let b = self.system.block_of(j);
            dx[b] = dx[b].max((g * d).abs());
            xs[b] = xs[b].max(self.x_new[j].abs());
        }
        dx.iter()
            .zip(&xs)
            .map(|(d, x)| d / (self.tol * x + ABS_FLOOR))
            .fold(0.0, f64::max)
    }

    fn accept(&mut self, dt: f64) {
        self.update_state(dt);
        self.system.end_step(&self.x, &self.x_new, dt);
        std::mem::swap(&mut self.x, &mut self.x_new);
        self.xdot.copy_from_slice(&self.a);
        self.t += dt;
        self.stats.steps += 1;
    }

    /// Advances by `dt`. On failure the state is left at the start of the step.
    pub fn step(&mut self, dt: f64) -> Result<()> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!(
                "time step must be positive, got {dt}"
            )));
        }
        self.a.copy_from_slice(&self.xdot);
        let fresh = !self.reuse || self.factor.is_none() || self.factor_dt != dt;
        if fresh {
            self.build_jacobian(dt)?;
        }
        match self.newton(dt, fresh) {
            // a carried-over matrix may be too far off; retry once with a new one
            Err(Error::NewtonDivergence { .. } | Error::NonFinite(_)) if !fresh => {
                self.a.copy_from_slice(&self.xdot);
                self.build_jacobian(dt)?;
                self.newton(dt, true)
            }
            other => other,
        }
    }

    fn newton(&mut self, dt: f64, mut fresh: bool) -> Result<()> {
        let mut prev_ratio = f64::INFINITY;
        let mut trace = Vec::new();
        let mut delta = vec![0.0; self.x.len()];
        let mut prev_res = f64::INFINITY;
        for _ in 0..self.max_iter {
            self.residual(dt)?;
            trace.push(self.res.iter().map(|r| r * r).sum::<f64>().sqrt());
            let res_max = self.res.iter().fold(0.0f64, |m, r| m.max(r.abs()));
            let stalled = res_max > 0.5 * prev_res || res_max == 0.0;
            if stalled && prev_ratio <= STALL_FACTOR {
                self.accept(dt);
                return Ok(());
            }
            prev_res = res_max;
            delta.iter_mut().zip(&self.res).for_each(|(d, r)| *d = -r);
            self.solve(&mut delta)?;
            for (a, d) in self.a.iter_mut().zip(&delta) {
                *a += d;
            }
            self.stats.newton_iterations += 1;
            self.update_state(dt);
            let ratio = self.increment_ratio(&delta, dt);
            if !ratio.is_finite() {
                break;
            }
            if ratio <= 1.0 {
                self.accept(dt);
                return Ok(());
            }
            if !fresh && ratio > 0.5 * prev_ratio {
                self.build_jacobian(dt)?;
                fresh = true;
            } else {
                fresh = false;
            }
            prev_ratio = ratio;
        }
        Err(Error::NewtonDivergence {
            iterations: self.max_iter,
            residual: trace.last().copied().unwrap_or(f64::NAN),
            trace,
        })
    }
}

/// One generalized-α step of `system` from `(x_prev, ẋ_prev)` at `t`.
pub fn alpha_step<S: FirstOrderSystem>(
    system: S,
    x_prev: &[f64],
    xdot_prev: &[f64],
    t: f64,
    dt: f64,
    params: AlphaParams,
) -> Result<(Vec<f64>, Vec<f64>)> {
    params.validate()?;
    if x_prev.len() != system.dim() || xdot_prev.len() != system.dim() {
        return Err(Error::ShapeMismatch(
            "state and rate must match the system size".into(),
        ));
    }
    let mut integrator =
        AlphaIntegrator::with_rate(system, params, x_prev.to_vec(), xdot_prev.to_vec(), t);
    integrator.step(dt)?;
    Ok((integrator.x, integrator.xdot))
}
