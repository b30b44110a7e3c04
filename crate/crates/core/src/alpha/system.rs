use nalgebra::DMatrix;

use crate::dynamics::rhs::{end_values, node_accelerations, segment_stresses};
use crate::dynamics::{
    half_rotation, node_resultants, segment_strain_rates, segment_strains, EndCondition, Loads,
    RodModel, RodState, SegmentStrain,
};
use crate::kinematics::{rotation_matrix, rotation_vector_near};
use crate::{Error, Mat3, Result, Vec3};

/// Unknowns per node and their offsets inside a node block.
pub const BLOCK: usize = 12;
pub const VEL: usize = 0;
pub const OMEGA: usize = 3;
pub const KAPPA: usize = 6;
pub const N_STRESS: usize = 9;

/// First-order system `M ẋ + G(x, t) = 0` with diagonal `M`.
pub trait FirstOrderSystem {
    fn dim(&self) -> usize;

    fn mass(&self) -> &[f64];

    fn force(&mut self, x: &[f64], t: f64, out: &mut [f64]) -> Result<()>;

    /// Half bandwidth of `∂G/∂x` in index space, if the coupling is local.
    fn half_bandwidth(&self) -> Option<usize> {
        None
    }

    /// Called once before the columns of a finite-difference Jacobian are
    /// evaluated through [`jacobian_force`](Self::jacobian_force).
    fn begin_jacobian(&mut self, _x: &[f64], _t: f64) -> Result<()> {
        Ok(())
    }

    /// `G` as seen by the Jacobian approximation; systems with weak nonlocal
    /// coupling may freeze it here to keep the Jacobian banded.
    fn jacobian_force(&mut self, x: &[f64], t: f64, out: &mut [f64]) -> Result<()> {
        self.force(x, t, out)
    }

    /// Convergence is checked separately on each block of unknowns.
    fn block_count(&self) -> usize {
        1
    }

    fn block_of(&self, _index: usize) -> usize {
        0
    }

    /// Hook after an accepted step.
    fn end_step(&mut self, _x_prev: &[f64], _x: &[f64], _dt: f64) {}
}

/// `M ẋ + A x = 0`.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    pub mass: Vec<f64>,
    pub a: DMatrix<f64>,
}

impl LinearSystem {
    /// Undamped oscillator `ü + ω² u = 0` as `x = (u, u̇)`.
    pub fn oscillator(omega: f64) -> Self {
        Self {
            mass: vec![1.0, 1.0],
            a: DMatrix::from_row_slice(2, 2, &[0.0, -1.0, omega * omega, 0.0]),
        }
    }

    /// Scalar decay `ẋ = λ x`.
    pub fn scalar(lambda: f64) -> Self {
        Self {
            mass: vec![1.0],
            a: DMatrix::from_element(1, 1, -lambda),
        }
    }
}

impl FirstOrderSystem for LinearSystem {
    fn dim(&self) -> usize {
        self.mass.len()
    }

    fn mass(&self) -> &[f64] {
        &self.mass
    }

    fn force(&mut self, x: &[f64], _t: f64, out: &mut [f64]) -> Result<()> {
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..x.len()).map(|j| self.a[(i, j)] * x[j]).sum();
        }
        Ok(())
    }
}

/// Per-block split of `G` into the linear transport part `K̂ x_s` (the plain
/// differences of `n`, `K κ`, `ω` and `v` across nodes and segments) and the
/// remainder `Λ`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceSplit {
    pub k_xs: Vec<f64>,
    pub lambda: Vec<f64>,
}

/// The rod in state-space form.
///
/// Block `i` holds the velocity and twist of node `i` (rows: linear and
/// angular momentum balance) and the curvature and stress of the segment
/// between nodes `i` and `i + 1` (rows: time derivatives of the segment
/// strain, with `ν = ν⁰ + S⁻¹ n`). The `n` rows carry the compliance `S⁻¹` as
/// their mass coefficients. The last block has no segment; its `κ`, `n` slots
/// stay at zero.
///
/// Fixed-frame loads need the director frames, which are rebuilt from `κ`
/// by composing the segment rotations `exp(ds κ)` from the first node.
pub struct RodSystem<'a> {
    model: RodModel,
    loads: &'a dyn Loads,
    ds: f64,
    nodes: usize,
    mass: Vec<f64>,
    base_rot: Mat3,
    base_pos: Vec3,
    rot: Vec<Mat3>,
    frozen_rot: Vec<Mat3>,
    segments: Vec<SegmentStrain>,
    w: Vec<Vec3>,
    v: Vec<Vec3>,
    m: Vec<Vec3>,
    n: Vec<Vec3>,
    torque: Vec<Vec3>,
    force: Vec<Vec3>,
}

impl<'a> RodSystem<'a> {
    /// `base_rot`, `base_pos` give the frame and position of the first node.
    pub fn new(
        model: RodModel,
        loads: &'a dyn Loads,
        ds: f64,
        base_rot: Mat3,
        base_pos: Vec3,
    ) -> Result<Self> {
        let nodes = model.nodes();
        if nodes < 3 {
            return Err(Error::GridTooSmall(nodes, 3));
        }
        let mat = &model.material;
        let inertia = mat.rotary_inertia();
        let compliance = mat.axial_stiffness().map(|s| 1.0 / s);
        let line = mat.line_density();
        let mut mass = Vec::with_capacity(nodes * BLOCK);
        for i in 0..nodes {
            mass.extend_from_slice(&[line, line, line]);
            mass.extend(inertia.iter());
            mass.extend_from_slice(&[1.0, 1.0, 1.0]);
            if i + 1 < nodes {
                mass.extend(compliance.iter());
            } else {
                mass.extend_from_slice(&[1.0, 1.0, 1.0]);
            }
        }
        let z = vec![Vec3::zeros(); nodes];
        Ok(Self {
            model,
            loads,
            ds,
            nodes,
            mass,
            base_rot,
            base_pos,
            rot: vec![Mat3::identity(); nodes],
            frozen_rot: vec![Mat3::identity(); nodes],
            segments: vec![SegmentStrain::default(); nodes - 1],
            w: z.clone(),
            v: z.clone(),
            m: vec![Vec3::zeros(); nodes - 1],
            n: vec![Vec3::zeros(); nodes - 1],
            torque: z.clone(),
            force: z,
        })
    }

    /// Builds the system and its state from a `(p, q, ω, v)` rod state.
    pub fn from_rod_state(
        model: RodModel,
        loads: &'a dyn Loads,
        state: &RodState,
    ) -> Result<(Self, Vec<f64>)> {
        let first = state.nodes.first().ok_or(Error::GridTooSmall(0, 3))?;
        let base_rot = rotation_matrix(&first.p);
        let base_pos = -(base_rot * first.q);
        let sys = Self::new(model, loads, state.ds, base_rot, base_pos)?;
        let x = sys.state_from_rod(state)?;
        Ok((sys, x))
    }

    pub fn model(&self) -> &RodModel {
        &self.model
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    pub fn ds(&self) -> f64 {
        self.ds
    }

    pub fn base(&self) -> (Mat3, Vec3) {
        (self.base_rot, self.base_pos)
    }

    /// Change of variables `(p, q, ω, v) -> (v, ω, κ, n)`.
    pub fn state_from_rod(&self, state: &RodState) -> Result<Vec<f64>> {
        if state.nodes.len() != self.nodes {
            return Err(Error::ShapeMismatch(format!(
                "state has {} nodes, system {}",
                state.nodes.len(),
                self.nodes
            )));
        }
        let segments = segment_strains(state)?;
        let s = self.model.material.axial_stiffness();
        let mut x = vec![0.0; self.nodes * BLOCK];
        for (i, node) in state.nodes.iter().enumerate() {
            put(&mut x, i, VEL, &node.v);
            put(&mut x, i, OMEGA, &node.omega);
        }
        for (j, seg) in segments.iter().enumerate() {
            put(&mut x, j, KAPPA, &seg.kappa);
            put(
                &mut x,
                j,
                N_STRESS,
                &s.component_mul(&(seg.nu - self.model.rest_nu[j])),
            );
        }
        Ok(x)
    }

    /// Director frames `R_{j+1} = R_j exp(ds κ_j)` from the first node.
    pub fn rotations_into(&self, x: &[f64], out: &mut [Mat3]) {
        out[0] = self.base_rot;
        for j in 0..self.nodes - 1 {
            let h = half_rotation(&get(x, j, KAPPA), self.ds);
            out[j + 1] = out[j] * (h * h);
        }
    }

    pub fn rotations(&self, x: &[f64]) -> Vec<Mat3> {
        let mut out = vec![Mat3::identity(); self.nodes];
        self.rotations_into(x, &mut out);
        out
    }

    /// Centerline `r_{j+1} = r_j + ds R_j H_j ν_j`.
    pub fn positions(&self, x: &[f64]) -> Vec<Vec3> {
        let compliance = self.model.material.axial_stiffness().map(|s| 1.0 / s);
        let mut out = Vec::with_capacity(self.nodes);
        out.push(self.base_pos);
        let mut rot = self.base_rot;
        for j in 0..self.nodes - 1 {
            let h = half_rotation(&get(x, j, KAPPA), self.ds);
            let nu = self.model.rest_nu[j] + compliance.component_mul(&get(x, j, N_STRESS));
            out.push(out[j] + self.ds * (rot * (h * nu)));
            rot *= h * h;
        }
        out
    }

    /// Maps back to `(p, q, ω, v)` with rotation vectors kept continuous
    /// along the rod and close to `p_hint` where given.
    pub fn to_rod_state(&self, x: &[f64], t: f64, p_hint: Option<&[Vec3]>) -> RodState {
        let rot = self.rotations(x);
        let pos = self.positions(x);
        let mut prev = Vec3::zeros();
        let nodes = (0..self.nodes)
            .map(|i| {
                let near = p_hint.map(|h| h[i]).unwrap_or(prev);
                let p = rotation_vector_near(&rot[i], &near);
                prev = p;
                crate::NodeState {
                    p,
                    q: -(rot[i].transpose() * pos[i]),
                    omega: get(x, i, OMEGA),
                    v: get(x, i, VEL),
                }
            })
            .collect();
        RodState {
            t,
            ds: self.ds,
            nodes,
        }
    }

    /// `G(x, t)` with externally supplied director frames.
    pub fn force_with_rotations(
        &mut self,
        x: &[f64],
        rot: &[Mat3],
        t: f64,
        out: &mut [f64],
    ) -> Result<()> {
        if x.len() != self.nodes * BLOCK || out.len() != x.len() || rot.len() != self.nodes {
            return Err(Error::ShapeMismatch(format!(
                "rod system with {} nodes",
                self.nodes
            )));
        }
        self.load_fields(x);
        let model = &self.model;
        let ds = self.ds;
        let last = self.nodes - 1;
        segment_stresses(
            model,
            ds,
            &self.segments,
            &self.w,
            &self.v,
            &mut self.m,
            &mut self.n,
        );
        let (start, finish) = end_values(model, self.loads, &rot[last], t);
        node_resultants(
            ds,
            &self.segments,
            &self.m,
            &self.n,
            start,
            finish,
            &mut self.torque,
            &mut self.force,
        );
        let inertia = model.material.rotary_inertia();
        let line = model.material.line_density();
        for i in 0..self.nodes {
            if model.is_clamped(i) {
                put(out, i, VEL, &Vec3::zeros());
                put(out, i, OMEGA, &Vec3::zeros());
            } else {
                let si = i as f64 * ds;
                let (wt, vt) = node_accelerations(
                    &model.material,
                    &rot[i],
                    &self.torque[i],
                    &self.force[i],
                    &self.w[i],
                    &self.v[i],
                    &self.loads.torque_density(si, t),
                    &self.loads.force_density(si, t),
                );
                put(out, i, VEL, &(-line * vt));
                put(out, i, OMEGA, &(-inertia.component_mul(&wt)));
            }
        }
        for (j, seg) in self.segments.iter().enumerate() {
            let (kt, nt) = segment_strain_rates(
                &seg.kappa,
                &seg.nu,
                &seg.half,
                ds,
                (&self.w[j], &self.w[j + 1]),
                (&self.v[j], &self.v[j + 1]),
            );
            put(out, j, KAPPA, &(-kt));
            put(out, j, N_STRESS, &(-nt));
        }
        put(out, last, KAPPA, &Vec3::zeros());
        put(out, last, N_STRESS, &Vec3::zeros());
        Ok(())
    }

    /// Splits `G(x, t)` into `K̂ x_s` and `Λ`.
    pub fn split(&mut self, x: &[f64], t: f64) -> Result<StateSpaceSplit> {
        let mut rot = vec![Mat3::identity(); self.nodes];
        self.rotations_into(x, &mut rot);
        self.split_with_rotations(x, &rot, t)
    }

    pub fn split_with_rotations(
        &mut self,
        x: &[f64],
        rot: &[Mat3],
        t: f64,
    ) -> Result<StateSpaceSplit> {
        let mut g = vec![0.0; x.len()];
        self.force_with_rotations(x, rot, t, &mut g)?;
        let stiff = self.model.material.bending_stiffness();
        let ds = self.ds;
        let last = self.nodes - 1;
        let mut k_xs = vec![0.0; x.len()];
        for i in 0..self.nodes {
            if !self.model.is_clamped(i) {
                let w = if i == 0 || i == last { 0.5 * ds } else { ds };
                let right = |f: usize| {
                    if i < last {
                        get(x, i, f)
                    } else {
                        Vec3::zeros()
                    }
                };
                let left = |f: usize| {
                    if i > 0 {
                        get(x, i - 1, f)
                    } else {
                        Vec3::zeros()
                    }
                };
                put(
                    &mut k_xs,
                    i,
                    VEL,
                    &(-(right(N_STRESS) - left(N_STRESS)) / w),
                );
                put(
                    &mut k_xs,
                    i,
                    OMEGA,
                    &(-stiff.component_mul(&(right(KAPPA) - left(KAPPA))) / w),
                );
            }
            if i < last {
                put(&mut k_xs, i, KAPPA, &(-(self.w[i + 1] - self.w[i]) / ds));
                put(&mut k_xs, i, N_STRESS, &(-(self.v[i + 1] - self.v[i]) / ds));
            }
        }
        let lambda = g.iter().zip(&k_xs).map(|(g, k)| g - k).collect();
        Ok(StateSpaceSplit { k_xs, lambda })
    }

    fn load_fields(&mut self, x: &[f64]) {
        let compliance = self.model.material.axial_stiffness().map(|s| 1.0 / s);
        for i in 0..self.nodes {
            self.v[i] = get(x, i, VEL);
            self.w[i] = get(x, i, OMEGA);
        }
        for (j, seg) in self.segments.iter_mut().enumerate() {
            let kappa = get(x, j, KAPPA);
            *seg = SegmentStrain {
                kappa,
                nu: self.model.rest_nu[j] + compliance.component_mul(&get(x, j, N_STRESS)),
                half: half_rotation(&kappa, self.ds),
            };
        }
    }
}

impl FirstOrderSystem for RodSystem<'_> {
    fn dim(&self) -> usize {
        self.nodes * BLOCK
    }

    fn mass(&self) -> &[f64] {
        &self.mass
    }

    fn force(&mut self, x: &[f64], t: f64, out: &mut [f64]) -> Result<()> {
        let mut rot = std::mem::take(&mut self.rot);
        self.rotations_into(x, &mut rot);
        let res = self.force_with_rotations(x, &rot, t, out);
        self.rot = rot;
        res
    }

    fn half_bandwidth(&self) -> Option<usize> {
        // nodes couple to the adjacent segments, segments to their two nodes
        Some(2 * BLOCK - 1)
    }

    fn begin_jacobian(&mut self, x: &[f64], _t: f64) -> Result<()> {
        let mut rot = std::mem::take(&mut self.frozen_rot);
        self.rotations_into(x, &mut rot);
        self.frozen_rot = rot;
        Ok(())
    }

    fn jacobian_force(&mut self, x: &[f64], t: f64, out: &mut [f64]) -> Result<()> {
        let rot = std::mem::take(&mut self.frozen_rot);
        let res = self.force_with_rotations(x, &rot, t, out);
        self.frozen_rot = rot;
        res
    }

    fn block_count(&self) -> usize {
        4
    }

    fn block_of(&self, index: usize) -> usize {
        (index % BLOCK) / 3
    }

    fn end_step(&mut self, x_prev: &[f64], x: &[f64], dt: f64) {
        if self.model.boundary.start == EndCondition::Clamped {
            return;
        }
        let w = 0.5 * (get(x_prev, 0, OMEGA) + get(x, 0, OMEGA));
        let v = 0.5 * (get(x_prev, 0, VEL) + get(x, 0, VEL));
        let half = self.base_rot * rotation_matrix(&(0.5 * dt * w));
        self.base_pos += dt * (half * v);
        self.base_rot *= rotation_matrix(&(dt * w));
    }
}

#[inline]
pub(crate) fn get(x: &[f64], node: usize, field: usize) -> Vec3 {
    let k = node * BLOCK + field;
    Vec3::new(x[k], x[k + 1], x[k + 2])
}

#[inline]
pub(crate) fn put(x: &mut [f64], node: usize, field: usize, value: &Vec3) {
    let k = node * BLOCK + field;
    x[k] = value.x;
    x[k + 1] = value.y;
    x[k + 2] = value.z;
}
