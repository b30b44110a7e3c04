use super::loads::Loads;
use super::material::{EndCondition, RodMaterial, RodModel};
use super::state::RodState;
use nalgebra::{Quaternion, UnitQuaternion};

use crate::kinematics::{omega_from_p, rotation_matrix, tangent_inverse};
use crate::{Error, Mat3, Result, Vec3};

/// Linear constitutive law about the straight, unstretched rest state:
/// `m̂ = K κ`, `n̂ = S (ν - e3)`.
pub fn constitutive(kappa: &Vec3, nu: &Vec3, mat: &RodMaterial) -> (Vec3, Vec3) {
    constitutive_about(kappa, nu, &Vec3::zeros(), &Vec3::z(), mat)
}

/// Linear constitutive law about arbitrary rest strains `(κ⁰, ν⁰)`.
#[inline]
pub fn constitutive_about(
    kappa: &Vec3,
    nu: &Vec3,
    kappa0: &Vec3,
    nu0: &Vec3,
    mat: &RodMaterial,
) -> (Vec3, Vec3) {
    (
        mat.bending_stiffness().component_mul(&(kappa - kappa0)),
        mat.axial_stiffness().component_mul(&(nu - nu0)),
    )
}

/// `q_t = q × ω - v`.
#[inline]
pub fn q_rhs(q: &Vec3, omega: &Vec3, v: &Vec3) -> Vec3 {
    q.cross(omega) - v
}

/// Arc-length derivative on a uniform grid: central differences inside,
/// second-order one-sided differences at both ends.
pub fn spatial_derivative(field: &[Vec3], ds: f64) -> Result<Vec<Vec3>> {
    let mut out = vec![Vec3::zeros(); field.len()];
    spatial_derivative_into(field, ds, &mut out)?;
    Ok(out)
}

pub fn spatial_derivative_into(field: &[Vec3], ds: f64, out: &mut [Vec3]) -> Result<()> {
    let n = field.len();
    if n < 3 {
        return Err(Error::GridTooSmall(n, 3));
    }
    if out.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "derivative buffer {} vs field {n}",
            out.len()
        )));
    }
    let h = 0.5 / ds;
    out[0] = (-3.0 * field[0] + 4.0 * field[1] - field[2]) * h;
    for i in 1..n - 1 {
        out[i] = (field[i + 1] - field[i - 1]) * h;
    }
    out[n - 1] = (3.0 * field[n - 1] - 4.0 * field[n - 2] + field[n - 3]) * h;
    Ok(())
}

/// Strain of the segment between nodes `j` and `j + 1`, in the director
/// frame at the segment midpoint.
///
/// The curvature is the principal logarithm of the relative rotation,
/// `κ = log(R_jᵀ R_{j+1}) / ds`, and the midpoint frame is
/// `R_j H` with `H = exp(ds κ / 2)`; with `r = -R q` the strain reduces to
/// `ν = (Hᵀ q_j - H q_{j+1}) / ds`. Both only depend on relative rotations,
/// so a rigid rotation of the whole rod leaves them unchanged.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentStrain {
    pub kappa: Vec3,
    pub nu: Vec3,
    /// `H = exp(ds κ / 2)`, maps midpoint components to node-`j` components.
    pub half: Mat3,
}

impl Default for SegmentStrain {
    fn default() -> Self {
        Self {
            kappa: Vec3::zeros(),
            nu: Vec3::z(),
            half: Mat3::identity(),
        }
    }
}

/// Strain of the segment between nodes with rotation vectors `p0`, `p1` and
/// position potentials `q0`, `q1`.
pub fn segment_strain(p0: &Vec3, q0: &Vec3, p1: &Vec3, q1: &Vec3, ds: f64) -> SegmentStrain {
    segment_from_quaternions(&node_quaternion(p0), q0, &node_quaternion(p1), q1, ds)
}

#[inline]
fn node_quaternion(p: &Vec3) -> Quaternion<f64> {
    *UnitQuaternion::from_scaled_axis(*p).quaternion()
}

/// On unit quaternions the relative rotation is `a* b`, its principal
/// logarithm needs one `atan2`, and `H` is the normalized `1 + a* b`.
#[inline]
fn segment_from_quaternions(
    a: &Quaternion<f64>,
    q0: &Vec3,
    b: &Quaternion<f64>,
    q1: &Vec3,
    ds: f64,
) -> SegmentStrain {
    let mut rel = a.conjugate() * b;
    if rel.w < 0.0 {
        rel = -rel;
    }
    let im = rel.imag();
    let sn = im.norm();
    let scale = if sn < 1e-8 {
        2.0 / rel.w
    } else {
        2.0 * sn.atan2(rel.w) / sn
    };
    let h = UnitQuaternion::new_normalize(Quaternion::from_parts(1.0 + rel.w, im));
    let half: Mat3 = h.to_rotation_matrix().into_inner();
    SegmentStrain {
        kappa: im * (scale / ds),
        nu: (half.transpose() * q0 - half * q1) / ds,
        half,
    }
}

/// `H` for a segment given its curvature.
#[inline]
pub fn half_rotation(kappa: &Vec3, ds: f64) -> Mat3 {
    rotation_matrix(&(0.5 * ds * kappa))
}

/// Exact time derivatives `(κ_t, ν_t)` of a segment's strain given the
/// twists and velocities of its two nodes.
pub fn segment_strain_rates(
    kappa: &Vec3,
    nu: &Vec3,
    half: &Mat3,
    ds: f64,
    (w0, w1): (&Vec3, &Vec3),
    (v0, v1): (&Vec3, &Vec3),
) -> (Vec3, Vec3) {
    let phi = ds * kappa;
    let rel = half * half;
    let phi_t = tangent_inverse(&phi, &(w1 - rel.transpose() * w0));
    let w_mid = half.transpose() * w0 + omega_from_p(&(0.5 * phi), &(0.5 * phi_t));
    (
        phi_t / ds,
        (half * v1 - half.transpose() * v0) / ds - w_mid.cross(nu),
    )
}

/// Net internal force and couple per unit length at every node from the
/// segment stresses `(m̂, n̂)`.
///
/// Interior nodes take the central difference of the two adjacent segment
/// stresses (rotated into the node frame); end nodes own half a segment and
/// use the end value `end_start` / `end_finish` (node-frame `(m̂, n̂)` applied
/// at the end, zero for a free end without loads) in place of the missing
/// neighbour.
pub fn node_resultants(
    ds: f64,
    segments: &[SegmentStrain],
    m: &[Vec3],
    n: &[Vec3],
    end_start: (Vec3, Vec3),
    end_finish: (Vec3, Vec3),
    torque: &mut [Vec3],
    force: &mut [Vec3],
) {
    let last = segments.len();
    for j in 0..=last {
        let (mr, nr, cr) = if j < last {
            let h = &segments[j].half;
            (h * m[j], h * n[j], h * segments[j].nu.cross(&n[j]))
        } else {
            (end_finish.0, end_finish.1, Vec3::zeros())
        };
        let (ml, nl, cl) = if j > 0 {
            let h = segments[j - 1].half.transpose();
            (
                h * m[j - 1],
                h * n[j - 1],
                h * segments[j - 1].nu.cross(&n[j - 1]),
            )
        } else {
            (-end_start.0, -end_start.1, Vec3::zeros())
        };
        let w = if j == 0 || j == last { 0.5 * ds } else { ds };
        torque[j] = (mr - ml + 0.5 * ds * (cr + cl)) / w;
        force[j] = (nr - nl) / w;
    }
}

/// Segment stresses `(m̂, n̂)` including stiffness-proportional damping.
#[allow(clippy::too_many_arguments)]
pub(crate) fn segment_stresses(
    model: &RodModel,
    ds: f64,
    segments: &[SegmentStrain],
    omega: &[Vec3],
    v: &[Vec3],
    m: &mut [Vec3],
    n: &mut [Vec3],
) {
    let mat = &model.material;
    let beta = mat.rayleigh_beta;
    let k = mat.bending_stiffness();
    let s = mat.axial_stiffness();
    for (j, seg) in segments.iter().enumerate() {
        let (mj, nj) = constitutive_about(
            &seg.kappa,
            &seg.nu,
            &model.rest_kappa[j],
            &model.rest_nu[j],
            mat,
        );
        m[j] = mj;
        n[j] = nj;
        if beta > 0.0 {
            let (kt, nt) = segment_strain_rates(
                &seg.kappa,
                &seg.nu,
                &seg.half,
                ds,
                (&omega[j], &omega[j + 1]),
                (&v[j], &v[j + 1]),
            );
            m[j] += beta * k.component_mul(&kt);
            n[j] += beta * s.component_mul(&nt);
        }
    }
}

/// End values for [`node_resultants`]: zero at a free start, the tip loads
/// (rotated into the last node's frame) at a free end.
pub(crate) fn end_values(
    model: &RodModel,
    loads: &dyn Loads,
    last_rot: &Mat3,
    t: f64,
) -> ((Vec3, Vec3), (Vec3, Vec3)) {
    let zero = (Vec3::zeros(), Vec3::zeros());
    let finish = match model.boundary.end {
        EndCondition::Free => {
            let rt = last_rot.transpose();
            (rt * loads.tip_torque(t), rt * loads.tip_force(t))
        }
        EndCondition::Clamped => zero,
    };
    (zero, finish)
}

/// `(ω_t, v_t)` at one node from the net internal resultants.
#[inline]
#[allow(clippy::too_many_arguments)]
pub(crate) fn node_accelerations(
    mat: &RodMaterial,
    rot: &Mat3,
    torque: &Vec3,
    force: &Vec3,
    omega: &Vec3,
    v: &Vec3,
    torque_density: &Vec3,
    force_density: &Vec3,
) -> (Vec3, Vec3) {
    let inertia = mat.rotary_inertia();
    let line = mat.line_density();
    let alpha = mat.rayleigh_alpha;
    let rt = rot.transpose();
    let jw = inertia.component_mul(omega);
    let t = torque - omega.cross(&jw) + rt * torque_density;
    let f = force - line * omega.cross(v) + rt * force_density;
    (
        t.component_div(&inertia) - alpha * omega,
        f / line - alpha * v,
    )
}

/// Reusable buffers for evaluating `(ω_t, v_t)`.
///
/// [`configure`](Self::configure) caches everything that depends only on
/// `(p, q)` (rotations and segment strains); [`rates`](Self::rates) can then
/// be called repeatedly for different `(ω, v, t)`.
#[derive(Debug, Clone)]
pub struct RhsEvaluator {
    ds: f64,
    quat: Vec<Quaternion<f64>>,
    rot: Vec<Mat3>,
    segments: Vec<SegmentStrain>,
    m: Vec<Vec3>,
    n: Vec<Vec3>,
    torque: Vec<Vec3>,
    force: Vec<Vec3>,
}

impl RhsEvaluator {
    pub fn new(nodes: usize, ds: f64) -> Result<Self> {
        if nodes < 3 {
            return Err(Error::GridTooSmall(nodes, 3));
        }
        let segs = nodes - 1;
        Ok(Self {
            ds,
            quat: vec![Quaternion::identity(); nodes],
            rot: vec![Mat3::identity(); nodes],
            segments: vec![SegmentStrain::default(); segs],
            m: vec![Vec3::zeros(); segs],
            n: vec![Vec3::zeros(); segs],
            torque: vec![Vec3::zeros(); nodes],
            force: vec![Vec3::zeros(); nodes],
        })
    }

    pub fn len(&self) -> usize {
        self.rot.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rot.is_empty()
    }

    pub fn configure(&mut self, p: &[Vec3], q: &[Vec3]) -> Result<()> {
        if p.len() != self.rot.len() || q.len() != self.rot.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} nodes configured with {} / {}",
                self.rot.len(),
                p.len(),
                q.len()
            )));
        }
        for (i, p) in p.iter().enumerate() {
            let uq = UnitQuaternion::from_scaled_axis(*p);
            self.quat[i] = *uq.quaternion();
            self.rot[i] = uq.to_rotation_matrix().into_inner();
        }
        for j in 0..self.segments.len() {
            self.segments[j] = segment_from_quaternions(
                &self.quat[j],
                &q[j],
                &self.quat[j + 1],
                &q[j + 1],
                self.ds,
            );
        }
        Ok(())
    }

    /// Strains per segment (one fewer than nodes).
    pub fn segments(&self) -> &[SegmentStrain] {
        &self.segments
    }

    pub fn rotations(&self) -> &[Mat3] {
        &self.rot
    }

    /// Writes `ω_t` and `v_t` for the configured `(p, q)` and the given
    /// `(ω, v)` at time `t`.
    #[allow(clippy::too_many_arguments)]
    pub fn rates(
        &mut self,
        model: &RodModel,
        loads: &dyn Loads,
        omega: &[Vec3],
        v: &[Vec3],
        t: f64,
        omega_t: &mut [Vec3],
        v_t: &mut [Vec3],
    ) -> Result<()> {
        let nn = self.rot.len();
        if model.nodes() != nn || omega.len() != nn || v.len() != nn {
            return Err(Error::ShapeMismatch(format!("evaluator for {nn} nodes")));
        }
        segment_stresses(
            model,
            self.ds,
            &self.segments,
            omega,
            v,
            &mut self.m,
            &mut self.n,
        );
        let (start, finish) = end_values(model, loads, &self.rot[nn - 1], t);
        node_resultants(
            self.ds,
            &self.segments,
            &self.m,
            &self.n,
            start,
            finish,
            &mut self.torque,
            &mut self.force,
        );
        for i in 0..nn {
            if model.is_clamped(i) {
                omega_t[i] = Vec3::zeros();
                v_t[i] = Vec3::zeros();
                continue;
            }
            let si = i as f64 * self.ds;
            let (wt, vt) = node_accelerations(
                &model.material,
                &self.rot[i],
                &self.torque[i],
                &self.force[i],
                &omega[i],
                &v[i],
                &loads.torque_density(si, t),
                &loads.force_density(si, t),
            );
            omega_t[i] = wt;
            v_t[i] = vt;
        }
        Ok(())
    }
}

/// `(ω_t, v_t)` per node for a full state.
pub fn dynamic_rhs(
    state: &RodState,
    model: &RodModel,
    loads: &dyn Loads,
) -> Result<Vec<(Vec3, Vec3)>> {
    let n = state.nodes.len();
    if model.nodes() != n {
        return Err(Error::ShapeMismatch(format!(
            "model has {} nodes, state {n}",
            model.nodes()
        )));
    }
    let mut eval = RhsEvaluator::new(n, state.ds)?;
    let p: Vec<Vec3> = state.nodes.iter().map(|x| x.p).collect();
    let q: Vec<Vec3> = state.nodes.iter().map(|x| x.q).collect();
    let omega: Vec<Vec3> = state.nodes.iter().map(|x| x.omega).collect();
    let v: Vec<Vec3> = state.nodes.iter().map(|x| x.v).collect();
    eval.configure(&p, &q)?;
    let mut wt = vec![Vec3::zeros(); n];
    let mut vt = vec![Vec3::zeros(); n];
    eval.rates(model, loads, &omega, &v, state.t, &mut wt, &mut vt)?;
    Ok(wt.into_iter().zip(vt).collect())
}

/// Strains of every segment of `state`.
pub fn segment_strains(state: &RodState) -> Result<Vec<SegmentStrain>> {
    let n = state.nodes.len();
    if n < 2 {
        return Err(Error::GridTooSmall(n, 2));
    }
    let quat: Vec<Quaternion<f64>> = state.nodes.iter().map(|x| node_quaternion(&x.p)).collect();
    Ok((0..n - 1)
        .map(|j| {
            segment_from_quaternions(
                &quat[j],
                &state.nodes[j].q,
                &quat[j + 1],
                &state.nodes[j + 1].q,
                state.ds,
            )
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Energy {
    pub kinetic: f64,
    pub elastic: f64,
}

impl Energy {
    pub fn total(&self) -> f64 {
        self.kinetic + self.elastic
    }
}

/// Kinetic energy with the lumped node masses (half cells at the ends) and
/// elastic energy summed over segments.
pub fn energy(state: &RodState, model: &RodModel) -> Result<Energy> {
    let n = state.nodes.len();
    if model.nodes() != n {
        return Err(Error::ShapeMismatch(format!(
            "model has {} nodes, state {n}",
            model.nodes()
        )));
    }
    let segments = segment_strains(state)?;
    let mat = &model.material;
    let inertia = mat.rotary_inertia();
    let line = mat.line_density();
    let mut e = Energy::default();
    for (i, node) in state.nodes.iter().enumerate() {
        let w = if i == 0 || i + 1 == n { 0.5 } else { 1.0 } * state.ds;
        e.kinetic += 0.5
            * w
            * (line * node.v.norm_squared() + node.omega.dot(&inertia.component_mul(&node.omega)));
    }
    for (j, seg) in segments.iter().enumerate() {
        let (m, nf) = constitutive_about(
            &seg.kappa,
            &seg.nu,
            &model.rest_kappa[j],
            &model.rest_nu[j],
            mat,
        );
        e.elastic += 0.5
            * state.ds
            * ((seg.kappa - model.rest_kappa[j]).dot(&m) + (seg.nu - model.rest_nu[j]).dot(&nf));
    }
    Ok(e)
}
