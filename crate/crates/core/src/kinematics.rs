//! Closed-form kinematics of the rod in terms of the potentials `p` and `q`.
//!
//! The director frame is `d_k = R(p) e_k` with `R(p) = exp([p]×)`. With that
//! convention the twist and the Darboux vector (both in director components)
//! are the images of `p_t` and `p_s` under the same linear map, and that map
//! is inverted exactly by [`solve_pt`].

use std::f64::consts::TAU;

use nalgebra::{Quaternion, Rotation3, UnitQuaternion};

use crate::dynamics::{segment_strains, RodState};
use crate::{Error, Mat3, Result, Vec3};

/// Below this magnitude the removable singularities at `p = 0` are evaluated
/// from their Taylor expansions (to order `p^6`).
pub const SERIES_THRESHOLD: f64 = 1e-2;

/// `(p - sin p) / p^3` loses about `6ε/p^2` relative accuracy to cancellation
/// when evaluated directly, so it is summed as a series up to here.
const F1_LONG_SERIES_LIMIT: f64 = 1.0;

/// Coefficients `f1 = (p - sin p)/p^3` and `f2 = (1 - cos p)/p^2` of the
/// kinematic map.
pub fn rotation_coefficients(p: f64) -> (f64, f64) {
    let p2 = p * p;
    if p < SERIES_THRESHOLD {
        let f1 = 1.0 / 6.0 - p2 / 120.0 + p2 * p2 / 5040.0 - p2 * p2 * p2 / 362_880.0;
        let f2 = 0.5 - p2 / 24.0 + p2 * p2 / 720.0 - p2 * p2 * p2 / 40_320.0;
        return (f1, f2);
    }
    let half = 0.5 * p;
    let s = half.sin() / half;
    let f2 = 0.5 * s * s;
    let f1 = if p < F1_LONG_SERIES_LIMIT {
        f1_series(p2)
    } else {
        (p - p.sin()) / (p2 * p)
    };
    (f1, f2)
}

// sum_k (-1)^k p^{2k} / (2k+3)!; 13 terms reach below 1e-20 for p < 1.
fn f1_series(p2: f64) -> f64 {
    let mut term = 1.0 / 6.0;
    let mut sum = term;
    for k in 0..12 {
        let a = (2 * k + 4) as f64;
        let b = (2 * k + 5) as f64;
        term *= -p2 / (a * b);
        sum += term;
    }
    sum
}

/// `sin(p)/p`, regular at 0.
pub fn sinc(p: f64) -> f64 {
    if p < SERIES_THRESHOLD {
        let p2 = p * p;
        1.0 - p2 / 6.0 + p2 * p2 / 120.0 - p2 * p2 * p2 / 5040.0
    } else {
        p.sin() / p
    }
}

/// `(p/2) cot(p/2)`, regular at 0; diverges to -inf as `p -> 2π`.
pub fn half_angle_cot(p: f64) -> f64 {
    if p < SERIES_THRESHOLD {
        let p2 = p * p;
        1.0 - p2 / 12.0 - p2 * p2 / 720.0 - p2 * p2 * p2 / 30_240.0
    } else {
        let h = 0.5 * p;
        h * h.cos() / h.sin()
    }
}

/// Shared form of the twist and curvature relations:
/// `dp + f1 (p (p·dp) - |p|^2 dp) - f2 p × dp`.
#[inline]
pub fn tangent_map(p: &Vec3, dp: &Vec3) -> Vec3 {
    let pm = p.norm();
    let (f1, f2) = rotation_coefficients(pm);
    dp + f1 * (p * p.dot(dp) - pm * pm * dp) - f2 * p.cross(dp)
}

/// Twist `ω` (director components) from `p` and its time derivative.
pub fn omega_from_p(p: &Vec3, p_t: &Vec3) -> Vec3 {
    tangent_map(p, p_t)
}

/// Darboux vector `κ` (director components) from `p` and its arc-length
/// derivative.
pub fn kappa_from_p(p: &Vec3, p_s: &Vec3) -> Vec3 {
    tangent_map(p, p_s)
}

/// Linear strain `ν = q × κ - q_s` and velocity `v = q × ω - q_t`.
pub fn strain_and_velocity(
    q: &Vec3,
    q_s: &Vec3,
    q_t: &Vec3,
    kappa: &Vec3,
    omega: &Vec3,
) -> (Vec3, Vec3) {
    (q.cross(kappa) - q_s, q.cross(omega) - q_t)
}

/// Inverts [`omega_from_p`]: the unique `p_t` with `omega_from_p(p, p_t) = ω`.
///
/// Fails at `p = 0` (no direction) and for `|p| ≥ 2π`, where the determinant
/// [`jacobian_det`] vanishes.
pub fn solve_pt(p: &Vec3, omega: &Vec3) -> Result<Vec3> {
    let pm = p.norm();
    if !(pm > 0.0 && pm < TAU) {
        return Err(Error::Singularity {
            magnitude: pm,
            node: None,
            time: None,
        });
    }
    Ok(solve_pt_unchecked(p, pm, omega))
}

#[inline]
pub(crate) fn solve_pt_unchecked(p: &Vec3, pm: f64, omega: &Vec3) -> Vec3 {
    let e = p / pm;
    let c = half_angle_cot(pm);
    let along = e.dot(omega);
    c * omega + (1.0 - c) * along * e + 0.5 * p.cross(omega)
}

/// [`solve_pt`] extended continuously to `p = 0`, where the map is the
/// identity. Callers guarantee `|p| < 2π`.
pub fn tangent_inverse(p: &Vec3, omega: &Vec3) -> Vec3 {
    let pm = p.norm();
    if pm < SERIES_THRESHOLD {
        let p2 = pm * pm;
        let g = 1.0 / 12.0 + p2 / 720.0 + p2 * p2 / 30_240.0;
        half_angle_cot(pm) * omega + g * p.dot(omega) * p + 0.5 * p.cross(omega)
    } else {
        solve_pt_unchecked(p, pm, omega)
    }
}

/// Principal rotation vector (`|φ| ≤ π`) of a rotation matrix, accurate for
/// small angles; loses digits only near `π`.
pub fn rotation_log(rot: &Mat3) -> Vec3 {
    let s = 0.5
        * Vec3::new(
            rot[(2, 1)] - rot[(1, 2)],
            rot[(0, 2)] - rot[(2, 0)],
            rot[(1, 0)] - rot[(0, 1)],
        );
    let sn = s.norm();
    let angle = sn.atan2(0.5 * (rot.trace() - 1.0));
    if angle < 1e-6 {
        return s * (1.0 + angle * angle / 6.0);
    }
    if angle > std::f64::consts::PI - 1e-6 {
        // skew part vanishes; read the axis off the symmetric part
        let b = 0.5 * (rot + Mat3::identity());
        let col = (0..3)
            .max_by(|&a, &c| b[(a, a)].total_cmp(&b[(c, c)]))
            .unwrap_or(0);
        let axis: Vec3 = b.column(col).into();
        let axis = axis.normalize();
        let sign = if axis.dot(&s) < 0.0 { -1.0 } else { 1.0 };
        return axis * (sign * angle);
    }
    s * (angle / sn)
}

/// Determinant `2 (cos p - 1) / p^2` of the linear system defining `p_t`.
pub fn jacobian_det(p: f64) -> f64 {
    let (_, f2) = rotation_coefficients(p);
    -2.0 * f2
}

/// Rotation matrix `exp([p]×) = I + sinc(p) [p]× + f2 [p]×²`.
pub fn rotation_matrix(p: &Vec3) -> Mat3 {
    let pm = p.norm();
    let (_, f2) = rotation_coefficients(pm);
    let k = p.cross_matrix();
    Mat3::identity() + sinc(pm) * k + f2 * (k * k)
}

/// Rotation vector of `rot` whose quaternion lies in the same hemisphere as
/// the one of `near`; the result can have magnitude up to (not including) 2π,
/// which keeps fields of rotation vectors continuous along the rod.
pub fn rotation_vector_near(rot: &Mat3, near: &Vec3) -> Vec3 {
    let uq = UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(*rot));
    let mut q: Quaternion<f64> = *uq.quaternion();
    let reference = quaternion_of(near);
    if q.dot(&reference) < 0.0 {
        q = -q;
    }
    rotation_vector_of(&q)
}

fn quaternion_of(p: &Vec3) -> Quaternion<f64> {
    let pm = p.norm();
    let half = 0.5 * pm;
    let s = 0.5 * sinc(half);
    Quaternion::new(half.cos(), s * p.x, s * p.y, s * p.z)
}

fn rotation_vector_of(q: &Quaternion<f64>) -> Vec3 {
    let v = q.imag();
    let vn = v.norm();
    if vn == 0.0 {
        return if q.w >= 0.0 {
            Vec3::zeros()
        } else {
            // -1: the 2π sphere; report a point on it so callers can flag it
            Vec3::new(0.0, 0.0, TAU)
        };
    }
    let angle = 2.0 * vn.atan2(q.w);
    v * (angle / vn)
}

/// Right-handed orthonormal triple of directors expressed in the fixed frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectorFrame {
    pub d1: Vec3,
    pub d2: Vec3,
    pub d3: Vec3,
}

impl DirectorFrame {
    pub fn fixed() -> Self {
        Self {
            d1: Vec3::x(),
            d2: Vec3::y(),
            d3: Vec3::z(),
        }
    }

    pub fn from_matrix(m: &Mat3) -> Self {
        Self {
            d1: m.column(0).into(),
            d2: m.column(1).into(),
            d3: m.column(2).into(),
        }
    }

    /// Columns `[d1 d2 d3]`.
    pub fn matrix(&self) -> Mat3 {
        Mat3::from_columns(&[self.d1, self.d2, self.d3])
    }

    /// Largest deviation from orthonormality and right-handedness.
    pub fn orthonormality_residual(&self) -> f64 {
        let m = self.matrix();
        let gram = m.transpose() * m - Mat3::identity();
        let hand = (self.d1.cross(&self.d2) - self.d3).amax();
        gram.amax().max(hand)
    }
}

/// Applies the rotation `exp([p]×)` to each vector of `reference`.
pub fn directors_from_p(p: &Vec3, reference: &DirectorFrame) -> DirectorFrame {
    let r = rotation_matrix(p);
    DirectorFrame {
        d1: r * reference.d1,
        d2: r * reference.d2,
        d3: r * reference.d3,
    }
}

/// Centerline positions obtained by integrating `∂s r = R ν` segment by
/// segment in the midpoint frame, starting from `r_origin` at the first node.
///
/// With `r_origin = -R(p_0) q_0` this reproduces `r = -R(p) q` at every node.
pub fn reconstruct_centerline(state: &RodState, r_origin: Vec3) -> Result<Vec<Vec3>> {
    let n = state.nodes.len();
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return Ok(out);
    }
    out.push(r_origin);
    if n == 1 {
        return Ok(out);
    }
    let segments = segment_strains(state)?;
    for (j, seg) in segments.iter().enumerate() {
        let mid = rotation_matrix(&state.nodes[j].p) * seg.half;
        let prev = out[j];
        out.push(prev + state.ds * (mid * seg.nu));
    }
    Ok(out)
}

/// Whether `|p|` lies strictly inside the chart `(0, 2π)`.
#[inline]
pub fn in_chart(p: &Vec3) -> bool {
    let m = p.norm();
    m > 0.0 && m < TAU && m.is_finite()
}
