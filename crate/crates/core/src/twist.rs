//! Frozen-twist propagation of the rotation vector.
//!
//! With `ω` held constant over a step, write `p = |p| e` and expand the unit
//! vector `e = A1 b1 + A2 b2 + A3 b3` in an orthonormal basis with `b3 ∥ ω`.
//! The reduced system
//!
//! ```text
//! 2 A1' =  A2 w - cot(p/2) A1 A3 w
//! 2 A2' = -A1 w - cot(p/2) A2 A3 w
//! 2 A3' = -cot(p/2) (A3^2 - 1) w
//!   p'  =  A3 w
//! ```
//!
//! conserves `C = w^2 (1 - A3^2) sin^2(p/2)` and has the closed-form solution
//! evaluated by [`closed_form_state`]. For `C > 0` the magnitude `|p|` never
//! reaches 0 or 2π, so [`exp_step`] needs no step-size control.
//!
//! The closed form is evaluated through `sin(p/2) = sqrt(cos²φ + c sin²φ)` and
//! a two-argument arctangent for `p`, which stays accurate when `|p|` or `C`
//! are tiny (where `2 arccos(·)` would lose all digits).

use std::f64::consts::TAU;

use crate::{Error, Result, Vec3};

/// Below this value of `1 - A3^2` the initial direction counts as aligned with
/// the twist and the linear (degenerate) solution is used.
pub const DEGENERACY_EPS: f64 = 1e-14;

const ZERO_TWIST: f64 = 1e-300;

/// Orthonormal basis with `b3` along the twist.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OmegaFrame {
    pub b1: Vec3,
    pub b2: Vec3,
    pub b3: Vec3,
    /// Twist magnitude `w = |ω|`.
    pub w: f64,
}

impl OmegaFrame {
    pub fn compose(&self, a1: f64, a2: f64, a3: f64) -> Vec3 {
        a1 * self.b1 + a2 * self.b2 + a3 * self.b3
    }
}

/// Integration constants of the closed-form solution for one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameSolution {
    /// Conserved quantity `w^2 (1 - A3^2) sin^2(p/2)`.
    pub c: f64,
    /// Phase constant of `A3` and `p` (time units).
    pub c1: f64,
    /// Phase constant of `A1`, `A2` (time units).
    pub c2: f64,
    /// `1 - C / w^2 = cos^2(p/2) + A3^2 sin^2(p/2)`, kept separately because
    /// forming it from `C` cancels all digits near `|p| = π`.
    pub rest: f64,
    pub w: f64,
    pub basis: OmegaFrame,
    pub degenerate: bool,
}

impl FrameSolution {
    /// `C / w^2`, the dimensionless form used by the closed form.
    pub fn scaled_c(&self) -> f64 {
        (self.c / (self.w * self.w)).clamp(0.0, 1.0)
    }
}

/// Builds the twist-aligned basis. `b1` is the fixed axis least aligned with
/// `b3`, orthogonalized; `b2 = b3 × b1`.
pub fn omega_frame(omega: &Vec3) -> Result<OmegaFrame> {
    let w = omega.norm();
    if !(w > ZERO_TWIST) || !w.is_finite() {
        return Err(Error::ZeroTwist);
    }
    let b3 = omega / w;
    let (ax, ay, az) = (b3.x.abs(), b3.y.abs(), b3.z.abs());
    let axis = if ax <= ay && ax <= az {
        Vec3::x()
    } else if ay <= az {
        Vec3::y()
    } else {
        Vec3::z()
    };
    let b1 = (axis - axis.dot(&b3) * b3).normalize();
    let b2 = b3.cross(&b1);
    Ok(OmegaFrame { b1, b2, b3, w })
}

/// Splits `p` into its magnitude and the direction cosines `(A1, A2, A3)` of
/// `p/|p|` in `frame`.
pub fn decompose(p: &Vec3, frame: &OmegaFrame) -> Result<(f64, f64, f64, f64)> {
    let pm = p.norm();
    if !(pm > 0.0) {
        return Err(Error::ZeroVector);
    }
    let e = p / pm;
    Ok((pm, e.dot(&frame.b1), e.dot(&frame.b2), e.dot(&frame.b3)))
}

/// `w^2 (1 - A3^2) sin^2(p/2)`.
pub fn conserved_quantity(p_mag: f64, a3: f64, w: f64) -> f64 {
    let s = (0.5 * p_mag).sin();
    w * w * (1.0 - a3 * a3).max(0.0) * s * s
}

/// Integration constants reproducing `(A1, A2, A3, p)` at time `t0`.
///
/// The phases are fixed by requiring the closed form to return the initial
/// data exactly:
/// `sqrt(1-c) sin φ0 = cos(p0/2)`, `sqrt(1-c) cos φ0 = A3 sin(p0/2)` with
/// `φ0 = w (C1 - t0)/2`, and `(A1, A2) ∝ (-sin χ0, cos χ0)` with
/// `χ0 = w (C2 - t0)/2`.
pub fn frame_constants(
    p_mag0: f64,
    a1: f64,
    a2: f64,
    a3: f64,
    frame: &OmegaFrame,
    t0: f64,
) -> Result<FrameSolution> {
    let norm_err = a1 * a1 + a2 * a2 + a3 * a3 - 1.0;
    if norm_err.abs() > 1e-8 {
        return Err(Error::InvalidNormalization(norm_err));
    }
    let w = frame.w;
    if !(w > ZERO_TWIST) {
        return Err(Error::ZeroTwist);
    }
    if !(p_mag0 > 0.0 && p_mag0 < TAU) {
        return Err(Error::Singularity {
            magnitude: p_mag0,
            node: None,
            time: Some(t0),
        });
    }
    let off_axis = (1.0 - a3 * a3).max(0.0);
    let half = 0.5 * p_mag0;
    let (sh, ch) = half.sin_cos();
    let c = w * w * off_axis * sh * sh;
    let phi0 = ch.atan2(a3 * sh);
    let chi0 = (-a1).atan2(a2);
    Ok(FrameSolution {
        c,
        c1: t0 + 2.0 * phi0 / w,
        c2: t0 + 2.0 * chi0 / w,
        rest: ch * ch + a3 * a3 * sh * sh,
        w,
        basis: *frame,
        degenerate: off_axis < DEGENERACY_EPS,
    })
}

/// Evaluates `(A1, A2, A3, p)` at time `t`.
pub fn closed_form_state(sol: &FrameSolution, t: f64) -> Result<(f64, f64, f64, f64)> {
    if sol.degenerate {
        return Err(Error::Degenerate);
    }
    let (pm, sin_half, u1, u2, u3) = closed_form_parts(sol, t);
    Ok((u1 / sin_half, u2 / sin_half, u3 / sin_half, pm))
}

/// Returns `p`, `sin(p/2)` and the un-normalized direction components
/// `sin(p/2) A_k`, which remain finite as `p -> 0`.
fn closed_form_parts(sol: &FrameSolution, t: f64) -> (f64, f64, f64, f64, f64) {
    let c = sol.scaled_c();
    let (sphi, cphi) = (0.5 * sol.w * (sol.c1 - t)).sin_cos();
    let (schi, cchi) = (0.5 * sol.w * (sol.c2 - t)).sin_cos();
    let sqrt_c = c.sqrt();
    let sqrt_rest = sol.rest.clamp(0.0, 1.0).sqrt();
    let sin_half = (cphi * cphi + c * sphi * sphi).sqrt();
    let pm = 2.0 * sin_half.atan2(sqrt_rest * sphi);
    (
        pm,
        sin_half,
        -sqrt_c * schi,
        sqrt_c * cchi,
        sqrt_rest * cphi,
    )
}

/// Advances `p` by `dt` under the constant twist `omega`.
///
/// A zero twist or zero step leaves `p` unchanged. When `p` is aligned with
/// `omega` the magnitude advances linearly along the held direction and is
/// reflected (with direction reversal) at 0 and 2π, which represents the same
/// rotation inside the chart.
pub fn exp_step(p: &Vec3, omega: &Vec3, dt: f64) -> Result<Vec3> {
    if dt == 0.0 {
        return Ok(*p);
    }
    let frame = match omega_frame(omega) {
        Ok(f) => f,
        Err(Error::ZeroTwist) => return Ok(*p),
        Err(e) => return Err(e),
    };
    let (pm, a1, a2, a3) = decompose(p, &frame).map_err(|_| singular(0.0))?;
    if pm >= TAU {
        return Err(singular(pm));
    }
    let sol = frame_constants(pm, a1, a2, a3, &frame, 0.0)?;
    let out = if sol.degenerate {
        let e = p / pm;
        let sign = if a3 >= 0.0 { 1.0 } else { -1.0 };
        let (mag, flip) = reflect_into_chart(pm + sign * frame.w * dt);
        e * (mag * flip)
    } else {
        let (new_pm, sin_half, u1, u2, u3) = closed_form_parts(&sol, dt);
        frame.compose(u1, u2, u3) * (new_pm / sin_half)
    };
    let m = out.norm();
    if !(m > 0.0 && m < TAU) {
        return Err(singular(m));
    }
    Ok(out)
}

fn singular(m: f64) -> Error {
    Error::Singularity {
        magnitude: m,
        node: None,
        time: None,
    }
}

/// Maps a signed magnitude onto `[0, 2π]` by reflection; returns the
/// magnitude and the accumulated direction sign.
fn reflect_into_chart(mut x: f64) -> (f64, f64) {
    let mut sign = 1.0;
    loop {
        if x < 0.0 {
            x = -x;
            sign = -sign;
        } else if x > TAU {
            x = 2.0 * TAU - x;
            sign = -sign;
        } else {
            return (x, sign);
        }
    }
}
