use nalgebra::{Complex, Matrix2};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Integration coefficients. `beta` belongs to the second-order form and has
/// no role in the first-order update; it is carried for completeness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaParams {
    pub alpha_m: f64,
    pub alpha_f: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl AlphaParams {
    /// Second-order accurate family parameterized by the high-frequency
    /// spectral radius `ρ∞ ∈ [0, 1]`.
    pub fn from_rho_inf(rho_inf: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&rho_inf) {
            return Err(Error::Config(format!(
                "rho_inf must lie in [0, 1], got {rho_inf}"
            )));
        }
        let alpha_f = rho_inf / (1.0 + rho_inf);
        let alpha_m = (3.0 * rho_inf - 1.0) / (2.0 * (1.0 + rho_inf));
        let gamma = 0.5 + alpha_f - alpha_m;
        let beta = 0.25 * (1.0 + alpha_f - alpha_m).powi(2);
        Ok(Self {
            alpha_m,
            alpha_f,
            beta,
            gamma,
        })
    }

    /// Strongly dissipative first-order setting used for stiff, highly
    /// damped problems.
    pub fn dissipative() -> Self {
        Self {
            alpha_m: 0.4,
            alpha_f: 0.4,
            beta: 0.0,
            gamma: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.alpha_m, self.alpha_f, self.beta, self.gamma]
            .iter()
            .all(|x| x.is_finite());
        if !finite || self.alpha_m >= 1.0 || self.alpha_f >= 1.0 || self.gamma <= 0.0 {
            return Err(Error::Config(format!("unusable alpha parameters {self:?}")));
        }
        Ok(())
    }

    /// Departures from the usual stability/accuracy conditions. An empty
    /// list means `α_m ≤ α_f ≤ 1/2` and `γ ≥ 1/2 + α_f - α_m`.
    pub fn diagnostics(&self) -> Vec<String> {
        let mut notes = Vec::new();
        if self.alpha_m > self.alpha_f {
            notes.push(format!(
                "alpha_m = {} exceeds alpha_f = {}",
                self.alpha_m, self.alpha_f
            ));
        }
        if self.alpha_f > 0.5 {
            notes.push(format!("alpha_f = {} exceeds 1/2", self.alpha_f));
        }
        let gamma_min = 0.5 + self.alpha_f - self.alpha_m;
        if self.gamma < gamma_min - 1e-15 {
            notes.push(format!("gamma = {} below {gamma_min}", self.gamma));
        }
        notes
    }
}

impl Default for AlphaParams {
    fn default() -> Self {
        Self::from_rho_inf(0.5).expect("valid spectral radius")
    }
}

/// One-step map `(x, Δt ẋ)_{i-1} -> (x, Δt ẋ)_i` for the scalar test
/// equation `ẋ = λ x` with `z = λ Δt`.
pub fn amplification_matrix(params: &AlphaParams, z: Complex<f64>) -> Matrix2<Complex<f64>> {
    let one = Complex::new(1.0, 0.0);
    let AlphaParams {
        alpha_m,
        alpha_f,
        gamma,
        ..
    } = *params;
    let d = (1.0 - alpha_m) * one - z * (1.0 - alpha_f) * gamma;
    let b_from_x = z / d;
    let b_from_b = (z * (1.0 - alpha_f) * (1.0 - gamma) - alpha_m * one) / d;
    let x_from_x = one + gamma * b_from_x;
    let x_from_b = (1.0 - gamma) * one + gamma * b_from_b;
    Matrix2::new(x_from_x, x_from_b, b_from_x, b_from_b)
}

/// Largest eigenvalue magnitude of [`amplification_matrix`].
pub fn spectral_radius(params: &AlphaParams, z: Complex<f64>) -> f64 {
    let m = amplification_matrix(params, z);
    // half-difference form avoids cancelling tr²/4 against det near a
    // double root
    let mean = (m[(0, 0)] + m[(1, 1)]) * 0.5;
    let half_diff = (m[(0, 0)] - m[(1, 1)]) * 0.5;
    let disc = (half_diff * half_diff + m[(0, 1)] * m[(1, 0)]).sqrt();
    let a = mean + disc;
    let b = mean - disc;
    a.norm().max(b.norm())
}
