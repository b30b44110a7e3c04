//! Generalized-α baseline on the first-order state-space form
//! `M̂ ẋ + K̂ x_s + Λ = 0` with per-node state `x = (v, ω, κ, n)`.
//!
//! The α-weights act directly on the first-order system: `α_m` blends the
//! rates, `α_f` blends the state inside the force term, and the state update
//! is the γ-trapezoidal rule `x_i = x_{i-1} + Δt ((1-γ) ẋ_{i-1} + γ ẋ_i)`.

mod banded;
mod integrator;
mod newton;
mod params;
mod system;

pub use banded::BandedLu;
pub use integrator::{alpha_step, AlphaIntegrator, StepStats};
pub use newton::{newton_solve, newton_solve_with_jacobian, NewtonReport};
pub use params::{amplification_matrix, spectral_radius, AlphaParams};
pub use system::{
    FirstOrderSystem, LinearSystem, RodSystem, StateSpaceSplit, BLOCK, KAPPA, N_STRESS, OMEGA, VEL,
};
