//! Dynamical Cosserat rods integrated with a frozen-twist exponential step.
//!
//! The rod state is carried as two rotation/translation potentials `p`, `q`
//! together with the twist `omega` and velocity `v` (all in the director
//! basis). Curvature and strain follow in closed form from `p`, `q`, and the
//! time derivative of `p` is recovered exactly from `omega`, so the only
//! numerically delicate piece, keeping `|p|` inside `(0, 2π)`, is handled by
//! stepping `p` with the analytical solution of the frozen-twist system.
//!
//! Modules:
//! - [`kinematics`]: closed-form kinematic relations and the twist-map inversion.
//! - [`twist`]: closed-form frozen-twist propagation of `p`.
//! - [`dynamics`]: constitutive law, finite differences, right-hand side and the
//!   split time step.
//! - [`alpha`]: generalized-α baseline on the `(v, ω, κ, n)` state-space form.
//! - [`harness`]: scenarios, reference oracle, error metrics and benchmarking.

pub mod alpha;
pub mod dynamics;
mod error;
pub mod harness;
pub mod kinematics;
pub mod twist;

pub use error::{Error, Result};

/// Real 3-vector used for every kinematic and dynamic field.
pub type Vec3 = nalgebra::Vector3<f64>;
/// 3×3 real matrix (rotations, inertia tensors).
pub type Mat3 = nalgebra::Matrix3<f64>;

pub use dynamics::{
    Boundary, EndCondition, Loads, NoLoads, NodeState, RodMaterial, RodModel, RodState,
};
pub use kinematics::DirectorFrame;
pub use twist::{FrameSolution, OmegaFrame};
