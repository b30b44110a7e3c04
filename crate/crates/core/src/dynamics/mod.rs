//! Dynamical part of the rod equations on a uniform arc-length grid.
//!
//! The unknowns per node are `(p, q, ω, v)`. Curvature and strain live on
//! the segments between nodes and are recovered from the relative rotation
//! and the `q` values of the two end nodes; stresses follow from the linear
//! constitutive law, and the balance laws at the nodes give `ω_t`, `v_t`. The time
//! step in [`step`] splits the update into velocity half-kicks around an exact
//! frozen-twist update of `p`.

mod loads;
mod material;
pub(crate) mod rhs;
mod state;
mod step;

pub use loads::{ConstantLoads, Loads, NoLoads};
pub use material::{Boundary, EndCondition, RodMaterial, RodModel};
pub use rhs::{
    constitutive, constitutive_about, dynamic_rhs, energy, half_rotation, node_resultants, q_rhs,
    segment_strain, segment_strain_rates, segment_strains, spatial_derivative,
    spatial_derivative_into, Energy, RhsEvaluator, SegmentStrain,
};
pub use state::{NodeFields, NodeState, RodState, MIN_ROTATION};
pub use step::{snm_step, SnmIntegrator};
