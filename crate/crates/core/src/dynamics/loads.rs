use crate::Vec3;

/// External loading. All vectors are expressed in the fixed frame; the
/// right-hand side rotates them into the director basis.
pub trait Loads: Sync {
    /// Force per unit length `F(s, t)`.
    fn force_density(&self, _s: f64, _t: f64) -> Vec3 {
        Vec3::zeros()
    }

    /// Torque per unit length `L(s, t)`.
    fn torque_density(&self, _s: f64, _t: f64) -> Vec3 {
        Vec3::zeros()
    }

    /// Concentrated force applied at a free last node (`s = b`).
    fn tip_force(&self, _t: f64) -> Vec3 {
        Vec3::zeros()
    }

    /// Concentrated torque applied at a free last node (`s = b`).
    fn tip_torque(&self, _t: f64) -> Vec3 {
        Vec3::zeros()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct NoLoads;

impl Loads for NoLoads {}

/// Time- and space-independent loads.
#[derive(Debug, Clone, Copy, Default)]
pub struct ConstantLoads {
    pub force_density: Vec3,
    pub torque_density: Vec3,
    pub tip_force: Vec3,
    pub tip_torque: Vec3,
}

impl Loads for ConstantLoads {
    fn force_density(&self, _s: f64, _t: f64) -> Vec3 {
        self.force_density
    }

    fn torque_density(&self, _s: f64, _t: f64) -> Vec3 {
        self.torque_density
    }

    fn tip_force(&self, _t: f64) -> Vec3 {
        self.tip_force
    }

    fn tip_torque(&self, _t: f64) -> Vec3 {
        self.tip_torque
    }
}
