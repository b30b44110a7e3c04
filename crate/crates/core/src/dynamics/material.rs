use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::rhs::segment_strains;
use super::state::RodState;
use crate::{Error, Result, Vec3};

/// Material and cross-section data, uniform along the rod.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RodMaterial {
    /// Density (kg/m³).
    pub rho: f64,
    /// Cross-section area (m²).
    pub area: f64,
    /// Area moments (m⁴); `i3` is the polar moment.
    pub i1: f64,
    pub i2: f64,
    pub i3: f64,
    /// Young's modulus (Pa).
    pub young: f64,
    /// Shear modulus (Pa).
    pub shear: f64,
    /// Torsion constant (m⁴).
    pub torsion: f64,
    pub ks1: f64,
    pub ks2: f64,
    /// Mass-proportional Rayleigh coefficient (1/s).
    #[serde(default)]
    pub rayleigh_alpha: f64,
    /// Stiffness-proportional Rayleigh coefficient (s).
    #[serde(default)]
    pub rayleigh_beta: f64,
}

impl RodMaterial {
    /// Solid circular cross-section of the given radius.
    pub fn circular(radius: f64, rho: f64, young: f64, shear: f64) -> Self {
        let area = PI * radius * radius;
        let i = 0.25 * PI * radius.powi(4);
        Self {
            rho,
            area,
            i1: i,
            i2: i,
            i3: 2.0 * i,
            young,
            shear,
            torsion: 2.0 * i,
            ks1: 1.0,
            ks2: 1.0,
            rayleigh_alpha: 0.0,
            rayleigh_beta: 0.0,
        }
    }

    pub fn with_damping(mut self, alpha: f64, beta: f64) -> Self {
        self.rayleigh_alpha = alpha;
        self.rayleigh_beta = beta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rho", self.rho),
            ("area", self.area),
            ("i1", self.i1),
            ("i2", self.i2),
            ("i3", self.i3),
            ("young", self.young),
            ("shear", self.shear),
            ("torsion", self.torsion),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::Config(format!(
                    "material {name} must be positive, got {value}"
                )));
            }
        }
        for (name, value) in [("ks1", self.ks1), ("ks2", self.ks2)] {
            if !(value > 0.0 && value <= 1.0) {
                return Err(Error::Config(format!(
                    "material {name} must lie in (0, 1], got {value}"
                )));
            }
        }
        for (name, value) in [
            ("rayleigh_alpha", self.rayleigh_alpha),
            ("rayleigh_beta", self.rayleigh_beta),
        ] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::Config(format!(
                    "{name} must be non-negative, got {value}"
                )));
            }
        }
        Ok(())
    }

    /// Diagonal of the bending/torsion stiffness `(E I1, E I2, G μ)`.
    pub fn bending_stiffness(&self) -> Vec3 {
        Vec3::new(
            self.young * self.i1,
            self.young * self.i2,
            self.shear * self.torsion,
        )
    }

    /// Diagonal of the shear/extension stiffness `(ks1 G A, ks2 G A, E A)`.
    pub fn axial_stiffness(&self) -> Vec3 {
        Vec3::new(
            self.ks1 * self.shear * self.area,
            self.ks2 * self.shear * self.area,
            self.young * self.area,
        )
    }

    /// Diagonal of `ρJ`.
    pub fn rotary_inertia(&self) -> Vec3 {
        Vec3::new(self.rho * self.i1, self.rho * self.i2, self.rho * self.i3)
    }

    /// `ρA`.
    pub fn line_density(&self) -> f64 {
        self.rho * self.area
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EndCondition {
    Clamped,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Boundary {
    pub start: EndCondition,
    pub end: EndCondition,
}

impl Boundary {
    pub const CLAMPED_FREE: Boundary = Boundary {
        start: EndCondition::Clamped,
        end: EndCondition::Free,
    };
    pub const FREE_FREE: Boundary = Boundary {
        start: EndCondition::Free,
        end: EndCondition::Free,
    };

    pub fn describe(&self) -> String {
        let name = |e: EndCondition| match e {
            EndCondition::Clamped => "clamped",
            EndCondition::Free => "free",
        };
        format!("{}-{}", name(self.start), name(self.end))
    }
}

/// Everything about the rod that does not evolve: material, boundary
/// conditions, stress-free strains and clamp values.
#[derive(Debug, Clone, PartialEq)]
pub struct RodModel {
    pub material: RodMaterial,
    pub boundary: Boundary,
    /// Stress-free Darboux vector per segment.
    pub rest_kappa: Vec<Vec3>,
    /// Stress-free linear strain per segment.
    pub rest_nu: Vec<Vec3>,
    /// `(p, q)` held at a clamped first/last node.
    pub clamp_start: Option<(Vec3, Vec3)>,
    pub clamp_end: Option<(Vec3, Vec3)>,
}

impl RodModel {
    /// Naturally straight, unstretched rod (`κ⁰ = 0`, `ν⁰ = e3`).
    pub fn straight(material: RodMaterial, boundary: Boundary, state: &RodState) -> Self {
        let n = state.nodes.len().saturating_sub(1);
        let mut model = Self {
            material,
            boundary,
            rest_kappa: vec![Vec3::zeros(); n],
            rest_nu: vec![Vec3::z(); n],
            clamp_start: None,
            clamp_end: None,
        };
        model.set_clamps(state);
        model
    }

    /// Takes the strains of `state` as the stress-free configuration.
    pub fn stress_free(
        material: RodMaterial,
        boundary: Boundary,
        state: &RodState,
    ) -> Result<Self> {
        let segments = segment_strains(state)?;
        let rest_kappa = segments.iter().map(|s| s.kappa).collect();
        let rest_nu = segments.iter().map(|s| s.nu).collect();
        let mut model = Self {
            material,
            boundary,
            rest_kappa,
            rest_nu,
            clamp_start: None,
            clamp_end: None,
        };
        model.set_clamps(state);
        Ok(model)
    }

    fn set_clamps(&mut self, state: &RodState) {
        let first = state.nodes.first().map(|n| (n.p, n.q));
        let last = state.nodes.last().map(|n| (n.p, n.q));
        self.clamp_start = match self.boundary.start {
            EndCondition::Clamped => first,
            EndCondition::Free => None,
        };
        self.clamp_end = match self.boundary.end {
            EndCondition::Clamped => last,
            EndCondition::Free => None,
        };
    }

    pub fn nodes(&self) -> usize {
        self.rest_kappa.len() + 1
    }

    #[inline]
    pub fn is_clamped(&self, i: usize) -> bool {
        (i == 0 && self.boundary.start == EndCondition::Clamped)
            || (i + 1 == self.nodes() && self.boundary.end == EndCondition::Clamped)
    }
}
