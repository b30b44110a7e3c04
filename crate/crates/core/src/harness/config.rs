use std::f64::consts::TAU;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::alpha::AlphaParams;
use crate::dynamics::{Boundary, Loads, RodMaterial};
use crate::{Error, Result, Vec3};

/// Samples written per simulated second.
pub const TRACE_RATE: f64 = 200.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScenarioId {
    I,
    Ii,
    Iii,
    Iv,
    Custom,
}

impl ScenarioId {
    pub const BENCHMARK: [ScenarioId; 4] = [
        ScenarioId::I,
        ScenarioId::Ii,
        ScenarioId::Iii,
        ScenarioId::Iv,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            ScenarioId::I => "i",
            ScenarioId::Ii => "ii",
            ScenarioId::Iii => "iii",
            ScenarioId::Iv => "iv",
            ScenarioId::Custom => "custom",
        }
    }
}

impl std::str::FromStr for ScenarioId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "i" | "1" => Ok(ScenarioId::I),
            "ii" | "2" => Ok(ScenarioId::Ii),
            "iii" | "3" => Ok(ScenarioId::Iii),
            "iv" | "4" => Ok(ScenarioId::Iv),
            "custom" => Ok(ScenarioId::Custom),
            other => Err(Error::UnknownScenario(other.to_string())),
        }
    }
}

impl std::fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntegratorKind {
    Snm,
    Alpha,
    Oracle,
}

impl std::str::FromStr for IntegratorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "snm" => Ok(IntegratorKind::Snm),
            "alpha" => Ok(IntegratorKind::Alpha),
            "oracle" => Ok(IntegratorKind::Oracle),
            other => Err(Error::Config(format!("unknown integrator `{other}`"))),
        }
    }
}

impl std::fmt::Display for IntegratorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            IntegratorKind::Snm => "snm",
            IntegratorKind::Alpha => "alpha",
            IntegratorKind::Oracle => "oracle",
        })
    }
}

/// Initial centerline and directors. The first node sits at the origin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialShape {
    /// Planar curve in the horizontal `e1 e2` plane with tangent angle
    /// `θ(s) = amplitude · sin(2π s / wavelength)` measured from `e1`;
    /// `d2 = e3`.
    Sinusoidal { amplitude: f64, wavelength: f64 },
    /// Helix about the vertical axis, descending from the first node.
    /// `d1` points towards the axis.
    Helix { radius: f64, turns: f64 },
    /// Straight rod along `direction`.
    Straight { direction: [f64; 3] },
}

/// Time dependence of a concentrated end load (fixed-frame components).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Schedule {
    None,
    Constant {
        value: [f64; 3],
    },
    /// `amplitude · sin(2π t / period)`.
    Sine {
        amplitude: [f64; 3],
        period: f64,
    },
    /// `value` while `t < until`, then faded out to zero over `fade` seconds.
    Pulse {
        value: [f64; 3],
        until: f64,
        #[serde(default)]
        fade: f64,
    },
}

/// `C²` step from 0 at `x <= 0` to 1 at `x >= 1`.
pub fn smoothstep(x: f64) -> f64 {
    let x = x.clamp(0.0, 1.0);
    x * x * x * (10.0 + x * (6.0 * x - 15.0))
}

impl Schedule {
    pub fn eval(&self, t: f64) -> Vec3 {
        match self {
            Schedule::None => Vec3::zeros(),
            Schedule::Constant { value } => Vec3::from(*value),
            Schedule::Sine { amplitude, period } => {
                Vec3::from(*amplitude) * (TAU * t / period).sin()
            }
            Schedule::Pulse { value, until, fade } => {
                let level = if t < *until {
                    1.0
                } else if *fade > 0.0 {
                    1.0 - smoothstep((t - until) / fade)
                } else {
                    0.0
                };
                Vec3::from(*value) * level
            }
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        let finite = |v: &[f64; 3]| v.iter().all(|x| x.is_finite());
        let ok = match self {
            Schedule::None => true,
            Schedule::Constant { value } => finite(value),
            Schedule::Sine { amplitude, period } => finite(amplitude) && *period > 0.0,
            Schedule::Pulse { value, until, fade } => {
                finite(value) && until.is_finite() && *fade >= 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!("invalid {name} schedule")))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadSpec {
    /// Gravitational acceleration (m/s²); applied as `ρA g` per unit length.
    pub gravity: [f64; 3],
    pub tip_force: Schedule,
    pub tip_torque: Schedule,
    /// Every load is switched on smoothly over this many seconds.
    #[serde(default)]
    pub ramp: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Damping {
    /// Mass-proportional coefficient (1/s).
    pub alpha: f64,
    /// Stiffness-proportional coefficient (s).
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub id: ScenarioId,
    pub segments: usize,
    /// Rod length (m).
    pub length: f64,
    /// Rayleigh coefficients in here are overridden by `damping`.
    pub material: RodMaterial,
    pub initial_shape: InitialShape,
    pub loads: LoadSpec,
    pub boundary: Boundary,
    /// Simulated time (s).
    pub duration: f64,
    pub integrator: IntegratorKind,
    /// Time step (s).
    pub dt: f64,
    pub alpha_params: AlphaParams,
    pub damping: Damping,
    pub seed: u64,
}

/// Command-line style overrides applied on top of a built-in scenario.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub segments: Option<usize>,
    pub dt: Option<f64>,
    pub duration: Option<f64>,
    pub integrator: Option<IntegratorKind>,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn apply(&mut self, overrides: &Overrides) -> Result<()> {
        if let Some(n) = overrides.segments {
            self.segments = n;
        }
        if let Some(dt) = overrides.dt {
            self.dt = dt;
        }
        if let Some(d) = overrides.duration {
            self.duration = d;
        }
        if let Some(k) = overrides.integrator {
            self.integrator = k;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments < 2 {
            return Err(Error::Config(format!(
                "segments must be at least 2, got {}",
                self.segments
            )));
        }
        let positive = [
            ("length", self.length),
            ("duration", self.duration),
            ("dt", self.dt),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::Config(format!(
                    "{name} must be positive, got {value}"
                )));
            }
        }
        if self.dt > self.duration {
            return Err(Error::Config(format!(
                "dt = {} exceeds duration = {}",
                self.dt, self.duration
            )));
        }
        self.effective_material().validate()?;
        self.alpha_params.validate()?;
        self.loads.tip_force.validate("tip force")?;
        self.loads.tip_torque.validate("tip torque")?;
        if !self.loads.gravity.iter().all(|g| g.is_finite()) {
            return Err(Error::Config("gravity must be finite".into()));
        }
        match &self.initial_shape {
            InitialShape::Sinusoidal {
                amplitude,
                wavelength,
            } => {
                if !(amplitude.is_finite() && *wavelength > 0.0) {
                    return Err(Error::Config(
                        "sinusoidal shape needs finite amplitude and positive wavelength".into(),
                    ));
                }
            }
            InitialShape::Helix { radius, turns } => {
                if !(*radius > 0.0 && *turns > 0.0) {
                    return Err(Error::Config(
                        "helix needs positive radius and turns".into(),
                    ));
                }
                if self.length / turns <= TAU * radius {
                    return Err(Error::Config(format!(
                        "helix of {turns} turns with radius {radius} m needs more than {:.4} m of rod",
                        turns * TAU * radius
                    )));
                }
            }
            InitialShape::Straight { direction } => {
                if Vec3::from(*direction).norm() == 0.0 {
                    return Err(Error::Config(
                        "straight shape needs a nonzero direction".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn effective_material(&self) -> RodMaterial {
        self.material
            .with_damping(self.damping.alpha, self.damping.beta)
    }

    pub fn nodes(&self) -> usize {
        self.segments + 1
    }

    pub fn ds(&self) -> f64 {
        self.length / self.segments as f64
    }

    pub fn scenario_loads(&self) -> ScenarioLoads {
        ScenarioLoads {
            weight: Vec3::from(self.loads.gravity) * self.effective_material().line_density(),
            tip_force: self.loads.tip_force.clone(),
            tip_torque: self.loads.tip_torque.clone(),
            ramp: self.loads.ramp,
        }
    }
}

/// [`Loads`] realized from a [`LoadSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioLoads {
    pub weight: Vec3,
    pub tip_force: Schedule,
    pub tip_torque: Schedule,
    pub ramp: f64,
}

impl ScenarioLoads {
    /// Onset factor applied to every load.
    pub fn level(&self, t: f64) -> f64 {
        if self.ramp > 0.0 {
            smoothstep(t / self.ramp)
        } else {
            1.0
        }
    }
}

impl Loads for ScenarioLoads {
    fn force_density(&self, _s: f64, t: f64) -> Vec3 {
        self.weight * self.level(t)
    }

    fn tip_force(&self, t: f64) -> Vec3 {
        self.tip_force.eval(t) * self.level(t)
    }

    fn tip_torque(&self, t: f64) -> Vec3 {
        self.tip_torque.eval(t) * self.level(t)
    }
}

/// Soft elastomer-like default material with a 5 cm radius.
pub fn default_material() -> RodMaterial {
    RodMaterial::circular(DEFAULT_RADIUS, 1000.0, DEFAULT_YOUNG, DEFAULT_YOUNG / 3.0)
}

pub const DEFAULT_RADIUS: f64 = 0.05;
pub const DEFAULT_YOUNG: f64 = 1e6;
pub const GRAVITY: [f64; 3] = [0.0, 0.0, -9.81];
/// Onset time of the built-in scenarios' loads (s).
pub const LOAD_RAMP: f64 = 0.05;

/// Built-in scenario with optional overrides.
pub fn build_scenario(id: ScenarioId, overrides: &Overrides) -> Result<ScenarioConfig> {
    let material = default_material();
    let base =
        |length: f64, shape: InitialShape, loads: LoadSpec, damping: Damping| ScenarioConfig {
            id,
            segments: 100,
            length,
            material,
            initial_shape: shape,
            loads,
            boundary: Boundary::CLAMPED_FREE,
            duration: 8.0,
            integrator: IntegratorKind::Snm,
            dt: 1.25e-4,
            alpha_params: AlphaParams::default(),
            damping,
            seed: 0,
        };
    let ei = material.bending_stiffness().x;
    let helix = InitialShape::Helix {
        radius: 0.06,
        turns: 1.2,
    };
    let mut cfg = match id {
        ScenarioId::I => base(
            0.5,
            InitialShape::Sinusoidal {
                amplitude: 0.3,
                wavelength: 0.25,
            },
            LoadSpec {
                gravity: GRAVITY,
                tip_force: Schedule::None,
                tip_torque: Schedule::None,
                ramp: LOAD_RAMP,
            },
            Damping::default(),
        ),
        ScenarioId::Ii => {
            // ~10% of the length as static cantilever tip deflection
            let f = 0.3 * ei / 0.25;
            let mut cfg = base(
                0.5,
                helix,
                LoadSpec {
                    gravity: GRAVITY,
                    tip_force: Schedule::Sine {
                        amplitude: [f, 0.0, 0.0],
                        period: 1.0,
                    },
                    tip_torque: Schedule::None,
                    ramp: LOAD_RAMP,
                },
                Damping {
                    alpha: 50.0,
                    beta: 0.0,
                },
            );
            cfg.alpha_params = AlphaParams::dissipative();
            cfg
        }
        ScenarioId::Iii => {
            // tip rotation of ~0.1 rad over the length in bending and torsion
            let m = 0.1 * ei / 0.45;
            base(
                0.45,
                InitialShape::Straight {
                    direction: [0.0, 0.0, -1.0],
                },
                LoadSpec {
                    gravity: GRAVITY,
                    tip_force: Schedule::None,
                    tip_torque: Schedule::Sine {
                        amplitude: [m, 0.0, m],
                        period: 1.0,
                    },
                    ramp: LOAD_RAMP,
                },
                Damping::default(),
            )
        }
        ScenarioId::Iv => {
            let f = 0.3 * ei / 0.25;
            base(
                0.5,
                helix,
                LoadSpec {
                    gravity: GRAVITY,
                    tip_force: Schedule::Pulse {
                        value: [0.0, 0.0, -f],
                        until: 0.1,
                        fade: LOAD_RAMP,
                    },
                    tip_torque: Schedule::None,
                    ramp: LOAD_RAMP,
                },
                Damping {
                    alpha: 0.2,
                    beta: 0.0,
                },
            )
        }
        ScenarioId::Custom => return Err(Error::UnknownScenario("custom".into())),
    };
    cfg.apply(overrides)?;
    Ok(cfg)
}
