use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::{InitialShape, ScenarioConfig};
use crate::dynamics::{RodModel, RodState};
use crate::{Mat3, Result, Vec3};

/// Initial positions and frames (columns `d1 d2 d3`) at the grid nodes.
pub fn initial_geometry(cfg: &ScenarioConfig) -> (Vec<Vec3>, Vec<Mat3>) {
    let n = cfg.nodes();
    let ds = cfg.ds();
    let s = |i: usize| i as f64 * ds;
    match &cfg.initial_shape {
        InitialShape::Sinusoidal {
            amplitude,
            wavelength,
        } => {
            let theta = |s: f64| amplitude * (TAU * s / wavelength).sin();
            let tangent = |s: f64| {
                let th = theta(s);
                Vec3::new(th.cos(), th.sin(), 0.0)
            };
            // composite Simpson between nodes
            let sub = 16;
            let h = ds / sub as f64;
            let mut positions = vec![Vec3::zeros()];
            for i in 1..n {
                let a = s(i - 1);
                let mut acc = tangent(a) + tangent(a + ds);
                for k in 1..sub {
                    let w = if k % 2 == 1 { 4.0 } else { 2.0 };
                    acc += w * tangent(a + k as f64 * h);
                }
                positions.push(positions[i - 1] + acc * (h / 3.0));
            }
            let frames = (0..n)
                .map(|i| {
                    let d3 = tangent(s(i));
                    let d2 = Vec3::z();
                    Mat3::from_columns(&[d2.cross(&d3), d2, d3])
                })
                .collect();
            (positions, frames)
        }
        InitialShape::Helix { radius, turns } => {
            let per_turn = cfg.length / turns;
            let pitch = (per_turn * per_turn - (TAU * radius).powi(2)).sqrt();
            let rise = pitch / TAU;
            let c = (radius * radius + rise * rise).sqrt();
            let mut positions = Vec::with_capacity(n);
            let mut frames = Vec::with_capacity(n);
            for i in 0..n {
                let phi = s(i) / c;
                let (sp, cp) = phi.sin_cos();
                positions.push(Vec3::new(radius * (cp - 1.0), radius * sp, -rise * phi));
                let d3 = Vec3::new(-radius * sp, radius * cp, -rise) / c;
                let d1 = Vec3::new(-cp, -sp, 0.0);
                frames.push(Mat3::from_columns(&[d1, d3.cross(&d1), d3]));
            }
            (positions, frames)
        }
        InitialShape::Straight { direction } => {
            let d3 = Vec3::from(*direction).normalize();
            let seed = if d3.x.abs() < 0.9 {
                Vec3::x()
            } else {
                Vec3::y()
            };
            let d1 = (seed - d3 * d3.dot(&seed)).normalize();
            let frame = Mat3::from_columns(&[d1, d3.cross(&d1), d3]);
            let positions = (0..n).map(|i| d3 * s(i)).collect();
            (positions, vec![frame; n])
        }
    }
}

/// Axis used when a node's rotation vanishes; drawn from the scenario seed.
pub fn fallback_axis(seed: u64) -> Vec3 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let v = Vec3::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

/// Initial state at rest together with the rod model; the initial shape is
/// taken as stress free.
pub fn initial_state(cfg: &ScenarioConfig) -> Result<(RodState, RodModel)> {
    cfg.validate()?;
    let (positions, frames) = initial_geometry(cfg);
    let state = RodState::from_frames(&positions, &frames, cfg.ds(), fallback_axis(cfg.seed))?;
    let model = RodModel::stress_free(cfg.effective_material(), cfg.boundary, &state)?;
    Ok((state, model))
}
