use std::io::Write;
use std::path::Path;

use crate::dynamics::RodState;
use crate::kinematics::{reconstruct_centerline, rotation_matrix};
use crate::{Error, Result, Vec3};

/// One node at one sample time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeSample {
    pub p: Vec3,
    pub q: Vec3,
    pub omega: Vec3,
    pub v: Vec3,
    /// Reconstructed centerline position.
    pub r: Vec3,
    /// Velocity in the fixed frame, `R(p) v`.
    pub velocity: Vec3,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trace {
    pub times: Vec<f64>,
    pub samples: Vec<Vec<NodeSample>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Position,
    Velocity,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn nodes(&self) -> usize {
        self.samples.first().map_or(0, Vec::len)
    }

    /// Records `state`; positions start from the position of the first node.
    pub fn push_state(&mut self, state: &RodState) -> Result<()> {
        let first = state.nodes.first().ok_or(Error::GridTooSmall(0, 1))?;
        let origin = -(rotation_matrix(&first.p) * first.q);
        let r = reconstruct_centerline(state, origin)?;
        let row = state
            .nodes
            .iter()
            .zip(r)
            .map(|(n, r)| NodeSample {
                p: n.p,
                q: n.q,
                omega: n.omega,
                v: n.v,
                r,
                velocity: rotation_matrix(&n.p) * n.v,
            })
            .collect();
        self.push(state.t, row);
        Ok(())
    }

    pub fn push(&mut self, t: f64, row: Vec<NodeSample>) {
        self.times.push(t);
        self.samples.push(row);
    }

    pub fn field(&self, k: usize, node: usize, field: Field) -> Vec3 {
        let s = &self.samples[k][node];
        match field {
            Field::Position => s.r,
            Field::Velocity => s.velocity,
        }
    }

    /// `Σ |x|²` of one sample row.
    pub fn row_norm_squared(&self, k: usize, field: Field) -> f64 {
        (0..self.samples[k].len())
            .map(|i| self.field(k, i, field).norm_squared())
            .sum()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "t", "node", "px", "py", "pz", "qx", "qy", "qz", "wx", "wy", "wz", "vx", "vy", "vz",
            "rx", "ry", "rz",
        ])?;
        for (t, row) in self.times.iter().zip(&self.samples) {
            for (i, s) in row.iter().enumerate() {
                let mut rec = Vec::with_capacity(17);
                rec.push(format!("{t:.6}"));
                rec.push(i.to_string());
                for v in [&s.p, &s.q, &s.omega, &s.v, &s.r] {
                    rec.extend(v.iter().map(|x| format!("{x:.12e}")));
                }
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// `‖a - b‖₂ / ‖b‖₂` over all nodes and sample times.
pub fn relative_l2(a: &Trace, b: &Trace, field: Field) -> Result<f64> {
    if a.len() != b.len() || a.nodes() != b.nodes() {
        return Err(Error::ShapeMismatch(format!(
            "traces of {}x{} and {}x{} samples",
            a.len(),
            a.nodes(),
            b.len(),
            b.nodes()
        )));
    }
    if a.times
        .iter()
        .zip(&b.times)
        .any(|(x, y)| (x - y).abs() > 1e-9 * (1.0 + y.abs()))
    {
        return Err(Error::ShapeMismatch(
            "traces are sampled at different times".into(),
        ));
    }
    let mut num = 0.0;
    let mut den = 0.0;
    for k in 0..a.len() {
        for i in 0..a.nodes() {
            let x = a.field(k, i, field);
            let y = b.field(k, i, field);
            num += (x - y).norm_squared();
            den += y.norm_squared();
        }
    }
    if den == 0.0 {
        return Ok(if num == 0.0 { 0.0 } else { f64::INFINITY });
    }
    Ok((num / den).sqrt())
}
