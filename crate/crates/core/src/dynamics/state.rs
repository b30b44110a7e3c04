use crate::kinematics::{in_chart, rotation_matrix, rotation_vector_near};
use crate::{Error, Mat3, Result, Vec3};

/// Per-node unknowns, all in director components.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NodeState {
    pub p: Vec3,
    pub q: Vec3,
    pub omega: Vec3,
    pub v: Vec3,
}

/// Rod state on a uniform grid `s_i = i ds`.
#[derive(Debug, Clone, PartialEq)]
pub struct RodState {
    pub t: f64,
    pub ds: f64,
    pub nodes: Vec<NodeState>,
}

/// Smallest `|p|` allowed when building states; an identity frame has no
/// rotation axis for the frozen-twist decomposition.
pub const MIN_ROTATION: f64 = 1e-8;

impl RodState {
    /// Builds `(p, q)` from centerline points and director frames (columns
    /// `d1 d2 d3`), with `q = -Rᵀ r` so that `r = -R q`. Rotation vectors are
    /// chosen continuous along the rod; magnitudes below [`MIN_ROTATION`] are
    /// lifted to it along `fallback_axis`.
    pub fn from_frames(
        positions: &[Vec3],
        frames: &[Mat3],
        ds: f64,
        fallback_axis: Vec3,
    ) -> Result<Self> {
        if positions.len() != frames.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} positions vs {} frames",
                positions.len(),
                frames.len()
            )));
        }
        let axis = fallback_axis.try_normalize(0.0).unwrap_or_else(Vec3::z);
        let mut prev = Vec3::zeros();
        let mut nodes = Vec::with_capacity(positions.len());
        for (r, frame) in positions.iter().zip(frames) {
            let mut p = rotation_vector_near(frame, &prev);
            let pm = p.norm();
            if pm < MIN_ROTATION {
                p = if pm > 0.0 {
                    p * (MIN_ROTATION / pm)
                } else {
                    axis * MIN_ROTATION
                };
            }
            if !in_chart(&p) {
                return Err(Error::Singularity {
                    magnitude: p.norm(),
                    node: Some(nodes.len()),
                    time: Some(0.0),
                });
            }
            prev = p;
            let rot = rotation_matrix(&p);
            nodes.push(NodeState {
                p,
                q: -(rot.transpose() * r),
                omega: Vec3::zeros(),
                v: Vec3::zeros(),
            });
        }
        Ok(Self { t: 0.0, ds, nodes })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.nodes.iter().all(|n| {
            n.p.iter()
                .chain(n.q.iter())
                .chain(n.omega.iter())
                .chain(n.v.iter())
                .all(|x| x.is_finite())
        })
    }
}

/// Structure-of-arrays view of the node unknowns used inside integrators.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NodeFields {
    pub p: Vec<Vec3>,
    pub q: Vec<Vec3>,
    pub omega: Vec<Vec3>,
    pub v: Vec<Vec3>,
}

impl NodeFields {
    pub fn from_state(state: &RodState) -> Self {
        Self {
            p: state.nodes.iter().map(|n| n.p).collect(),
            q: state.nodes.iter().map(|n| n.q).collect(),
            omega: state.nodes.iter().map(|n| n.omega).collect(),
            v: state.nodes.iter().map(|n| n.v).collect(),
        }
    }

    pub fn to_state(&self, t: f64, ds: f64) -> RodState {
        let nodes = (0..self.p.len())
            .map(|i| NodeState {
                p: self.p[i],
                q: self.q[i],
                omega: self.omega[i],
                v: self.v[i],
            })
            .collect();
        RodState { t, ds, nodes }
    }

    pub fn len(&self) -> usize {
        self.p.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p.is_empty()
    }
}
