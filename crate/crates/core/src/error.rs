use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// The rotation vector left the chart `(0, 2π)`; the twist map has a
    /// vanishing Jacobian determinant at `|p| = 2π` (and no direction at 0).
    #[error("twist map singular at |p| = {magnitude} (node {node:?}, t = {time:?})")]
    Singularity {
        magnitude: f64,
        node: Option<usize>,
        time: Option<f64>,
    },

    #[error("twist vector has zero magnitude")]
    ZeroTwist,

    #[error("vector has zero magnitude")]
    ZeroVector,

    #[error("direction cosines not normalized: |A|^2 - 1 = {0:e}")]
    InvalidNormalization(f64),

    #[error("degenerate frozen-twist solution (p aligned with omega)")]
    Degenerate,

    #[error("grid has {0} nodes, at least {1} required")]
    GridTooSmall(usize, usize),

    #[error("newton solve did not converge after {iterations} iterations (residual {residual:e})")]
    NewtonDivergence {
        iterations: usize,
        residual: f64,
        trace: Vec<f64>,
    },

    #[error("singular linear system in newton iteration")]
    SingularJacobian,

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown scenario id `{0}`")]
    UnknownScenario(String),

    #[error("no time step in [{lo:e}, {hi:e}] s reaches the {tolerance} relative L2 bound")]
    AccuracyUnreachable { lo: f64, hi: f64, tolerance: f64 },

    #[error("non-finite state encountered at t = {0}")]
    NonFinite(f64),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
