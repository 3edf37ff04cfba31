use thiserror::Error;

use crate::field::Field;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The configuration violates one or more standing assumptions.
    #[error("inadmissible configuration: {}", .0.join("; "))]
    Inadmissible(Vec<String>),

    #[error("penalization region leaves domain")]
    RegionLeavesDomain,

    #[error("fractional order s = {0} outside (0, 1)")]
    FractionalOrder(f64),

    #[error("kernel not locally integrable (mu = {mu}, N = {dim})")]
    KernelNotIntegrable { mu: f64, dim: usize },

    #[error("sampler produced no field inside B")]
    EmptyCalibration,

    #[error("ray has no Nehari point")]
    NoNehariPoint,

    #[error("no convergence after {iterations} iterations (gradient norm {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        last: Box<Field>,
    },

    #[error("quadrature blow-up")]
    QuadratureBlowUp,

    #[error("unexpected end of field data")]
    UnexpectedEof,

    #[error("sidecar dims {dims:?} disagree with payload of {samples} samples")]
    DimsMismatch { dims: Vec<usize>, samples: usize },

    #[error("checksum mismatch: sidecar {expected}, payload {actual}")]
    ChecksumMismatch { expected: String, actual: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
