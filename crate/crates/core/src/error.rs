use thiserror::Error;

use crate::eigen::EigenpairSet;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("Kac normalization vanishes for a nonzero coupling table")]
    ZeroKacFactor,

    #[error("dense materialization of dimension {dim} exceeds the guard of {limit} (use the override to force it)")]
    DenseGuard { dim: usize, limit: usize },

    #[error("candidate vector lies in the span of the locked vectors")]
    DeflationCollapse,

    /// The solver ran out of outer iterations. The pairs that did converge are kept.
    #[error("eigensolver did not converge after {iterations} outer iterations ({} pairs converged)", partial.len())]
    NotConverged {
        iterations: usize,
        partial: Box<EigenpairSet>,
    },

    #[error("correction equation stagnated repeatedly after {iterations} outer iterations")]
    Breakdown { iterations: usize },

    #[error("power iteration did not reach relative tolerance {tol:e} in {iterations} steps")]
    PowerIteration { iterations: usize, tol: f64 },

    #[error("Krylov propagation step of {dt} did not converge even after {substeps} substeps")]
    Propagation { dt: f64, substeps: usize },

    #[error("dense eigendecomposition failed: {0}")]
    DenseEigen(String),

    #[error("vectors are not orthonormal (max deviation {0:e})")]
    NotOrthonormal(f64),

    #[error("selection is empty or captures no weight")]
    EmptySelection,

    #[error("weight threshold {nu_min} is unreachable: available weight is {available}")]
    ThresholdUnreachable { nu_min: f64, available: f64 },

    #[error("exact evolution needs a complete eigenbasis ({have} of {dim} pairs supplied)")]
    IncompleteBasis { have: usize, dim: usize },

    #[error("observable is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("time series lengths differ: {0} vs {1}")]
    GridMismatch(usize, usize),

    #[error("reduced model is missing the projector columns")]
    MissingProjector,

    #[error("unknown observable `{0}`")]
    UnknownObservable(String),

    #[error("model file: {0}")]
    ModelFormat(String),

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
