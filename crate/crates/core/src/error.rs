use thiserror::Error;

/// Failure modes of construction, evaluation and time stepping.
///
/// Admissibility failures carry enough context (cell, position, state) to
/// identify the offending quadrature or trace point.
#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid basis or quadrature request: {0}")]
    InvalidBasis(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("inadmissible state at {context}: rho = {rho:.6e}, p = {pressure:.6e}")]
    Inadmissible {
        context: String,
        rho: f64,
        pressure: f64,
    },

    #[error("limiter failed in cell {cell}: {reason}")]
    LimiterFailure { cell: usize, reason: String },

    #[error("time step underflow at t = {t:.6e}: dt = {dt:.6e}")]
    TimeStepUnderflow { t: f64, dt: f64 },

    #[error("snapshot format error: {0}")]
    SnapshotFormat(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, SolverError>;
