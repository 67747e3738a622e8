use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("empirical design source {path}: {reason}")]
    EmpiricalSource { path: PathBuf, reason: String },

    #[error("lasso solver did not converge at lambda={lambda} after {iterations} sweeps (kkt residual {kkt_residual:.3e})")]
    NonConvergence {
        lambda: f64,
        iterations: usize,
        kkt_residual: f64,
    },

    #[error("grid misalignment: {0}")]
    GridMismatch(String),

    #[error("every grid point is saturated (selection dimension equals n)")]
    SaturatedPath,

    #[error("best subset enumeration over p={p} columns exceeds p_max={p_max}")]
    TooManyColumns { p: usize, p_max: usize },

    #[error("{dropped} of {total} replications failed (more than 1%)")]
    TooManyFailures { dropped: usize, total: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
