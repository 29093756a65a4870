use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("series did not converge below tolerance {tol:e} within index cap {cap} (bound {bound:e})")]
    Truncation { tol: f64, cap: usize, bound: f64 },

    #[error("krylov propagator did not converge: residual {residual:e} > tol {tol:e} at dimension {dim}")]
    KrylovNonConvergence { residual: f64, tol: f64, dim: usize },

    #[error("norm drift {drift:e} exceeds {limit:e} at t = {time:e} s")]
    NormDrift { drift: f64, limit: f64, time: f64 },

    #[error("ewald fit needs at least 3 peaks, found {0}")]
    InsufficientPeaks(usize),

    #[error("order windows of half-width {window:e} overlap (lattice spacing {spacing:e})")]
    OverlappingWindows { window: f64, spacing: f64 },

    #[error("failed to parse {path}: {msg}")]
    Parse { path: PathBuf, msg: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::InvalidConfig(msg.into())
    }

    pub(crate) fn precondition(msg: impl Into<String>) -> Self {
        Error::Precondition(msg.into())
    }
}
