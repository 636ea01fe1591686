use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the solver stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("invalid argument: {0}")]
    Domain(String),

    #[error("lattice offset ({0}, {1}, {2}) exceeds table extent {3}")]
    OutOfExtent(i64, i64, i64, usize),

    #[error("trapezoid rule not converged: {0}")]
    Trapezoid(String),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("projection failed for node {node:?}: {reason}")]
    Projection { node: Option<[usize; 3]>, reason: String },

    #[error("boundary closure error: {0}")]
    Closure(String),

    #[error("shape mismatch: expected {expected}, got {got}")]
    Shape { expected: usize, got: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
