use std::path::PathBuf;

/// Errors produced by the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("axis is not unit length (norm = {norm})")]
    InvalidAxis { norm: f64 },

    #[error("joint {joint} has no designated child, so it has no twist axis")]
    NoTwistAxis { joint: usize },

    #[error("swing axis of joint {joint} is parallel to its bone direction")]
    ParallelSwingAxis { joint: usize },

    #[error("matrix is not a rotation: {0}")]
    InvalidRotation(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid kinematic tree: {0}")]
    InvalidTree(String),

    #[error("degenerate root alignment: child directions do not span a plane")]
    DegenerateProcrustes,

    #[error("target bone ending at joint {joint} has zero length")]
    DegenerateBone { joint: usize },

    #[error("finite-difference step must be positive and finite, got {0}")]
    InvalidStep(f64),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("point is not stationary (|J^T r|_inf = {stationarity:e}); implicit gradients need a converged solve")]
    NotConverged { stationarity: f64 },

    #[error("trace does not match inputs: {0}")]
    TraceMismatch(String),

    #[error("{path}: line {line}, column {column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{path}: field `{field}`: {message}")]
    Field {
        path: String,
        field: String,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures caused by malformed input rather than by the numerics.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            Error::Numerical(_) | Error::NotConverged { .. } | Error::DegenerateProcrustes
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
