//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid coordinate: {0}")]
    InvalidCoordinate(String),

    #[error("degenerate domain: {0}")]
    DegenerateDomain(String),

    #[error("location {index} at ({x}, {y}) is outside the mesh coverage")]
    OutOfDomain { index: usize, x: f64, y: f64 },

    #[error("matrix is not positive definite: pivot {pivot} = {value:e}")]
    NotPositiveDefinite { pivot: usize, value: f64 },

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: String,
    },

    #[error("parameter out of range: {0}")]
    ParameterRange(String),

    #[error("latent mode search did not converge: gradient norm {grad_norm:e} after {iterations} iterations")]
    NoConvergence { grad_norm: f64, iterations: usize },

    #[error("non-finite likelihood derivative at observation {index} (y = {y}, predictor = {eta})")]
    BadObservation { index: usize, y: f64, eta: f64 },

    #[error("dataset inconsistency: {0}")]
    Inconsistency(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("degenerate covariate: {0}")]
    DegenerateCovariate(String),

    #[error("empty likelihood: {0}")]
    EmptyLikelihood(String),

    #[error("thresholds must be strictly ascending: {0}")]
    UnorderedThresholds(String),

    #[error("latent dimension {0} exceeds the size guard of {1}")]
    SizeGuard(usize, usize),

    #[error("prediction/truth target mismatch: {0}")]
    TargetMismatch(String),

    #[error("optimizer start is unusable: {0}")]
    UnusableStart(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Wrap an I/O error with the path it occurred on.
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
