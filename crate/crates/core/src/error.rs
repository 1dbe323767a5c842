use std::path::PathBuf;

use thiserror::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by estimation, portfolio, simulation and I/O routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("too few observations: need at least {needed}, got {got}")]
    TooFewObservations { needed: usize, got: usize },

    #[error("factor Gram matrix XX' is singular (reciprocal condition {rcond:.3e})")]
    SingularFactorGram { rcond: f64 },

    #[error("factor covariance is singular (reciprocal condition {rcond:.3e})")]
    SingularFactorCov { rcond: f64 },

    #[error("matrix is singular (reciprocal condition {rcond:.3e})")]
    SingularMatrix { rcond: f64 },

    #[error("residual variance of asset {index} is {value:.3e}, at or below the floor")]
    ZeroResidualVariance { index: usize, value: f64 },

    #[error("{what} is not positive definite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPositiveDefinite { what: String, min_eigenvalue: f64 },

    #[error("covariance is not positive semidefinite (smallest eigenvalue {min_eigenvalue:.3e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("matrix is not symmetric (max asymmetry {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    #[error("efficient frontier is degenerate: varphi*phi - psi^2 = {determinant:.3e}")]
    DegenerateFrontier { determinant: f64 },

    #[error("1' Sigma^-1 1 = {varphi:.3e} is not positive")]
    DegenerateInverse { varphi: f64 },

    #[error("portfolio holds a short position in asset {index} (weight {weight:.3e})")]
    ShortPosition { index: usize, weight: f64 },

    #[error("fourth moment ({0}, {1}, {2}, {3}) is not available")]
    MissingMoment(usize, usize, usize, usize),

    #[error("calibration did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("invalid calibration target: {0}")]
    InvalidTarget(String),

    #[error("rejection sampler stalled: acceptance probability {acceptance:.3e}")]
    RejectionStall { acceptance: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("missing column {0:?}")]
    MissingColumn(String),

    #[error("no common dates between factor and return tables")]
    EmptyIntersection,
}

/// Broad failure classes used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numerical,
}

impl ErrorClass {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorClass::Usage => 1,
            ErrorClass::Data => 2,
            ErrorClass::Numerical => 3,
        }
    }
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            InvalidConfig(_) | InvalidTarget(_) => ErrorClass::Usage,
            DimensionMismatch(_)
            | TooFewObservations { .. }
            | NonFinite(_)
            | Io { .. }
            | Parse { .. }
            | MissingColumn(_)
            | EmptyIntersection => ErrorClass::Data,
            SingularFactorGram { .. }
            | SingularFactorCov { .. }
            | SingularMatrix { .. }
            | ZeroResidualVariance { .. }
            | NotPositiveDefinite { .. }
            | NotPsd { .. }
            | NotSymmetric { .. }
            | DegenerateFrontier { .. }
            | DegenerateInverse { .. }
            | ShortPosition { .. }
            | MissingMoment(..)
            | NoConvergence { .. }
            | RejectionStall { .. } => ErrorClass::Numerical,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
