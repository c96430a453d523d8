use thiserror::Error;

/// Errors raised by the library. Solver failures carry their own type, see
/// [`crate::rdf::SolveError`].
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix has no rows")]
    EmptyMatrix,

    #[error("matrix is not square: row {row} has {len} entries, expected {expected}")]
    NotSquare { row: usize, len: usize, expected: usize },

    #[error("matrix entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },

    #[error("matrix is not symmetric at ({row}, {col}): {upper} vs {lower}")]
    NotSymmetric {
        row: usize,
        col: usize,
        upper: f64,
        lower: f64,
    },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("2TC covariance is not positive definite: (n-2)*rho0 + 1 - (n-1)*rho1^2 = {margin:.6e} <= 0")]
    TwoTypeNotPositiveDefinite { margin: f64 },

    #[error("{what} is not positive definite")]
    NotPositiveDefinite { what: &'static str },

    #[error("{what} is indefinite (smallest eigenvalue {min_eigenvalue:.6e})")]
    Indefinite { what: &'static str, min_eigenvalue: f64 },

    #[error("{what} is singular")]
    Singular { what: &'static str },

    #[error("singular shift at component {index}: 1 - gamma - rho0 = {value:.3e}")]
    SingularShift { index: usize, value: f64 },

    #[error("pole in chi sum: 1 - rho0 - e = {value:.3e} at sorted position {position}")]
    ChiPole { position: usize, value: f64 },

    #[error("semidefinite condition violated ({condition})")]
    SdcViolated { condition: String },

    #[error("negative radicand {value:.6e}: rho0 lies beyond the SDC region")]
    NegativeRadicand { value: f64 },

    #[error("{0}")]
    Fit(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
