use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A matrix failed one of the density-matrix invariants.
    #[error("invalid density matrix: {0}")]
    Validation(#[from] Violation),

    /// A computation produced a matrix that is not a valid density matrix.
    #[error("{stage} produced an invalid state: {violation}")]
    InvalidOutput { stage: String, violation: Violation },

    /// A numerical routine failed (eigensolver, non-finite output).
    #[error("numeric error: {0}")]
    Numeric(String),

    /// The requested combination is not implemented.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A serialized document could not be decoded.
    #[error("format error: {0}")]
    Format(String),
}

/// The invariant a candidate density matrix violated, with its magnitude.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Violation {
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("not Hermitian: max |m - m^dagger| = {deviation:e}")]
    NotHermitian { deviation: f64 },
    #[error("trace is {trace} (|Tr - 1| = {deviation:e})")]
    Trace { trace: f64, deviation: f64 },
    #[error("not positive semidefinite: minimum eigenvalue {min_eigenvalue:e}")]
    NotPositive { min_eigenvalue: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
