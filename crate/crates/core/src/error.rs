use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("signature must have at least one chip")]
    EmptySignature,

    #[error("signature set must contain at least one signature")]
    EmptySet,

    #[error("chip {value} at position {index} is not +1 or -1")]
    Alphabet { index: usize, value: i64 },

    #[error("dimension mismatch: expected length {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("hadamard order {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("malformed set file at line {line}: {reason}")]
    Malformed { line: usize, reason: String },

    #[error("I/O error on {}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("matrix is numerically singular: pivot {pivot:e} at row {row} after regularization")]
    SingularMatrix { row: usize, pivot: f64 },

    #[error("eigensolver did not converge after {sweeps} sweeps (best residual {residual:e})")]
    EigenFailure { sweeps: usize, residual: f64 },

    #[error("binary TSC bound requires K >= L, got K={k}, L={l}")]
    Underloaded { k: usize, l: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid bound table: {0}")]
    BoundTable(String),

    #[error("sphere of squared radius {radius} contains no candidate")]
    EmptySphere { radius: f64 },

    #[error("exhaustive search over L={l} exceeds the cap of {cap}")]
    CapExceeded { l: usize, cap: usize },

    #[error("internal consistency failure: {0}")]
    Inconsistent(String),

    #[error("report serialization failed: {0}")]
    Report(String),
}

impl Error {
    /// True for failures that indicate a broken invariant inside the library
    /// rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(
            self,
            Error::EmptySphere { .. } | Error::Inconsistent(_) | Error::EigenFailure { .. }
        )
    }
}
