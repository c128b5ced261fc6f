use thiserror::Error;

/// Everything that can go wrong inside the library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error(
        "Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})"
    )]
    ConvergenceFailure { sweeps: usize, off_norm: f64 },

    #[error("matrix is singular (pivot magnitude {0:e})")]
    Singular(f64),

    #[error("operation is not trace preserving (deviation {0:e})")]
    NotTracePreserving(f64),

    #[error("negative time {0}")]
    NegativeTime(f64),

    #[error("time step {dt} is coarser than the kernel allows (limit {limit})")]
    GridTooCoarse { dt: f64, limit: f64 },

    #[error("|G| = {0} exceeds 1; the map would not be completely positive")]
    UnphysicalG(f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("malformed input: {0}")]
    Parse(String),

    #[error("internal invariant violated: {0}")]
    InvariantViolation(String),
}

impl Error {
    /// True for failures of the numerics on valid input, as opposed to
    /// rejected input or broken invariants.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::ConvergenceFailure { .. } | Error::Singular(_) | Error::UnphysicalG(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
