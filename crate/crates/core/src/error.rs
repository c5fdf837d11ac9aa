use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state dimension must be at least 2, got {0}")]
    DimensionTooSmall(usize),

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("zero vector cannot be normalized")]
    ZeroVector,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("matrix is not Hermitian (asymmetry {0:e})")]
    NotHermitian(f64),

    #[error("Hadamard power must be at least 1, got {0}")]
    InvalidPower(u32),

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("matrix is indefinite (min eigenvalue {0:e})")]
    Indefinite(f64),

    #[error(
        "allocation shape mismatch: expected {expected_rows}x{expected_cols}, found {rows}x{cols}"
    )]
    ShapeMismatch {
        expected_rows: usize,
        expected_cols: usize,
        rows: usize,
        cols: usize,
    },

    #[error("invalid probability allocation: {0}")]
    InvalidAllocation(String),

    #[error("state set is linearly dependent (min Gram eigenvalue {0:e})")]
    DependentSet(f64),

    #[error("allocation is infeasible (residual min eigenvalue {0:e})")]
    Infeasible(f64),

    #[error("composite dimension overflows usize")]
    DimensionOverflow,

    #[error("machine carries no explicit unitary (composite dimension {0} exceeds the cap)")]
    MissingUnitary(usize),

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    /// True for failures of the numerical routines themselves rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NoConvergence { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
