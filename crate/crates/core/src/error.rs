use thiserror::Error;

/// Errors produced by the finent library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("not Hermitian: entries ({row}, {col}) and ({col}, {row}) mismatch by {mismatch:e}")]
    NotHermitian { row: usize, col: usize, mismatch: f64 },

    #[error("not positive semidefinite: minimum eigenvalue {min_eigenvalue:e}")]
    NotPositive { min_eigenvalue: f64 },

    #[error("trace {trace:e} outside (0, 1]")]
    InvalidTrace { trace: f64 },

    #[error("vector norm {norm:e} is invalid here: {reason}")]
    InvalidNorm { norm: f64, reason: &'static str },

    #[error("invalid mode dimensions: {0}")]
    InvalidDims(String),

    #[error("invalid mode subset: {0}")]
    InvalidModes(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("no partial-transpose eigenvalue below -{tol:e} (minimum is {min_eigenvalue:e}); no witness to extract")]
    NoWitness { min_eigenvalue: f64, tol: f64 },

    #[error("witness cannot be lifted soundly: {0}")]
    UnsoundLift(String),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("escalation failed at d={d} ({stage}): {source}")]
    Escalation {
        d: usize,
        stage: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
