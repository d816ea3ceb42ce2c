use std::path::PathBuf;

/// Errors produced anywhere in the lab.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Entry buffer does not match the declared shape.
    #[error("matrix shape {rows}x{cols} does not match {len} entries")]
    ShapeMismatch {
        rows: usize,
        cols: usize,
        len: usize,
    },

    /// A NaN or infinite entry was offered to a matrix constructor.
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    /// Operand dimensions are incompatible.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A pivot fell below the absolute pivot floor during elimination.
    #[error("degenerate pivot {magnitude:e} at elimination step {step}")]
    DegeneratePivot { step: usize, magnitude: f64 },

    /// The smallest singular value underflowed.
    #[error("matrix is singular to working precision")]
    SingularMatrix,

    /// The symmetric perturbation model was handed a non-symmetric center.
    #[error("matrix is not symmetric")]
    NotSymmetric,

    /// A bound was evaluated outside the hypotheses of its statement.
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),

    /// A bound was evaluated below the threshold where it is stated.
    #[error("outside the valid domain: {0}")]
    DomainViolated(String),

    /// A gallery constructor was asked for an impossible size.
    #[error("invalid dimension: {0}")]
    DimensionInvalid(String),

    #[error("invalid experiment configuration: {0}")]
    ConfigInvalid(String),

    #[error("base matrix unavailable: {0}")]
    BaseMatrixUnavailable(String),

    #[error("no samples")]
    EmptySamples,

    #[error("unknown lemma id `{0}`")]
    UnknownLemma(String),

    /// Malformed dense text matrix; `line` and `col` are 1-based.
    #[error("parse error at line {line}, column {col}: {msg}")]
    Parse {
        line: usize,
        col: usize,
        msg: String,
    },

    /// A data row had the wrong number of entries, or rows were missing.
    #[error("line {line}: expected {expected} entries, found {found}")]
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
