//! Crate-wide error type with stable, machine-readable categories.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
#[non_exhaustive]
pub enum Error {
    /// The term count for the requested (d, r) does not fit in `usize`.
    #[error("term count for d={d}, r={r} overflows the count type")]
    ArithmeticOverflow { d: usize, r: usize },

    #[error("{context}: expected {expected}, got {actual}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// A computation produced (or received) a non-finite value.
    #[error("non-finite value in {context} at row {row}, column {col}")]
    NumericOverflow {
        context: &'static str,
        row: usize,
        col: usize,
    },

    #[error("column {index} has zero variance; cannot standardize a constant column")]
    DegenerateColumn { index: usize },

    #[error("q = {q} is within 1e-6 of 1; the stretch exponent 1/(q-1) is singular")]
    SingularExponent { q: f64 },

    /// Entry outside the allowed domain of an elementwise power.
    #[error(
        "entry ({row}, {col}) = {value} is outside the domain of elementwise power {exponent}; \
         fractional exponents require non-negative entries and negative exponents require \
         nonzero entries (see the first-quadrant transform)"
    )]
    PowerDomain {
        row: usize,
        col: usize,
        value: f64,
        exponent: f64,
    },

    /// Domain error in one of the shrinkage-space measures.
    #[error("measure domain error: {detail}")]
    MeasureDomain { detail: String },

    /// The linear system is singular or too ill-conditioned to solve reliably.
    #[error(
        "system matrix is singular or near-singular (condition estimate {condition:.3e}); \
         consider a regularization weight lambda > 0"
    )]
    SingularSystem { condition: f64 },

    #[error("invalid argument: {detail}")]
    InvalidArgument { detail: String },

    #[error("{path}: parse error at data row {row}, column {column}: {detail}")]
    Parse {
        path: String,
        row: usize,
        column: String,
        detail: String,
    },

    #[error("{path}: required column {name:?} not found in header")]
    MissingColumn { path: String, name: String },

    #[error("dataset has no train/test split flags")]
    MissingSplit,

    #[error("empty input: {context}")]
    EmptyData { context: &'static str },

    /// Loaded data does not match the documented source content.
    #[error("data integrity check failed: {detail}")]
    DataIntegrity { detail: String },

    #[error("model document error: {detail}")]
    ModelFormat { detail: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable category string for machine-readable diagnostics.
    pub fn category(&self) -> &'static str {
        match self {
            Error::ArithmeticOverflow { .. } => "arithmetic-overflow",
            Error::DimensionMismatch { .. } => "dimension-mismatch",
            Error::NumericOverflow { .. } => "numeric-overflow",
            Error::DegenerateColumn { .. } => "degenerate-column",
            Error::SingularExponent { .. } => "singular-exponent",
            Error::PowerDomain { .. } | Error::MeasureDomain { .. } => "domain-error",
            Error::SingularSystem { .. } => "singular-system",
            Error::InvalidArgument { .. } => "invalid-argument",
            Error::Parse { .. } => "parse-error",
            Error::MissingColumn { .. } => "missing-column",
            Error::MissingSplit => "missing-split",
            Error::EmptyData { .. } => "empty-data",
            Error::DataIntegrity { .. } => "data-integrity",
            Error::ModelFormat { .. } => "model-format",
            Error::Io(_) => "io-error",
        }
    }
}
