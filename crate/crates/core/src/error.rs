//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty sequence")]
    EmptySequence,

    #[error("invalid sample: {0}")]
    InvalidSample(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("needs two points")]
    NeedsTwoPoints,

    #[error("oracle size limit: n={n} exceeds {max}")]
    OracleSizeLimit { n: usize, max: usize },

    #[error("criterion undefined at this complexity: p={p}, n={n}")]
    CriterionUndefined { p: usize, n: usize },

    #[error("criterion degenerate on grid")]
    DegenerateCriterion,

    #[error("no cap: this stopping rule requires a max-iteration cap")]
    NoCap,

    #[error("invalid stopping policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid outside trace: iteration {k} not in the available 1..={available}")]
    GridOutsideTrace { k: usize, available: usize },

    #[error("missing column: {0}")]
    MissingColumn(&'static str),

    #[error("non-numeric cell at row {row}, column {column}")]
    NonNumericCell { row: usize, column: String },

    #[error("non-positive weight at row {row}")]
    NonPositiveWeight { row: usize },

    #[error("zero rows")]
    ZeroRows,

    #[error("duplicate abscissa x={0} rejected by strict tie policy")]
    DuplicateAbscissa(f64),

    #[error("invalid signal spec: {0}")]
    InvalidSignalSpec(String),

    #[error("invalid decomposition: {0}")]
    InvalidDecomposition(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}
