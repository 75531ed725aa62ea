//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("non-numeric cell at row {row}, column '{column}': {value:?}")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },

    #[error("response column '{0}' not found in header")]
    ResponseColumnMissing(String),

    #[error("invalid data: {0}")]
    InvalidData(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: &'static str,
    },

    #[error("column '{0}' is constant (zero scale)")]
    ConstantColumn(String),

    #[error("restriction matrix is rank deficient: {0}")]
    RankDeficient(String),

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("infeasible restriction: row {row} is supported entirely on pruned columns with rhs {rhs}")]
    InfeasibleRestriction { row: usize, rhs: f64 },

    #[error("degenerate response: X'y is identically zero")]
    DegenerateResponse,

    #[error("all grid points failed during cross-validation")]
    AllGridPointsFailed,

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}
