//! Error type shared across the library.

use thiserror::Error;

/// Errors produced by corpus handling, featurisation, model fitting and
/// evaluation.
#[derive(Debug, Error)]
pub enum Error {
    /// A row in an input file is missing a required column or cannot be
    /// parsed into the record schema at all.
    #[error("row {row}: {message}")]
    Schema { row: usize, message: String },

    /// A row parsed structurally but holds an out-of-range or malformed
    /// value in one field.
    #[error("row {row}, field `{field}`: {message}")]
    Value {
        row: usize,
        field: &'static str,
        message: String,
    },

    /// A citation normalisation lookup hit a (field, year) cell that the
    /// supplied statistics were never computed for.
    #[error("no field-year statistics for field `{field_id}`, year {year}")]
    MissingCell { field_id: String, year: i32 },

    /// An operation that needs at least one element received none.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    /// A configuration value or generator specification is invalid.
    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    /// Chi-square association needs at least two distinct classes.
    #[error("chi-square needs at least two distinct classes")]
    SingleClass,

    /// An ordinal component task collapsed to a single class and cannot be
    /// fitted.
    #[error("binary task `{0}` contains a single class")]
    DegenerateTask(String),

    /// A model was asked to score a matrix whose width differs from the one
    /// it was fitted on.
    #[error("feature count mismatch: model expects {expected}, matrix has {actual}")]
    ColumnMismatch { expected: usize, actual: usize },

    /// A train/test split lost an entire class even after one resample.
    #[error("iteration {iteration}: class {class} missing from training split after resampling")]
    DegenerateSplit { iteration: usize, class: u8 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
