//! Crate-wide error type.

use chrono::NaiveDate;
use thiserror::Error;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed container: mismatched lengths, empty inputs, duplicate dates.
    #[error("structural error: {0}")]
    Structural(String),

    /// Argument outside the documented domain (negative rate, bad level, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A mandatory CSV column is absent.
    #[error("{schema} file is missing mandatory column `{column}`")]
    Schema { schema: String, column: String },

    /// A CSV data row failed to parse.
    #[error("row {row}: {detail}")]
    Row { row: usize, detail: String },

    /// Series that must share dates do not.
    #[error("series misaligned: {0}")]
    Alignment(String),

    /// Assembly produced an impossible compartment value.
    #[error("inconsistent data for `{unit_id}` on {date}: {detail}")]
    Consistency {
        unit_id: String,
        date: NaiveDate,
        detail: String,
    },

    /// A date gap that the active repair policy does not fix.
    #[error("date gap in `{unit_id}` after {date}")]
    DateGap { unit_id: String, date: NaiveDate },

    /// Not enough observations for the requested operation.
    #[error("insufficient data for {what}: need {needed}, have {got}")]
    InsufficientData {
        what: String,
        needed: usize,
        got: usize,
    },

    /// Weighted correlation has no defined value (zero variance).
    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(String),

    /// A metric has no eligible rows.
    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    /// Moment statistics requested on a degenerate sample.
    #[error("insufficient variation: {0}")]
    InsufficientVariation(String),

    /// A unit id does not resolve against the dataset.
    #[error("unknown unit `{0}`")]
    UnknownUnit(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Shorthand for [`Error::InsufficientData`].
    pub fn insufficient(what: impl Into<String>, needed: usize, got: usize) -> Self {
        Error::InsufficientData {
            what: what.into(),
            needed,
            got,
        }
    }
}
