use thiserror::Error;

/// Errors raised by the analysis operations.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {dim} exceeds the {what} cap of {cap}")]
    DimensionTooLarge {
        dim: usize,
        cap: usize,
        what: &'static str,
    },

    #[error("dimension must be at least 1")]
    ZeroDimension,

    #[error("truth table has {found} rows, expected {expected}")]
    TableSize { expected: usize, found: usize },

    #[error("state set must be nonempty")]
    EmptySet,

    #[error("schedule is not progressive: {}", describe_missing(.missing))]
    NotProgressive { missing: Vec<usize> },

    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),

    #[error("target set is not achievable from {from}")]
    NotAchievable { from: String },

    #[error("invalid oracle bounds: {0}")]
    InvalidBounds(String),

    #[error("enumeration of fair strongly connected subsets exceeded {limit} results")]
    EnumerationLimit { limit: usize },
}

fn describe_missing(missing: &[usize]) -> String {
    let parts: Vec<String> = missing
        .iter()
        .map(|i| format!("coordinate {i} never fires"))
        .collect();
    parts.join(", ")
}

pub type Result<T> = std::result::Result<T, Error>;
