use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("word {word} does not belong to the presentation: {reason}")]
    ForeignWord { word: String, reason: String },

    #[error("group element {word} has finite order; a cyclic subgroup of infinite order is required")]
    TorsionElement { word: String },

    #[error("{what}: {size} exceeds the configured cap of {cap}")]
    CapExceeded {
        what: &'static str,
        size: u128,
        cap: u128,
    },

    #[error("word {word} has length {length} which exceeds the radius budget {budget}")]
    BudgetExceeded {
        word: String,
        length: f64,
        budget: f64,
    },

    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid process: {0}")]
    InvalidProcess(String),

    #[error("observable table has no entry for pattern {0:?}")]
    MissingPattern(Vec<u8>),

    #[error("vertex {vertex} is not in the index set")]
    UnknownSite { vertex: usize },

    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("invalid config field `{field}`: {reason}")]
    InvalidConfig { field: String, reason: String },

    #[error("no path length qualifies: {0}")]
    NoFeasibleSchedule(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid_arg(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidArgument {
        name,
        reason: reason.into(),
    }
}
