use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid alphabet: {0}")]
    Alphabet(String),

    #[error("invalid probabilities: {0}")]
    Probabilities(String),

    #[error("symbol {0:?} is not in the alphabet")]
    UnknownSymbol(char),

    #[error("alphabet mismatch: pattern uses {pattern} symbols, distribution has {dist}")]
    AlphabetMismatch { pattern: usize, dist: usize },

    #[error("pattern must be non-empty")]
    EmptyPattern,

    #[error("text length n = {n} is shorter than pattern length m = {m}")]
    TextTooShort { n: usize, m: usize },

    #[error("index out of range: {0}")]
    OutOfRange(String),

    #[error("instance too large: {what} = {size} exceeds the limit {limit}")]
    TooLarge {
        what: &'static str,
        size: String,
        limit: String,
    },

    #[error("cancellation failure in {0}; rerun with exact arithmetic")]
    Cancellation(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
