use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("rejected input: {0}")]
    InvalidInput(String),

    #[error("non-positive price {price} at bar {index}")]
    NonPositivePrice { index: usize, price: f64 },

    #[error("duplicate timestamp {0}")]
    DuplicateTimestamp(i64),

    #[error("data quality: {missing} of {expected} grid slots missing")]
    DataQuality { missing: usize, expected: usize },

    #[error("empty output: {0}")]
    EmptyOutput(String),

    #[error("degenerate window: need at least {needed} intervals, got {got}")]
    DegenerateWindow { needed: usize, got: usize },

    #[error("insufficient data: need at least {needed} points, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),

    #[error("degenerate regression: {0}")]
    DegenerateRegression(String),

    #[error("fit domain: {0}")]
    FitDomain(String),

    #[error("fit failure: {0}")]
    FitFailure(String),

    #[error("not mean reverting: AR(1) coefficient {0}")]
    NotMeanReverting(f64),

    #[error("insufficient tail: {usable} usable points, need 10")]
    InsufficientTail { usable: usize },

    #[error("rejected spec: {0}")]
    RejectedSpec(String),

    #[error("internal invariant: {0}")]
    Invariant(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
