use chrono::NaiveDate;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input series is empty")]
    EmptyInput,
    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("division by zero: previous price is 0 at index {index}")]
    DivisionByZero { index: usize },
    #[error("degenerate series: {0} has zero variance")]
    DegenerateSeries(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("design matrix is rank deficient")]
    SingularDesign,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid series {market_id}: {reason}")]
    InvalidSeries { market_id: String, reason: String },
    #[error("no valid Granger direction for {a} / {b}: {source}")]
    NoValidDirection {
        a: String,
        b: String,
        #[source]
        source: Box<Error>,
    },
    #[error("need at least 2 valid markets, got {0}")]
    InsufficientUniverse(usize),
    #[error("incomplete metadata for market {0}")]
    IncompleteMetadata(String),
    #[error("malformed response: {0}")]
    MalformedResponse(String),
    #[error("response violates verdict schema: {0}")]
    SchemaViolation(String),
    #[error("scoring failed for {leader} -> {follower}: {reason}")]
    ScoringFailed {
        leader: String,
        follower: String,
        reason: String,
    },
    #[error("no verdict for candidate {leader} -> {follower}")]
    MissingVerdict { leader: String, follower: String },
    #[error("unknown market: {0}")]
    UnknownMarket(String),
    #[error("data range {start}..={end} too short for a single train/test window")]
    NoWindows { start: NaiveDate, end: NaiveDate },
    #[error("schema error at line {line}: {message}")]
    SchemaError { line: u64, message: String },
    #[error("duplicate row at line {line}: {key}")]
    DuplicateRow { line: u64, key: String },
    #[error("value out of range at line {line}: {message}")]
    RangeError { line: u64, message: String },
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
