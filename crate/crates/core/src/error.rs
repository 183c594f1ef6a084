use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("missing or wrong header, expected `{expected}`")]
    MissingHeader { expected: &'static str },

    #[error("line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },

    #[error("duplicate record for grid {grid}, cell {cell}, beam {beam}")]
    DuplicateRecord { grid: u64, cell: u64, beam: u64 },

    #[error("no records to build an instance from")]
    EmptyInput,

    #[error("scaling maps rsrp {rsrp_dbm} dBm to negative value {scaled}")]
    NegativeScaled { rsrp_dbm: f64, scaled: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("unknown node {0}")]
    UnknownNode(usize),

    #[error("variable {0} is not registered")]
    UnregisteredVariable(usize),

    #[error("model too large: {0}")]
    TooLarge(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("zero denominator in efficiency ratio")]
    ZeroDenominator,

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
