use std::path::PathBuf;

use thiserror::Error;

use crate::trainer::TrainingLog;

/// Errors raised while reading, validating or encoding tabular data.
#[derive(Debug, Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("header does not match schema (missing: [{}], unexpected: [{}])", missing.join(", "), unexpected.join(", "))]
    HeaderMismatch {
        missing: Vec<String>,
        unexpected: Vec<String>,
    },
    #[error("line {line}: expected {expected} cells, found {found}")]
    CellCount {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("invalid schema: {0}")]
    Schema(String),
    #[error("column `{column}`, row {row}: unknown token `{token}`")]
    UnknownToken {
        column: String,
        row: usize,
        token: String,
    },
    #[error("column `{column}`, row {row}: `{token}` is not a number")]
    NotNumeric {
        column: String,
        row: usize,
        token: String,
    },
    #[error("column `{column}`: unseen category `{token}`")]
    UnseenCategory { column: String, token: String },
    #[error("record has a missing value in column `{column}`")]
    MissingValue { column: String },
    #[error("record has {found} cells, schema expects {expected}")]
    Arity { expected: usize, found: usize },
    #[error("cannot split {0} instances: at least 3 are required")]
    TooFewInstances(usize),
    #[error("assignment has {assignment} entries for {rows} rows")]
    AssignmentLength { assignment: usize, rows: usize },
}

/// Errors raised by the numerical core (network, loss, evaluation).
#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("targets contain a single class")]
    SingleClass,
    #[error("targets are constant; normalized squared error is undefined")]
    ConstantTargets,
    #[error("empty input")]
    Empty,
    #[error("linear solve failed: {0}")]
    Solve(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Errors raised while training a network.
#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("training subset is empty")]
    EmptyTraining,
    #[error("training subset contains a single class")]
    SingleClass,
    #[error("training diverged at iteration {iteration}: non-finite loss")]
    Diverged {
        iteration: usize,
        log: Box<TrainingLog>,
    },
    #[error(transparent)]
    Numeric(#[from] NumericError),
    #[error("order {order}, trial {trial}: {source}")]
    Candidate {
        order: usize,
        trial: usize,
        #[source]
        source: Box<TrainError>,
    },
}

/// Errors raised while saving or loading model bundles.
#[derive(Debug, Error)]
pub enum ModelIoError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed model file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unsupported model format_version {found} (this build reads {supported})")]
    Version { found: i64, supported: i64 },
    #[error("model file has no format_version key")]
    MissingVersion,
    #[error("weight vector has {found} entries, architecture requires {expected}")]
    WeightCount { expected: usize, found: usize },
    #[error("weight `{0}` is not a valid number")]
    BadWeight(String),
    #[error("inconsistent bundle: {0}")]
    Inconsistent(String),
}
