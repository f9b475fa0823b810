use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        row: usize,
        column: usize,
        message: String,
    },

    #[error("invalid JSON: {0}")]
    Json(String),

    #[error("duplicate record id {id:?} (row {row})")]
    DuplicateId { id: String, row: usize },

    #[error("no text fields found: {0}")]
    NoTextFields(String),

    #[error("unknown label {0:?}")]
    UnknownLabel(String),

    #[error("unknown category {0:?}")]
    UnknownCategory(String),

    #[error("unknown record id {0:?}")]
    UnknownRecord(String),

    #[error("label {label:?} belongs to category {expected:?}, not {found:?}")]
    WrongCategory {
        label: String,
        expected: String,
        found: String,
    },

    #[error("invalid schema: {0}")]
    Schema(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty input: {0}")]
    Empty(String),

    #[error("model file format version {found} is not supported (max {supported})")]
    VersionMismatch { found: u32, supported: u32 },

    #[error("corrupt model file: {0}")]
    Corrupt(String),

    #[error("record has no in-vocabulary tokens")]
    NoTokens,

    #[error("stale base version {found}: current version is {expected}")]
    StaleVersion { expected: u64, found: u64 },

    #[error("schema conflict: {0}")]
    SchemaConflict(String),

    #[error("unknown operation id {0}")]
    UnknownOp(u64),

    #[error("degenerate split: {0}")]
    DegenerateSplit(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable code, used by the HTTP layer.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::Json(_) => "invalid_json",
            Error::DuplicateId { .. } => "duplicate_id",
            Error::NoTextFields(_) => "no_text_fields",
            Error::UnknownLabel(_) => "unknown_label",
            Error::UnknownCategory(_) => "unknown_category",
            Error::UnknownRecord(_) => "unknown_record",
            Error::WrongCategory { .. } => "wrong_category",
            Error::Schema(_) => "invalid_schema",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::Empty(_) => "empty_input",
            Error::VersionMismatch { .. } => "version_mismatch",
            Error::Corrupt(_) => "corrupt_file",
            Error::NoTokens => "no_tokens",
            Error::StaleVersion { .. } => "stale_version",
            Error::SchemaConflict(_) => "schema_conflict",
            Error::UnknownOp(_) => "unknown_op",
            Error::DegenerateSplit(_) => "degenerate_split",
        }
    }
}
