use std::path::PathBuf;

use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// Variants are grouped into three classes (usage, data, numeric) which the
/// command line maps onto exit codes 1, 2 and 3.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid UTF-8 in corpus at byte offset {offset}")]
    Ingest { offset: usize },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("requested {requested} distinct trigrams but only {available} are available")]
    NotEnoughTrigrams { requested: usize, available: usize },

    #[error("need {needed} eligible words for the pair sample but only {eligible} are eligible")]
    NotEnoughEligibleWords { needed: usize, eligible: usize },

    #[error("context dimensionality {r} exceeds vocabulary size {vocab}")]
    ContextTooWide { r: usize, vocab: usize },

    #[error("word `{0}` is not in the vocabulary")]
    UnknownWord(String),

    #[error("word `{0}` is not the central word of any trigram in the sample")]
    MissingClass(String),

    #[error("matrix is in state {found}, expected {expected}")]
    WrongState { expected: &'static str, found: &'static str },

    #[error("rank {k} out of range 1..={max}")]
    RankOutOfRange { k: usize, max: usize },

    #[error("matrix contains a non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("row {row} has norm {norm}, expected unit length")]
    NotNormalized { row: usize, norm: f64 },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },

    #[error("both classes must be non-empty")]
    EmptyClass,

    #[error("histogram binning differs between summaries")]
    BinningMismatch,

    #[error("subset cap {0} exceeds the maximum of 3")]
    SubsetCapTooLarge(usize),

    #[error("{path}: bad magic")]
    BadMagic { path: PathBuf },

    #[error("{path}: unsupported version {found}")]
    VersionMismatch { path: PathBuf, found: u32 },

    #[error("{path}: length mismatch: header implies {expected} payload bytes, found {found}")]
    LengthMismatch { path: PathBuf, expected: u64, found: u64 },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}: content does not match the recorded digest")]
    DigestMismatch { path: PathBuf },
}

/// Error class, used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Usage,
    Data,
    Numeric,
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            RankOutOfRange { .. } | SubsetCapTooLarge(_) | ContextTooWide { .. } | Config(_) => {
                ErrorClass::Usage
            }
            NonFinite { .. } | NotNormalized { .. } => ErrorClass::Numeric,
            _ => ErrorClass::Data,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self.class() {
            ErrorClass::Usage => 1,
            ErrorClass::Data => 2,
            ErrorClass::Numeric => 3,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
