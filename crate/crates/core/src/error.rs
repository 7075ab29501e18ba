use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("input is empty after decoding")]
    EmptyInput,

    #[error("conditional clause is malformed: {0}")]
    MalformedClause(String),

    #[error("no vocabulary term survived filtering")]
    EmptyVocab,

    #[error("training data contains a single class")]
    SingleClass,

    #[error("feature vector fingerprint {found} does not match {expected}")]
    DimensionMismatch { expected: String, found: String },

    #[error("need at least {needed} examples per class, found {found}")]
    TooFewExamples { needed: usize, found: usize },

    #[error("model and vocabulary are incompatible: {0}")]
    ModelMismatch(String),

    #[error("sentence ({step}, {sentence}) is claimed by two non-nested decision blocks")]
    InconsistentBlocks { step: usize, sentence: usize },

    #[error("schema error at line {line}: {message}")]
    Schema { line: usize, message: String },

    #[error("record {record} ({doc}): node path {path:?} does not resolve to a list")]
    DanglingPath {
        record: usize,
        doc: String,
        path: Vec<usize>,
    },

    #[error("model file not found: {}", .0.display())]
    ModelNotFound(PathBuf),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("{}: {source}", path.display())]
    InFile {
        path: PathBuf,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Stable upper-case code used in CLI output and reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::EmptyInput => "EMPTY_INPUT",
            Error::MalformedClause(_) => "MALFORMED_CLAUSE",
            Error::EmptyVocab => "EMPTY_VOCAB",
            Error::SingleClass => "SINGLE_CLASS",
            Error::DimensionMismatch { .. } => "DIMENSION_MISMATCH",
            Error::TooFewExamples { .. } => "TOO_FEW_EXAMPLES",
            Error::ModelMismatch(_) => "MODEL_MISMATCH",
            Error::InconsistentBlocks { .. } => "INCONSISTENT_BLOCKS",
            Error::Schema { .. } => "SCHEMA_ERROR",
            Error::DanglingPath { .. } => "DANGLING_PATH",
            Error::ModelNotFound(_) => "MODEL_NOT_FOUND",
            Error::Config(_) => "CONFIG_ERROR",
            Error::Io { .. } => "IO_ERROR",
            Error::Json(_) => "JSON_ERROR",
            Error::InFile { source, .. } => source.code(),
        }
    }

    /// The error with any file provenance stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::InFile { source, .. } => source.root(),
            e => e,
        }
    }

    pub fn in_file(self, path: impl Into<PathBuf>) -> Self {
        Error::InFile {
            path: path.into(),
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
