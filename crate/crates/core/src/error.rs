use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("row {row}, column {column:?}: unknown attribute")]
    UnknownAttribute { row: usize, column: String },

    #[error("row {row}, column {column:?}: value {value:?} is not in the declared domain")]
    ValueOutOfDomain {
        row: usize,
        column: String,
        value: String,
    },

    #[error("schema: {0}")]
    Schema(String),

    #[error("unknown object id {0}")]
    UnknownObject(usize),

    #[error("unknown atom label {0:?}")]
    UnknownLabel(String),

    #[error("formal concept enumeration exceeded the cap of {cap} concepts")]
    ConceptOverflow { cap: usize },

    #[error("concept enumeration is limited to {limit} atoms, context has {atoms}")]
    TooManyAtoms { atoms: usize, limit: usize },

    #[error("contingency table is empty")]
    EmptyTable,

    #[error("rule probability is undefined (premise has zero measure)")]
    UndefinedEta,

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("the Fisher gate needs integer object counts; non-uniform weights are not supported")]
    FisherNeedsUniform,

    #[error("exact search refused: {atoms} atoms exceeds the limit of {limit}")]
    ExactSearchTooLarge { atoms: usize, limit: usize },

    #[error("search for conclusion {conclusion} visited more than {limit} premises; bound it with a beam width")]
    SearchBudgetExceeded { conclusion: String, limit: usize },

    #[error("invalid rule: {0}")]
    InvalidRule(String),

    #[error("duplicate rule {0}")]
    DuplicateRule(String),

    #[error("consistency climb did not reach a fixed point within {0} steps")]
    StepLimit(usize),

    #[error("consistency climb step {step} did not increase Int ({before} -> {after})")]
    NonIncreasingStep { step: usize, before: f64, after: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("oracle budget exceeded: {0}")]
    Budget(String),

    #[error("synthetic generator: {0}")]
    Generator(String),

    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("{path}: {cause}")]
    Io { path: PathBuf, cause: std::io::Error },

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, cause: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            cause,
        }
    }

    pub(crate) fn parse(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            message: message.into(),
        }
    }
}
