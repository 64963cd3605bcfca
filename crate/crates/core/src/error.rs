use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("covariance matrices differ by {max_abs_diff:e}; models are not comparable")]
    CovarianceMismatch { max_abs_diff: f64 },

    #[error("covariance is not symmetric positive definite")]
    NotPositiveDefinite,

    #[error("no samples to fit")]
    EmptySample,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("probability {0} is outside (0, 1)")]
    ProbabilityOutOfRange(f64),

    #[error("budget {f} exceeds the {n1} available p1 samples")]
    BudgetTooLarge { f: usize, n1: usize },

    #[error("index {index} out of range for a partition of {len} rows")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("bracket search failed after {iterations} iterations: {reason}")]
    BracketFailure { iterations: usize, reason: String },

    #[error("singular covariance: {0}")]
    SingularCovariance(String),

    #[error("neighbour count k = {k} out of range (need 1 <= k <= {max})")]
    NeighborCountOutOfRange { k: usize, max: usize },

    #[error("training set contains a single class ({0})")]
    SingleClass(usize),

    #[error("non-finite feature at row {row}, column {col}")]
    NonFiniteFeature { row: usize, col: usize },

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("unknown group tag `{tag}` at row {row}")]
    UnknownGroup { tag: String, row: String },

    #[error("vocabulary is empty after pruning")]
    EmptyVocabulary,

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("unknown scoring rule `{0}`")]
    UnknownRule(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("result has no cell at budget fraction {0}")]
    MissingCell(f64),

    #[error("divergence is infinite: {0}")]
    SupportViolation(String),

    /// The message carries the cause, so no separate source is exposed.
    #[error("{}: {cause}", path.display())]
    Io { path: PathBuf, cause: std::io::Error },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            cause: source,
        }
    }
}
