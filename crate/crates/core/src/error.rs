use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{what} at index {index:?} is not a probability distribution (sum = {sum})")]
    NonStochasticRow {
        what: &'static str,
        index: Vec<usize>,
        sum: f64,
    },

    #[error("discount factor must lie in [0, 1), got {0}")]
    InvalidDiscount(f64),

    #[error("{what} index {index} out of range (limit {limit})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("shape mismatch: expected {expected} entries, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("singular evaluation system for type pair ({0}, {1})")]
    SingularSystem(usize, usize),

    #[error("CVaR level must lie in (0, 1], got {0}")]
    InvalidAlpha(f64),

    #[error("objective became non-finite after {iterations} iterations")]
    NonFiniteObjective { iterations: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("pareto points mix objective spaces `{0}` and `{1}`")]
    MixedObjectiveSpace(String, String),

    #[error("unsupported format version `{0}`")]
    UnsupportedVersion(String),

    #[error("missing column `{0}`")]
    MissingColumn(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(err: std::io::Error) -> Self {
        Error::Io(err.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(err: csv::Error) -> Self {
        match err.kind() {
            csv::ErrorKind::Io(_) => Error::Io(err.to_string()),
            _ => Error::Parse(err.to_string()),
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(err: serde_json::Error) -> Self {
        if err.is_io() {
            Error::Io(err.to_string())
        } else {
            Error::Parse(err.to_string())
        }
    }
}
