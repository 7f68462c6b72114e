use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("example weights are all zero")]
    ZeroWeights,

    #[error("value {value} out of range in {context}")]
    OutOfRange { context: String, value: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("missing input: {0}")]
    Missing(String),

    #[error("undefined conditional: {0}")]
    Undefined(String),

    #[error("no defined (attribute, task) pairs remain for {0}")]
    NoDefinedPairs(String),

    #[error("degraded estimate: {dropped} of {total} bootstrap replicates were undefined")]
    DegradedEstimate { dropped: usize, total: usize },

    #[error("{location}: {message}")]
    Parse { location: String, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    pub(crate) fn dims(what: impl Into<String>, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            what: what.into(),
            expected,
            found,
        }
    }

    /// True for errors caused by malformed or inconsistent inputs, as opposed
    /// to metrics that are undefined on otherwise valid data.
    pub fn is_input_error(&self) -> bool {
        !matches!(
            self,
            Error::Undefined(_) | Error::NoDefinedPairs(_) | Error::DegradedEstimate { .. }
        )
    }
}
