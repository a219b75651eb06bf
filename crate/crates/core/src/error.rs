use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("scatter matrix is not symmetric positive definite")]
    SingularScatter,

    #[error("all observations lie beyond the truncation point of the loss")]
    AllPointsRejected,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("empty data")]
    EmptyData,

    #[error("degenerate data: {0}")]
    Degenerate(String),

    #[error("non-finite value {value} encountered in {context}")]
    NonFinite { context: &'static str, value: f64 },

    #[error("no root found in [{lo}, {hi}] for {context}")]
    NoRoot { context: &'static str, lo: f64, hi: f64 },

    #[error("{context} did not converge after {iterations} iterations")]
    NotConverged { context: &'static str, iterations: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error("malformed input: {0}")]
    Parse(String),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
