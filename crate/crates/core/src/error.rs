use thiserror::Error;

/// Errors raised across the library.
///
/// Variants are grouped so callers (the CLI in particular) can map them onto
/// exit codes: schema/input problems versus numerical failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error("invalid specification: {0}")]
    InvalidSpec(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("empty conditioning cell: {0}")]
    EmptyCell(String),

    #[error("positivity violated: {0}")]
    Positivity(String),

    #[error("numerical failure: {message} (condition estimate {condition:e})")]
    Numerical { message: String, condition: f64 },

    #[error("generator failed after {retries} retries: {reason}")]
    GeneratorExhausted { retries: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn schema(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Schema {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for failures caused by malformed or inconsistent inputs rather
    /// than by the numerics.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Numerical { .. } | Error::GeneratorExhausted { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
