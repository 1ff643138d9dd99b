use thiserror::Error;

/// Errors raised by the numerical library and the command-line front end.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter is outside its documented domain.
    #[error("parameter error: {0}")]
    Parameter(String),

    /// An exponent field violates its admissibility class (e.g. p < 1).
    #[error("admissibility error: {0}")]
    Admissibility(String),

    /// Two grid functions or fields live on different grids.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A feature explicitly excluded from this library (e.g. q = infinity in mixed norms).
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// A theorem hypothesis required by the requested computation does not hold.
    #[error("hypothesis violation ({hypothesis}): {detail}")]
    Hypothesis { hypothesis: String, detail: String },

    /// A constructed object failed its own certification.
    #[error("construction error: {0}")]
    Construction(String),

    /// Malformed configuration or expression text.
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    /// Malformed data file.
    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
