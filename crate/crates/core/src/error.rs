use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A caller broke an operation's precondition (empty input, wrong dimension, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    /// A query point fell outside the domain of a tree.
    #[error("point {point:?} lies outside the root cell [{lo:?}, {hi:?}]")]
    OutOfBounds {
        point: Vec<f64>,
        lo: Vec<f64>,
        hi: Vec<f64>,
    },

    /// Malformed PLR1 byte stream.
    #[error("format error at byte {offset}: {message}")]
    Format { offset: usize, message: String },

    /// An oracle or roadmap could not be constructed.
    #[error("construction failed: {0}")]
    Construction(String),

    /// Invalid environment or problem data.
    #[error("invalid input: {0}")]
    Input(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
