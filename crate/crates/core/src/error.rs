use thiserror::Error;

/// Errors raised by the giant-atom toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid step: {0}")]
    InvalidStep(String),

    #[error("singularity: {0}")]
    Singularity(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("frequency window too narrow: span {span_hz:.6e} Hz, need at least {required_hz:.6e} Hz")]
    WindowTooNarrow { span_hz: f64, required_hz: f64 },

    #[error("ill-conditioned problem: {0}")]
    IllConditioned(String),

    #[error("at grid point (row {row}, col {col}): {source}")]
    AtGridPoint {
        row: usize,
        col: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// True for errors originating in numerics rather than I/O or user input.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Singularity(_)
            | Error::Domain(_)
            | Error::InvalidStep(_)
            | Error::IllConditioned(_)
            | Error::WindowTooNarrow { .. } => true,
            Error::AtGridPoint { source, .. } => source.is_numerical(),
            _ => false,
        }
    }

    pub fn is_io(&self) -> bool {
        match self {
            Error::Io { .. } => true,
            Error::AtGridPoint { source, .. } => source.is_io(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
