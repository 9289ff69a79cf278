use thiserror::Error;

/// Errors produced anywhere in the simulator and analysis pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("schedule row {row}: {msg}")]
    ScheduleRow { row: usize, msg: String },

    #[error("invalid schedule: {0}")]
    Schedule(String),

    #[error("value {value} outside [{lo}, {hi}] for {what}")]
    OutOfRange {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("ring of {n} spins is too large for the {backend} backend (limit {limit})")]
    TooLarge {
        backend: &'static str,
        n: usize,
        limit: usize,
    },

    #[error("norm drift {drift:e} exceeds tolerance {tolerance:e}")]
    NormDrift { drift: f64, tolerance: f64 },

    #[error("point {index} (s = {s}): {source}")]
    Point {
        index: usize,
        s: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("graph line {line}: {msg}")]
    GraphLine { line: usize, msg: String },

    #[error("archive: {0}")]
    Archive(String),

    #[error("config: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
