use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid config: {0}")]
    ConfigParse(#[from] serde_json::Error),

    #[error("config has {} violation(s): {}", .0.len(), .0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; "))]
    InvalidConfig(Vec<crate::model::Violation>),

    #[error("trace line {line}: {message}")]
    TraceParse { line: u64, message: String },

    #[error("trace is empty")]
    EmptyTrace,

    #[error("power {power} W outside the profile range [{min}, {max}] W")]
    PowerOutOfRange { power: f64, min: f64, max: f64 },

    #[error("host {host} reported negative power {power} W")]
    NegativePower { host: String, power: f64 },

    #[error("interval length must be positive, got {0} s")]
    NonPositiveInterval(f64),

    #[error("{0} requires a non-empty input")]
    EmptyInput(&'static str),

    #[error("{0}")]
    InvalidArgument(String),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
