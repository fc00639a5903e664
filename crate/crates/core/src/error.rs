use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// Every particle of a conditioned ensemble was killed.
    #[error("ensemble extinct at time {time}: all particles killed, increase n or shorten the horizon")]
    Extinct { time: f64 },

    #[error(
        "mass extinction at dt resolution: all {n} particles killed in the step ending at {time}; use a smaller dt"
    )]
    MassExtinction { n: usize, time: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("replica {replica} (seed {seed}) failed: {source}")]
    Replica {
        replica: u64,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("missing files in {dir}: {missing:?}")]
    MissingFiles { dir: PathBuf, missing: Vec<String> },

    #[error("malformed output {file}: {message}")]
    Malformed { file: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
