use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("turn {requested} is out of range for a dialogue with {turns} turns")]
    TurnOutOfRange { requested: usize, turns: usize },

    #[error("sentence {0} not found in context")]
    SentenceNotFound(usize),

    #[error("continuation has no scorable tokens")]
    InvalidContinuation,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("scorer backend error{}: {message}", status.map(|s| format!(" (HTTP {s})")).unwrap_or_default())]
    Backend { status: Option<u16>, message: String },

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("no teacher sentence available as evidence")]
    NoEvidence,

    #[error("corpus error at {location}: {message}")]
    Corpus { location: String, message: String },

    #[error("kappa is undefined: expected agreement is 1 but the raters disagree")]
    UndefinedKappa,

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    pub(crate) fn corpus(location: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Corpus { location: location.into(), message: message.into() }
    }
}
