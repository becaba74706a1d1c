//! HTTP service for live attribution sessions.
//!
//! Teacher messages are relayed to a chat backend, and any assistant reply can
//! then be attributed to the teacher sentence that supports it and explained.
//! Sessions live in an append-only JSONL log that is replayed on startup.

mod api;
mod config;
mod store;

use std::path::PathBuf;
use std::sync::Arc;

use attrib_core::chat::ChatKind;
use attrib_core::scoring::CachedScorer;

pub use api::{router, AppState};
pub use config::ServiceConfig;
pub use store::{Record, Session, SessionStore};

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] attrib_core::Error),

    #[error("session store {}: {source}", path.display())]
    Store {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("session store {} line {line}: {message}", path.display())]
    Corrupt { path: PathBuf, line: usize, message: String },

    #[error("listen on {addr}: {source}")]
    Bind {
        addr: String,
        #[source]
        source: std::io::Error,
    },
}

impl ServiceError {
    pub(crate) fn store(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ServiceError::Store { path: path.into(), source }
    }
}

/// Builds the application state described by `config`. Explanations go
/// through the chat backend only when it is a remote model; a scripted
/// backend cannot answer free-form prompts.
pub fn build_state(config: &ServiceConfig) -> Result<Arc<AppState>, ServiceError> {
    config.validate()?;
    let inner = config.scorer.build()?;
    let scorer = match &config.cache_path {
        Some(path) => CachedScorer::with_file(inner, path)?,
        None => CachedScorer::new(inner),
    };
    let chat = config.chat.build()?;
    let explainer = (config.chat.kind == ChatKind::Remote).then(|| Arc::clone(&chat));
    AppState::new(&config.store_path, scorer, chat, explainer)
}

/// Serves until ctrl-c.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let state = build_state(&config)?;
    let listener = tokio::net::TcpListener::bind(&config.listen)
        .await
        .map_err(|source| ServiceError::Bind { addr: config.listen.clone(), source })?;
    tracing::info!(listen = %config.listen, "serving");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|source| ServiceError::Bind { addr: config.listen, source })
}
