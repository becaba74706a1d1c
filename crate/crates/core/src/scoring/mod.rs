//! Conditional log-likelihood scoring, `log P(continuation | context)`.
//!
//! Attribution only ever talks to the [`Scorer`] trait. Three backends sit
//! behind it: the hermetic [`LexicalScorer`], the [`RemoteScorer`] speaking
//! the completions wire protocol, and the [`CachedScorer`] wrapper that
//! memoizes either of them.

mod cache;
mod lexical;
mod remote;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cache::{CacheTelemetry, CachedScorer};
pub use lexical::{lexical_score, tokenize, LexicalScorer};
pub use remote::{parse_completion_logprob, RemoteConfig, RemoteScorer};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ScoreRequest {
    pub context: String,
    pub continuation: String,
}

impl ScoreRequest {
    /// Empty contexts must already be normalized to the assistant cue.
    pub fn new(context: impl Into<String>, continuation: impl Into<String>) -> Result<Self> {
        let request = ScoreRequest { context: context.into(), continuation: continuation.into() };
        if request.context.is_empty() {
            return Err(Error::InvalidArgument("score request has an empty context".into()));
        }
        if request.continuation.is_empty() {
            return Err(Error::InvalidArgument("score request has an empty continuation".into()));
        }
        Ok(request)
    }
}

/// Total natural-log likelihood of a continuation, no length normalization.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogLikelihood(pub f64);

impl LogLikelihood {
    pub fn value(self) -> f64 {
        self.0
    }
}

pub trait Scorer: Send + Sync {
    fn logprob(&self, request: &ScoreRequest) -> Result<LogLikelihood>;
}

impl<S: Scorer + ?Sized> Scorer for &S {
    fn logprob(&self, request: &ScoreRequest) -> Result<LogLikelihood> {
        (**self).logprob(request)
    }
}

impl<S: Scorer + ?Sized> Scorer for Box<S> {
    fn logprob(&self, request: &ScoreRequest) -> Result<LogLikelihood> {
        (**self).logprob(request)
    }
}

impl<S: Scorer + ?Sized> Scorer for Arc<S> {
    fn logprob(&self, request: &ScoreRequest) -> Result<LogLikelihood> {
        (**self).logprob(request)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScorerKind {
    #[default]
    Lexical,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ScorerBackendConfig {
    pub kind: ScorerKind,
    pub endpoint_url: Option<String>,
    pub model_name: Option<String>,
    pub timeout_ms: u64,
    pub max_retries: u32,
    pub max_in_flight: usize,
}

impl Default for ScorerBackendConfig {
    fn default() -> Self {
        ScorerBackendConfig {
            kind: ScorerKind::Lexical,
            endpoint_url: None,
            model_name: None,
            timeout_ms: 30_000,
            max_retries: 3,
            max_in_flight: 8,
        }
    }
}

impl ScorerBackendConfig {
    pub fn validate(&self) -> Result<()> {
        if self.kind == ScorerKind::Remote {
            if self.endpoint_url.as_deref().is_none_or(str::is_empty) {
                return Err(Error::InvalidArgument("remote scorer requires endpoint_url".into()));
            }
            if self.model_name.as_deref().is_none_or(str::is_empty) {
                return Err(Error::InvalidArgument("remote scorer requires model_name".into()));
            }
        }
        Ok(())
    }

    pub fn remote_config(&self) -> Result<RemoteConfig> {
        self.validate()?;
        Ok(RemoteConfig {
            endpoint_url: self.endpoint_url.clone().unwrap_or_default(),
            model_name: self.model_name.clone().unwrap_or_default(),
            timeout: std::time::Duration::from_millis(self.timeout_ms),
            max_retries: self.max_retries,
            backoff: std::time::Duration::from_millis(200),
            max_in_flight: self.max_in_flight.max(1),
        })
    }

    /// Instantiates the configured backend over real HTTP.
    #[cfg(feature = "http")]
    pub fn build(&self) -> Result<Arc<dyn Scorer>> {
        match self.kind {
            ScorerKind::Lexical => Ok(Arc::new(LexicalScorer)),
            ScorerKind::Remote => {
                let transport = crate::transport::UreqTransport::new();
                Ok(Arc::new(RemoteScorer::new(self.remote_config()?, transport)))
            }
        }
    }
}
