use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use super::{LogLikelihood, ScoreRequest, Scorer};
use crate::error::{Error, Result};
use crate::transport::{post_with_retries, InFlightLimit, RetryPolicy, Transport};

#[derive(Debug, Clone)]
pub struct RemoteConfig {
    /// Server root; `/v1/completions` is appended.
    pub endpoint_url: String,
    pub model_name: String,
    pub timeout: Duration,
    pub max_retries: u32,
    pub backoff: Duration,
    pub max_in_flight: usize,
}

impl RemoteConfig {
    pub fn new(endpoint_url: impl Into<String>, model_name: impl Into<String>) -> Self {
        RemoteConfig {
            endpoint_url: endpoint_url.into(),
            model_name: model_name.into(),
            timeout: Duration::from_secs(30),
            max_retries: 3,
            backoff: Duration::from_millis(200),
            max_in_flight: 8,
        }
    }

    fn completions_url(&self) -> String {
        format!("{}/v1/completions", self.endpoint_url.trim_end_matches('/'))
    }
}

/// Scores by echoing `context + continuation` through an OpenAI-compatible
/// completions endpoint and summing the continuation's token logprobs.
pub struct RemoteScorer<T> {
    config: RemoteConfig,
    transport: T,
    limit: InFlightLimit,
    retries: AtomicU64,
}

impl<T: Transport> RemoteScorer<T> {
    pub fn new(config: RemoteConfig, transport: T) -> Self {
        let limit = InFlightLimit::new(config.max_in_flight);
        RemoteScorer { config, transport, limit, retries: AtomicU64::new(0) }
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    /// Number of retried requests so far.
    pub fn retries(&self) -> u64 {
        self.retries.load(Ordering::Relaxed)
    }
}

impl<T: Transport> Scorer for RemoteScorer<T> {
    fn logprob(&self, request: &ScoreRequest) -> Result<LogLikelihood> {
        let body = json!({
            "model": self.config.model_name,
            "prompt": format!("{}{}", request.context, request.continuation),
            "max_tokens": 0,
            "echo": true,
            "logprobs": 0,
        })
        .to_string();
        let policy = RetryPolicy {
            timeout: self.config.timeout,
            max_retries: self.config.max_retries,
            backoff: self.config.backoff,
        };
        let response = {
            let _permit = self.limit.acquire();
            post_with_retries(&self.transport, &self.config.completions_url(), &body, &policy, &self.retries)?
        };
        parse_completion_logprob(&response.body, &request.context, &request.continuation)
    }
}

#[derive(Deserialize)]
struct CompletionResponse {
    #[serde(default)]
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    logprobs: Option<Logprobs>,
}

#[derive(Deserialize)]
struct Logprobs {
    tokens: Vec<String>,
    token_logprobs: Vec<Option<f64>>,
    text_offset: Vec<usize>,
}

/// Extracts the continuation's total logprob from an echoed completion.
///
/// Tokens are aligned by their character offsets: the continuation must
/// start exactly on a token boundary and be covered by contiguous tokens up
/// to the end of the prompt. Tokens past the prompt are ignored.
pub fn parse_completion_logprob(body: &str, context: &str, continuation: &str) -> Result<LogLikelihood> {
    let response: CompletionResponse =
        serde_json::from_str(body).map_err(|e| Error::Protocol(format!("malformed completion response: {e}")))?;
    let choice = response
        .choices
        .into_iter()
        .next()
        .ok_or_else(|| Error::Protocol("completion response has no choices".into()))?;
    let logprobs = choice.logprobs.ok_or_else(|| Error::Protocol("completion response is missing logprobs".into()))?;
    let n = logprobs.tokens.len();
    if logprobs.token_logprobs.len() != n || logprobs.text_offset.len() != n {
        return Err(Error::Protocol("logprobs arrays have mismatched lengths".into()));
    }

    let boundary = context.chars().count();
    let end = boundary + continuation.chars().count();
    let mut cursor = boundary;
    let mut total = 0.0;
    for ((token, logprob), &offset) in logprobs.tokens.iter().zip(&logprobs.token_logprobs).zip(&logprobs.text_offset) {
        let token_end = offset + token.chars().count();
        if offset >= end {
            break;
        }
        if token_end <= boundary {
            continue;
        }
        if offset != cursor || token_end > end {
            return Err(Error::Protocol(format!(
                "token {token:?} at offset {offset} does not align with the continuation span {boundary}..{end}"
            )));
        }
        let logprob = logprob.ok_or_else(|| Error::Protocol(format!("token {token:?} has no logprob")))?;
        if !logprob.is_finite() {
            return Err(Error::Protocol(format!("token {token:?} has a non-finite logprob")));
        }
        total += logprob;
        cursor = token_end;
    }
    if cursor != end {
        return Err(Error::Protocol(format!(
            "echoed tokens cover the continuation only up to offset {cursor} of {end}"
        )));
    }
    Ok(LogLikelihood(total))
}
