//! Blocking JSON-over-HTTP transport used by the remote scorer and the
//! remote chat backend, plus a replaying fake for tests.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Duration;

use parking_lot::{Condvar, Mutex};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HttpResponse {
    pub status: u16,
    pub body: String,
}

impl HttpResponse {
    pub fn ok(body: impl Into<String>) -> Self {
        HttpResponse { status: 200, body: body.into() }
    }

    fn is_success(&self) -> bool {
        (200..300).contains(&self.status)
    }

    fn is_retryable(&self) -> bool {
        self.status == 429 || self.status >= 500
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TransportError {
    Timeout,
    Failed(String),
}

pub trait Transport: Send + Sync {
    fn post_json(&self, url: &str, body: &str, timeout: Duration) -> Result<HttpResponse, TransportError>;
}

#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub timeout: Duration,
    pub max_retries: u32,
    /// Delay before the first retry; doubled for each later one.
    pub backoff: Duration,
}

/// Posts `body`, retrying timeouts, connection failures, 429 and 5xx with
/// exponential backoff. Each retry bumps `retries`.
pub fn post_with_retries<T: Transport + ?Sized>(
    transport: &T,
    url: &str,
    body: &str,
    policy: &RetryPolicy,
    retries: &AtomicU64,
) -> Result<HttpResponse> {
    let mut attempt = 0u32;
    loop {
        let (retryable, error) = match transport.post_json(url, body, policy.timeout) {
            Ok(resp) if resp.is_success() => return Ok(resp),
            Ok(resp) => {
                (resp.is_retryable(), Error::Backend { status: Some(resp.status), message: truncate(&resp.body) })
            }
            Err(TransportError::Timeout) => {
                (true, Error::Backend { status: None, message: "request timed out".into() })
            }
            Err(TransportError::Failed(message)) => (true, Error::Backend { status: None, message }),
        };
        if !retryable || attempt >= policy.max_retries {
            return Err(error);
        }
        let delay = policy.backoff.saturating_mul(1 << attempt.min(16));
        tracing::warn!(url, attempt = attempt + 1, ?delay, "retrying request");
        if !delay.is_zero() {
            std::thread::sleep(delay);
        }
        retries.fetch_add(1, Ordering::Relaxed);
        attempt += 1;
    }
}

fn truncate(body: &str) -> String {
    body.chars().take(200).collect()
}

/// Counting semaphore bounding in-flight requests.
pub(crate) struct InFlightLimit {
    available: Mutex<usize>,
    freed: Condvar,
}

impl InFlightLimit {
    pub(crate) fn new(limit: usize) -> Self {
        InFlightLimit { available: Mutex::new(limit.max(1)), freed: Condvar::new() }
    }

    pub(crate) fn acquire(&self) -> InFlightPermit<'_> {
        let mut available = self.available.lock();
        while *available == 0 {
            self.freed.wait(&mut available);
        }
        *available -= 1;
        InFlightPermit(self)
    }
}

pub(crate) struct InFlightPermit<'a>(&'a InFlightLimit);

impl Drop for InFlightPermit<'_> {
    fn drop(&mut self) {
        *self.0.available.lock() += 1;
        self.0.freed.notify_one();
    }
}

/// Serves canned outcomes in order and records every request it receives.
#[derive(Default)]
pub struct ReplayTransport {
    outcomes: Mutex<VecDeque<Result<HttpResponse, TransportError>>>,
    requests: Mutex<Vec<(String, String)>>,
}

impl ReplayTransport {
    pub fn new(outcomes: impl IntoIterator<Item = Result<HttpResponse, TransportError>>) -> Self {
        ReplayTransport { outcomes: Mutex::new(outcomes.into_iter().collect()), requests: Mutex::default() }
    }

    pub fn push(&self, outcome: Result<HttpResponse, TransportError>) {
        self.outcomes.lock().push_back(outcome);
    }

    /// (url, body) pairs received so far.
    pub fn requests(&self) -> Vec<(String, String)> {
        self.requests.lock().clone()
    }
}

impl Transport for ReplayTransport {
    fn post_json(&self, url: &str, body: &str, _timeout: Duration) -> Result<HttpResponse, TransportError> {
        self.requests.lock().push((url.to_string(), body.to_string()));
        self.outcomes.lock().pop_front().unwrap_or_else(|| Err(TransportError::Failed("replay exhausted".into())))
    }
}

#[cfg(feature = "http")]
pub use self::ureq_transport::UreqTransport;

#[cfg(feature = "http")]
mod ureq_transport {
    use super::*;

    #[derive(Debug, Clone, Default)]
    pub struct UreqTransport;

    impl UreqTransport {
        pub fn new() -> Self {
            UreqTransport
        }
    }

    impl Transport for UreqTransport {
        fn post_json(&self, url: &str, body: &str, timeout: Duration) -> Result<HttpResponse, TransportError> {
            let agent: ureq::Agent =
                ureq::Agent::config_builder().timeout_global(Some(timeout)).http_status_as_error(false).build().into();
            let response =
                agent.post(url).header("content-type", "application/json").send(body).map_err(|e| match e {
                    ureq::Error::Timeout(_) => TransportError::Timeout,
                    other => TransportError::Failed(other.to_string()),
                })?;
            let status = response.status().as_u16();
            let body = response.into_body().read_to_string().map_err(|e| TransportError::Failed(e.to_string()))?;
            Ok(HttpResponse { status, body })
        }
    }
}
