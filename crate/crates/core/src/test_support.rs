//! Brute-force oracles and scorer wrappers shared by unit tests.

use std::collections::HashSet;
use std::sync::atomic::{AtomicU64, Ordering};

use parking_lot::Mutex;

use crate::error::Result;
use crate::scoring::{LogLikelihood, ScoreRequest, Scorer};

/// Lexical log-likelihood computed by rescanning the context for every
/// continuation token.
pub fn brute_lexical(context: &str, continuation: &str) -> f64 {
    let split = |s: &str| -> Vec<String> {
        let mut out = Vec::new();
        let mut cur = String::new();
        for c in s.chars() {
            if c.is_alphanumeric() {
                cur.extend(c.to_lowercase());
            } else if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
        }
        if !cur.is_empty() {
            out.push(cur);
        }
        out
    };
    let ctx = split(context);
    let cont = split(continuation);
    let mut vocab: Vec<&String> = Vec::new();
    for t in ctx.iter().chain(cont.iter()) {
        if !vocab.contains(&t) {
            vocab.push(t);
        }
    }
    let mut total = 0.0;
    for t in &cont {
        let count = ctx.iter().filter(|c| *c == t).count();
        total += ((count as f64 + 1.0) / (ctx.len() + vocab.len()) as f64).ln();
    }
    total
}

/// The brute-force oracle as a scorer.
pub struct OracleScorer;

impl Scorer for OracleScorer {
    fn logprob(&self, request: &ScoreRequest) -> Result<LogLikelihood> {
        Ok(LogLikelihood(brute_lexical(&request.context, &request.continuation)))
    }
}

/// Adds a constant to every score of the wrapped scorer.
pub struct Shifted<S>(pub S, pub f64);

impl<S: Scorer> Scorer for Shifted<S> {
    fn logprob(&self, request: &ScoreRequest) -> Result<LogLikelihood> {
        Ok(LogLikelihood(self.0.logprob(request)?.value() + self.1))
    }
}

/// Records every request passed through.
pub struct Recording<S> {
    pub inner: S,
    pub calls: AtomicU64,
    pub contexts: Mutex<HashSet<String>>,
}

impl<S> Recording<S> {
    pub fn new(inner: S) -> Self {
        Recording { inner, calls: AtomicU64::new(0), contexts: Mutex::new(HashSet::new()) }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

impl<S: Scorer> Scorer for Recording<S> {
    fn logprob(&self, request: &ScoreRequest) -> Result<LogLikelihood> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.contexts.lock().insert(request.context.clone());
        self.inner.logprob(request)
    }
}
