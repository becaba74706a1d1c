use std::collections::{HashMap, HashSet};

use super::{LogLikelihood, ScoreRequest, Scorer};
use crate::error::{Error, Result};

/// Lowercased alphanumeric runs; everything else separates tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()).map(str::to_lowercase).collect()
}

/// Add-one smoothed unigram likelihood of `continuation` under the token
/// counts of `context`:
///
/// `sum over continuation tokens t of ln((count_context(t) + 1) / (N + V))`
///
/// where `N` is the context token count and `V` the size of the union of
/// context and continuation vocabularies.
pub fn lexical_score(context: &str, continuation: &str) -> Result<LogLikelihood> {
    let continuation = tokenize(continuation);
    if continuation.is_empty() {
        return Err(Error::InvalidContinuation);
    }
    let context = tokenize(context);

    let mut counts: HashMap<&str, usize> = HashMap::new();
    for token in &context {
        *counts.entry(token.as_str()).or_default() += 1;
    }
    let vocab: HashSet<&str> = counts.keys().copied().chain(continuation.iter().map(String::as_str)).collect();
    let denominator = (context.len() + vocab.len()) as f64;

    let total = continuation
        .iter()
        .map(|t| {
            let count = counts.get(t.as_str()).copied().unwrap_or(0);
            ((count + 1) as f64 / denominator).ln()
        })
        .sum();
    Ok(LogLikelihood(total))
}

/// Deterministic stand-in for a language model, see [`lexical_score`].
#[derive(Debug, Clone, Copy, Default)]
pub struct LexicalScorer;

impl Scorer for LexicalScorer {
    fn logprob(&self, request: &ScoreRequest) -> Result<LogLikelihood> {
        lexical_score(&request.context, &request.continuation)
    }
}
