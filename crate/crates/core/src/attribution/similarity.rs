use std::collections::BTreeMap;

use super::{finish, rank, AttributionResult, Method, SentenceScore};
use crate::dialogue::{Dialogue, TargetResponse};
use crate::error::{Error, Result};
use crate::scoring::tokenize;

type Vector = BTreeMap<String, f64>;

/// TF-IDF cosine between each document and `query`, where the corpus is the
/// documents plus the query. Raw term counts, smoothed idf
/// `ln((1 + D) / (1 + df)) + 1`. Documents with no tokens score 0.
pub fn cosine_similarities(documents: &[&str], query: &str) -> Vec<f64> {
    let mut bags: Vec<BTreeMap<String, f64>> =
        documents.iter().chain(std::iter::once(&query)).map(|d| term_counts(d)).collect();
    let total = bags.len() as f64;

    let mut df: BTreeMap<&str, f64> = BTreeMap::new();
    for bag in &bags {
        for term in bag.keys() {
            *df.entry(term.as_str()).or_default() += 1.0;
        }
    }
    let idf: BTreeMap<String, f64> =
        df.into_iter().map(|(term, df)| (term.to_string(), ((1.0 + total) / (1.0 + df)).ln() + 1.0)).collect();
    for bag in &mut bags {
        for (term, weight) in bag.iter_mut() {
            *weight *= idf[term];
        }
    }

    let query = bags.pop().unwrap_or_default();
    bags.iter().map(|doc| cosine(doc, &query)).collect()
}

fn term_counts(text: &str) -> Vector {
    let mut counts = Vector::new();
    for token in tokenize(text) {
        *counts.entry(token).or_default() += 1.0;
    }
    counts
}

fn cosine(a: &Vector, b: &Vector) -> f64 {
    let norm = |v: &Vector| v.values().map(|x| x * x).sum::<f64>().sqrt();
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    let dot: f64 = a.iter().filter_map(|(t, x)| Some(x * b.get(t)?)).sum();
    (dot / (na * nb)).min(1.0)
}

/// Ranks every teacher sentence by TF-IDF cosine similarity to the target.
pub fn attribute_similarity(dialogue: &Dialogue, target: &TargetResponse) -> Result<AttributionResult> {
    let sentences = dialogue.teacher_sentences();
    if sentences.is_empty() {
        return Err(Error::NoEvidence);
    }
    let texts: Vec<&str> = sentences.iter().map(|s| s.text.as_str()).collect();
    let sims = cosine_similarities(&texts, target.as_str());
    let scores = sentences
        .into_iter()
        .zip(sims)
        .map(|(sentence, score)| SentenceScore { sentence, score, drop: None, hold: None, phi: None })
        .collect();
    finish(Method::Similarity, target, None, None, rank(scores))
}
