//! Evidence attribution over the scorer contract.
//!
//! The hierarchical method first picks the turn whose addition raises the
//! target's log-likelihood the most, then ranks that turn's teacher
//! sentences by `phi = drop + hold`:
//!
//! * `drop = L(U) - L(U \ s)`: how much the target loses when `s` is removed
//!   from the turn's teacher context `U` (necessity);
//! * `hold = L(s) - L(U)`: how well `s` alone keeps the target's support
//!   relative to the full context (sufficiency).
//!
//! The flat baselines pool every teacher sentence of the dialogue into one
//! context and rank by `phi` or by `drop` alone. The similarity baseline
//! never calls the scorer.

mod similarity;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dialogue::{serialize_prefix, teacher_context, Dialogue, Sentence, TargetResponse};
use crate::error::{Error, Result};
use crate::scoring::{ScoreRequest, Scorer};

pub use similarity::{attribute_similarity, cosine_similarities};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Hierarchical,
    FlatDropHold,
    FlatLoo,
    Similarity,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Hierarchical, Method::FlatDropHold, Method::FlatLoo, Method::Similarity];

    /// Row label used in metric tables.
    pub fn label(self) -> &'static str {
        match self {
            Method::Hierarchical => "Hierarchical",
            Method::FlatDropHold => "Drop+Hold",
            Method::FlatLoo => "Leave-one-out",
            Method::Similarity => "Similarity",
        }
    }

    pub fn uses_scorer(self) -> bool {
        self != Method::Similarity
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let normalized: String = s.chars().filter(|c| c.is_alphanumeric()).collect::<String>().to_lowercase();
        match normalized.as_str() {
            "hierarchical" => Ok(Method::Hierarchical),
            "flatdrophold" | "drophold" => Ok(Method::FlatDropHold),
            "flatloo" | "loo" | "leaveoneout" => Ok(Method::FlatLoo),
            "similarity" | "tfidf" => Ok(Method::Similarity),
            _ => Err(Error::InvalidArgument(format!(
                "unknown method {s:?} (expected hierarchical, drop-hold, loo or similarity)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurnGain {
    pub turn_index: usize,
    /// Nats.
    pub gain: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentenceScore {
    pub sentence: Sentence,
    /// The value the method ranks by.
    pub score: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drop: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hold: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttributionResult {
    pub method: Method,
    pub target: TargetResponse,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_turn: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turn_gains: Option<Vec<TurnGain>>,
    /// Best first.
    pub ranked: Vec<SentenceScore>,
    pub evidence: Sentence,
}

impl AttributionResult {
    /// 1-based rank of a (turn, sentence) reference, if it was a candidate.
    pub fn rank_of(&self, turn_index: usize, sentence_index: usize) -> Option<usize> {
        self.ranked.iter().position(|s| s.sentence.key() == (turn_index, sentence_index)).map(|p| p + 1)
    }
}

/// Scores each context against the target, preserving input order.
fn score_contexts<S: Scorer + ?Sized>(scorer: &S, contexts: &[String], target: &TargetResponse) -> Result<Vec<f64>> {
    let score = |context: &String| -> Result<f64> {
        let request = ScoreRequest::new(context.clone(), target.as_str())?;
        Ok(scorer.logprob(&request)?.value())
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        contexts.par_iter().map(score).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        contexts.iter().map(score).collect()
    }
}

/// `g_i = L(C_i) - L(C_{i-1})` for every turn, from `n + 1` prefix scores.
pub fn turn_gains<S: Scorer + ?Sized>(
    dialogue: &Dialogue,
    target: &TargetResponse,
    scorer: &S,
) -> Result<Vec<TurnGain>> {
    if !dialogue.turns().iter().any(|t| !t.teacher_text.trim().is_empty()) {
        return Err(Error::NoEvidence);
    }
    let prefixes = (0..=dialogue.len()).map(|i| serialize_prefix(dialogue, i)).collect::<Result<Vec<_>>>()?;
    let likelihoods = score_contexts(scorer, &prefixes, target)?;
    Ok(likelihoods
        .windows(2)
        .enumerate()
        .map(|(i, pair)| TurnGain { turn_index: i + 1, gain: pair[1] - pair[0] })
        .collect())
}

/// Turn with the largest gain; the earliest wins ties.
pub fn select_turn(gains: &[TurnGain]) -> Result<usize> {
    turns_by_gain(gains).first().copied().ok_or_else(|| Error::InvalidArgument("no turn gains to select from".into()))
}

fn turns_by_gain(gains: &[TurnGain]) -> Vec<usize> {
    let mut order: Vec<&TurnGain> = gains.iter().collect();
    order.sort_by(|a, b| b.gain.total_cmp(&a.gain).then(a.turn_index.cmp(&b.turn_index)));
    order.into_iter().map(|g| g.turn_index).collect()
}

/// Drop, hold and phi for every sentence of the pooled context `U`, in input
/// order. Issues `2n + 1` score requests: `U`, each `U \ s_j`, each `s_j`.
pub fn phi_scores<S: Scorer + ?Sized>(
    sentences: &[Sentence],
    target: &TargetResponse,
    scorer: &S,
) -> Result<Vec<SentenceScore>> {
    if sentences.is_empty() {
        return Err(Error::NoEvidence);
    }
    let n = sentences.len();
    let mut contexts = Vec::with_capacity(2 * n + 1);
    contexts.push(teacher_context(sentences.iter().map(|s| s.text.as_str())));
    for j in 0..n {
        let rest = sentences.iter().enumerate().filter(|&(k, _)| k != j).map(|(_, s)| s.text.as_str());
        contexts.push(teacher_context(rest));
    }
    for s in sentences {
        contexts.push(teacher_context([s.text.as_str()]));
    }

    let scores = score_contexts(scorer, &contexts, target)?;
    let full = scores[0];
    let (without, alone) = scores[1..].split_at(n);
    Ok(sentences
        .iter()
        .zip(without.iter().zip(alone))
        .map(|(s, (&without, &alone))| {
            let drop = full - without;
            let hold = alone - full;
            let phi = drop + hold;
            SentenceScore { sentence: s.clone(), score: phi, drop: Some(drop), hold: Some(hold), phi: Some(phi) }
        })
        .collect())
}

/// Sorts best first by `score`; equal scores keep their incoming order.
fn rank(mut scores: Vec<SentenceScore>) -> Vec<SentenceScore> {
    scores.sort_by(|a, b| b.score.total_cmp(&a.score));
    scores
}

fn finish(
    method: Method,
    target: &TargetResponse,
    selected_turn: Option<usize>,
    turn_gains: Option<Vec<TurnGain>>,
    ranked: Vec<SentenceScore>,
) -> Result<AttributionResult> {
    let evidence = ranked.first().ok_or(Error::NoEvidence)?.sentence.clone();
    Ok(AttributionResult { method, target: target.clone(), selected_turn, turn_gains, ranked, evidence })
}

/// Turn-level gain selection followed by sentence-level phi ranking inside
/// the selected turn. If the best turn has no teacher sentences, the next
/// best turn that has some is used.
pub fn attribute_hierarchical<S: Scorer + ?Sized>(
    dialogue: &Dialogue,
    target: &TargetResponse,
    scorer: &S,
) -> Result<AttributionResult> {
    let gains = turn_gains(dialogue, target, scorer)?;
    let (turn, sentences) = turns_by_gain(&gains)
        .into_iter()
        .filter_map(|i| {
            let sentences = dialogue.turn(i)?.sentences();
            (!sentences.is_empty()).then_some((i, sentences))
        })
        .next()
        .ok_or(Error::NoEvidence)?;
    let ranked = rank(phi_scores(&sentences, target, scorer)?);
    finish(Method::Hierarchical, target, Some(turn), Some(gains), ranked)
}

/// The flat baselines: every teacher sentence of the dialogue forms one
/// pseudo-context. `FlatDropHold` ranks by phi, `FlatLoo` by drop alone.
pub fn attribute_flat<S: Scorer + ?Sized>(
    dialogue: &Dialogue,
    target: &TargetResponse,
    scorer: &S,
    variant: Method,
) -> Result<AttributionResult> {
    if !matches!(variant, Method::FlatDropHold | Method::FlatLoo) {
        return Err(Error::InvalidArgument(format!("{variant} is not a flat scorer variant")));
    }
    let sentences = dialogue.teacher_sentences();
    let mut scores = phi_scores(&sentences, target, scorer)?;
    if variant == Method::FlatLoo {
        for s in &mut scores {
            s.score = s.drop.unwrap_or_default();
        }
    }
    finish(variant, target, None, None, rank(scores))
}

/// Runs any attribution method.
pub fn attribute<S: Scorer + ?Sized>(
    dialogue: &Dialogue,
    target: &TargetResponse,
    scorer: &S,
    method: Method,
) -> Result<AttributionResult> {
    match method {
        Method::Hierarchical => attribute_hierarchical(dialogue, target, scorer),
        Method::FlatDropHold | Method::FlatLoo => attribute_flat(dialogue, target, scorer, method),
        Method::Similarity => attribute_similarity(dialogue, target),
    }
}
