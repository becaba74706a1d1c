use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{BenchmarkCase, GoldRef};
use crate::dialogue::{Dialogue, TargetResponse};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Noise {
    /// Distractor sentences share no tokens with the target.
    #[default]
    Clean,
    /// Each distractor sentence carries one target token with probability 0.2.
    Hard,
}

const HARD_LEAK_PROBABILITY: f64 = 0.2;

// The three vocabularies are pairwise disjoint and avoid the role labels.
const TARGET_VOCAB: &[&str] = &[
    "praise",
    "reward",
    "routine",
    "feedback",
    "calm",
    "structure",
    "mentor",
    "goals",
    "choices",
    "breaks",
    "modeling",
    "contract",
    "checklist",
    "signals",
    "tokens",
    "coaching",
    "empathy",
    "boundaries",
];

const DISTRACTOR_VOCAB: &[&str] = &[
    "he", "she", "often", "class", "math", "lunch", "after", "school", "today", "friends", "desk", "home", "week",
    "quiet", "bus", "late", "book", "game", "runs", "sits", "talks", "draws", "walks", "morning", "window", "hallway",
    "lesson", "notes", "pencil", "sister", "brother", "music", "weekend", "recess", "library", "art",
];

const ASSISTANT_VOCAB: &[&str] = &[
    "tell", "me", "more", "about", "what", "happens", "when", "how", "does", "react", "i", "see", "thanks", "could",
    "you", "describe", "that",
];

/// A planted-evidence benchmark: each case hides one sentence carrying at
/// least two of the target's three tokens in a uniformly chosen turn.
/// Deterministic for a given seed.
pub fn generate_synthetic(n_cases: usize, n_turns: usize, seed: u64, noise: Noise) -> Result<Vec<BenchmarkCase>> {
    if n_cases == 0 {
        return Err(Error::InvalidArgument("n_cases must be at least 1".into()));
    }
    if n_turns < 2 {
        return Err(Error::InvalidArgument("n_turns must be at least 2".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..n_cases).map(|i| generate_case(&mut rng, format!("syn-{seed}-{i:04}"), n_turns, noise)).collect())
}

fn generate_case(rng: &mut ChaCha8Rng, id: String, n_turns: usize, noise: Noise) -> BenchmarkCase {
    let target: Vec<&str> = TARGET_VOCAB.choose_multiple(rng, 3).copied().collect();
    let planted_turn = rng.gen_range(1..=n_turns);

    let mut turns = Vec::with_capacity(n_turns);
    let mut gold = None;
    for turn in 1..=n_turns {
        let n_sentences = rng.gen_range(2..=4);
        let planted_at = (turn == planted_turn).then(|| rng.gen_range(1..=n_sentences));
        let mut sentences = Vec::with_capacity(n_sentences);
        for index in 1..=n_sentences {
            let mut words = distractor_words(rng);
            if planted_at == Some(index) {
                let k = rng.gen_range(2..=3);
                for &token in target.choose_multiple(rng, k) {
                    let at = rng.gen_range(0..=words.len());
                    words.insert(at, token);
                }
                gold = Some(GoldRef { turn, sentence: index });
            } else if noise == Noise::Hard && rng.gen_bool(HARD_LEAK_PROBABILITY) {
                let token = *target.choose(rng).expect("target has three tokens");
                let at = rng.gen_range(0..=words.len());
                words.insert(at, token);
            }
            sentences.push(render_sentence(&words, '.'));
        }
        let reply: Vec<&str> = (0..rng.gen_range(3..=6)).map(|_| *ASSISTANT_VOCAB.choose(rng).unwrap()).collect();
        turns.push((sentences.join(" "), render_sentence(&reply, '?')));
    }

    BenchmarkCase {
        dialogue: Dialogue::new(id.clone(), turns),
        id,
        target: TargetResponse::new(target.join(" ")).expect("three non-empty tokens"),
        gold: vec![gold.expect("one turn is always planted")],
    }
}

fn distractor_words(rng: &mut ChaCha8Rng) -> Vec<&'static str> {
    (0..rng.gen_range(4..=7)).map(|_| *DISTRACTOR_VOCAB.choose(rng).unwrap()).collect()
}

fn render_sentence(words: &[&str], terminal: char) -> String {
    let mut text = words.join(" ");
    if let Some(first) = text.get(..1) {
        let upper = first.to_uppercase();
        text.replace_range(..1, &upper);
    }
    text.push(terminal);
    text
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;
    use crate::scoring::tokenize;

    fn overlap(sentence: &str, target: &TargetResponse) -> usize {
        let target: HashSet<String> = tokenize(target.as_str()).into_iter().collect();
        tokenize(sentence).iter().filter(|t| target.contains(*t)).collect::<HashSet<_>>().len()
    }

    #[test]
    fn vocabularies_are_disjoint() {
        let mut seen = HashSet::new();
        for w in TARGET_VOCAB.iter().chain(DISTRACTOR_VOCAB).chain(ASSISTANT_VOCAB).chain(&["teacher", "assistant"]) {
            assert!(seen.insert(*w), "{w} repeated");
        }
    }

    #[test]
    fn clean_case_has_unique_planted_sentence() {
        let cases = generate_synthetic(1, 2, 0, Noise::Clean).unwrap();
        let case = &cases[0];
        let strong: Vec<_> = case
            .dialogue
            .teacher_sentences()
            .into_iter()
            .filter(|s| overlap(&s.text, &case.target) >= 2)
            .map(|s| s.key())
            .collect();
        assert_eq!(strong, vec![(case.gold[0].turn, case.gold[0].sentence)]);
    }

    #[test]
    fn same_seed_same_corpus() {
        assert_eq!(
            generate_synthetic(20, 4, 9, Noise::Hard).unwrap(),
            generate_synthetic(20, 4, 9, Noise::Hard).unwrap()
        );
        assert_ne!(
            generate_synthetic(5, 4, 1, Noise::Clean).unwrap(),
            generate_synthetic(5, 4, 2, Noise::Clean).unwrap()
        );
    }

    #[test]
    fn preconditions() {
        assert!(generate_synthetic(0, 4, 0, Noise::Clean).is_err());
        assert!(generate_synthetic(1, 1, 0, Noise::Clean).is_err());
    }

    #[test]
    fn structure_and_noise_rates() {
        let clean = generate_synthetic(200, 4, 42, Noise::Clean).unwrap();
        let hard = generate_synthetic(200, 4, 42, Noise::Hard).unwrap();
        let mut leaked = 0;
        let mut distractors = 0;
        for (corpus, is_hard) in [(&clean, false), (&hard, true)] {
            for case in corpus.iter() {
                assert!(case.validate().is_ok());
                assert_eq!(case.target.as_str().split(' ').count(), 3);
                for turn in case.dialogue.turns() {
                    assert!((2..=4).contains(&turn.sentences().len()));
                    assert_eq!(overlap(&turn.assistant_text, &case.target), 0);
                }
                for s in case.dialogue.teacher_sentences() {
                    let k = overlap(&s.text, &case.target);
                    if s.key() == (case.gold[0].turn, case.gold[0].sentence) {
                        assert!(k >= 2);
                    } else {
                        distractors += usize::from(is_hard);
                        if is_hard {
                            assert!(k <= 1);
                            leaked += k;
                        } else {
                            assert_eq!(k, 0);
                        }
                    }
                }
            }
        }
        let rate = leaked as f64 / distractors as f64;
        assert!((0.15..0.25).contains(&rate), "leak rate {rate}");
    }
}
