//! Evidence attribution for multi-turn diagnostic dialogues.
//!
//! Given a dialogue between a teacher and an assistant and a response the
//! assistant recommended, [`attribution`] finds the teacher sentence that
//! most supports the response, [`explanation`] turns it into a grounded
//! narrative, and [`evaluation`] measures attribution quality against
//! annotated gold evidence.

pub mod attribution;
pub mod chat;
pub mod dialogue;
pub mod error;
pub mod evaluation;
pub mod explanation;
pub mod scoring;
pub mod transport;

#[cfg(test)]
mod test_support;

pub use attribution::{attribute, AttributionResult, Method, SentenceScore, TurnGain};
pub use dialogue::{CharSpan, Dialogue, Role, Sentence, TargetResponse, Turn};
pub use error::{Error, Result};
pub use scoring::{CachedScorer, LexicalScorer, LogLikelihood, ScoreRequest, Scorer};
