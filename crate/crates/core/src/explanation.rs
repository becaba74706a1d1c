//! Teacher-facing explanations grounded in the selected evidence sentence.
//!
//! Every narrative must quote the evidence verbatim. Chat-generated text
//! that does not is discarded in favour of the fixed template.

use serde::{Deserialize, Serialize};

use crate::chat::{ChatBackend, ChatMessage};
use crate::dialogue::{Sentence, TargetResponse};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    Template,
    ChatBackend,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Explanation {
    pub strategy_text: String,
    pub evidence: Sentence,
    pub narrative: String,
    pub generator: Generator,
    /// Why a chat backend's output was not used, when one was tried.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fallback_reason: Option<String>,
}

impl Explanation {
    pub fn is_grounded(&self) -> bool {
        !self.narrative.trim().is_empty() && self.narrative.contains(&self.evidence.text)
    }
}

/// The single user message sent to a chat backend.
pub fn explanation_prompt(strategy: &TargetResponse, evidence: &Sentence) -> String {
    format!(
        "A teacher described a student. The key evidence is: \"{}\". The recommended strategy is: \"{}\". \
         In 2-3 sentences, explain to the teacher why this evidence supports this strategy. Quote the evidence verbatim.",
        evidence.text, strategy
    )
}

pub fn template_narrative(strategy: &TargetResponse, evidence: &Sentence) -> String {
    format!("This strategy is recommended because you mentioned: \"{}\". {}", evidence.text, strategy)
}

/// Explains why `evidence` supports `strategy`, through `backend` when one is
/// given and its answer quotes the evidence, else through the template.
pub fn explain(strategy: &TargetResponse, evidence: &Sentence, backend: Option<&dyn ChatBackend>) -> Explanation {
    let template = |fallback_reason: Option<String>| Explanation {
        strategy_text: strategy.as_str().to_string(),
        evidence: evidence.clone(),
        narrative: template_narrative(strategy, evidence),
        generator: Generator::Template,
        fallback_reason,
    };
    let Some(backend) = backend else {
        return template(None);
    };
    match backend.complete(&[ChatMessage::user(explanation_prompt(strategy, evidence))]) {
        Ok(text) => {
            let candidate = Explanation {
                strategy_text: strategy.as_str().to_string(),
                evidence: evidence.clone(),
                narrative: text.trim().to_string(),
                generator: Generator::ChatBackend,
                fallback_reason: None,
            };
            if candidate.is_grounded() {
                candidate
            } else {
                template(Some("generated text does not quote the evidence verbatim".into()))
            }
        }
        Err(e) => {
            tracing::warn!(error = %e, "explanation backend failed, using template");
            template(Some(e.to_string()))
        }
    }
}
