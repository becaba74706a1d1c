//! Chat backends standing in for the dialogue model.

use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicU64;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dialogue::Dialogue;
use crate::error::{Error, Result};
use crate::transport::{post_with_retries, RetryPolicy, Transport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChatRole {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: ChatRole,
    pub content: String,
}

impl ChatMessage {
    pub fn user(content: impl Into<String>) -> Self {
        ChatMessage { role: ChatRole::User, content: content.into() }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        ChatMessage { role: ChatRole::Assistant, content: content.into() }
    }
}

pub trait ChatBackend: Send + Sync {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String>;
}

impl<B: ChatBackend + ?Sized> ChatBackend for std::sync::Arc<B> {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String> {
        (**self).complete(messages)
    }
}

/// The transcript as chat messages, teacher turns as the user, followed by
/// the new teacher message.
pub fn dialogue_messages(dialogue: &Dialogue, next_teacher: &str) -> Vec<ChatMessage> {
    let mut messages = Vec::with_capacity(dialogue.len() * 2 + 1);
    for turn in dialogue.turns() {
        messages.push(ChatMessage::user(&turn.teacher_text));
        if !turn.assistant_text.is_empty() {
            messages.push(ChatMessage::assistant(&turn.assistant_text));
        }
    }
    messages.push(ChatMessage::user(next_teacher));
    messages
}

/// Replies from a fixed script: the reply to the k-th user message is line k.
#[derive(Debug, Clone)]
pub struct ScriptedChat {
    lines: Vec<String>,
}

impl ScriptedChat {
    pub fn new<I, S>(lines: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ScriptedChat { lines: lines.into_iter().map(Into::into).collect() }
    }

    /// One reply per line; a trailing newline does not add an empty reply.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::new(text.lines()))
    }
}

impl ChatBackend for ScriptedChat {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String> {
        let turn = messages.iter().filter(|m| m.role == ChatRole::User).count();
        turn.checked_sub(1)
            .and_then(|i| self.lines.get(i))
            .cloned()
            .ok_or_else(|| Error::Backend { status: None, message: format!("script has no reply for turn {turn}") })
    }
}

/// OpenAI-compatible `/v1/chat/completions` client.
pub struct RemoteChat<T> {
    endpoint_url: String,
    model_name: String,
    policy: RetryPolicy,
    transport: T,
    retries: AtomicU64,
}

impl<T: Transport> RemoteChat<T> {
    pub fn new(
        endpoint_url: impl Into<String>,
        model_name: impl Into<String>,
        policy: RetryPolicy,
        transport: T,
    ) -> Self {
        RemoteChat {
            endpoint_url: endpoint_url.into(),
            model_name: model_name.into(),
            policy,
            transport,
            retries: AtomicU64::new(0),
        }
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

impl<T: Transport> ChatBackend for RemoteChat<T> {
    fn complete(&self, messages: &[ChatMessage]) -> Result<String> {
        let url = format!("{}/v1/chat/completions", self.endpoint_url.trim_end_matches('/'));
        let body = json!({ "model": self.model_name, "messages": messages }).to_string();
        let response = post_with_retries(&self.transport, &url, &body, &self.policy, &self.retries)?;
        let parsed: ChatResponse = serde_json::from_str(&response.body)
            .map_err(|e| Error::Protocol(format!("malformed chat response: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| Error::Protocol("chat response has no choices".into()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChatKind {
    #[default]
    Scripted,
    Remote,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChatBackendConfig {
    pub kind: ChatKind,
    pub script_path: Option<PathBuf>,
    pub endpoint_url: Option<String>,
    pub model_name: Option<String>,
    pub timeout_ms: u64,
    pub max_retries: u32,
}

impl Default for ChatBackendConfig {
    fn default() -> Self {
        ChatBackendConfig {
            kind: ChatKind::Scripted,
            script_path: None,
            endpoint_url: None,
            model_name: None,
            timeout_ms: 60_000,
            max_retries: 2,
        }
    }
}

impl ChatBackendConfig {
    /// Exactly the selected kind's fields must be set.
    pub fn validate(&self) -> Result<()> {
        let remote_fields = self.endpoint_url.is_some() || self.model_name.is_some();
        let ok = match self.kind {
            ChatKind::Scripted => self.script_path.is_some() && !remote_fields,
            ChatKind::Remote => self.script_path.is_none() && self.endpoint_url.is_some() && self.model_name.is_some(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(match self.kind {
                ChatKind::Scripted => "scripted chat backend takes script_path only".into(),
                ChatKind::Remote => "remote chat backend takes endpoint_url and model_name only".into(),
            }))
        }
    }

    pub fn retry_policy(&self) -> RetryPolicy {
        RetryPolicy {
            timeout: Duration::from_millis(self.timeout_ms),
            max_retries: self.max_retries,
            backoff: Duration::from_millis(200),
        }
    }

    #[cfg(feature = "http")]
    pub fn build(&self) -> Result<std::sync::Arc<dyn ChatBackend>> {
        self.validate()?;
        Ok(match self.kind {
            ChatKind::Scripted => std::sync::Arc::new(ScriptedChat::from_file(self.script_path.as_ref().unwrap())?),
            ChatKind::Remote => std::sync::Arc::new(RemoteChat::new(
                self.endpoint_url.clone().unwrap_or_default(),
                self.model_name.clone().unwrap_or_default(),
                self.retry_policy(),
                crate::transport::UreqTransport::new(),
            )),
        })
    }
}
