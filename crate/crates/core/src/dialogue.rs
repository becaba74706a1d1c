//! Dialogue transcripts, sentence segmentation and the canonical text forms
//! handed to the scorer.
//!
//! Every context the scorer sees is built here, so ablated variants of a
//! context differ from the full form only in the removed sentence text.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TEACHER_LABEL: &str = "Teacher:";
const ASSISTANT_LABEL: &str = "Assistant:";

/// The continuation cue that closes every serialized context. A context with
/// nothing in it is exactly this string.
pub const ASSISTANT_CUE: &str = ASSISTANT_LABEL;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Teacher,
    Assistant,
}

impl Role {
    pub fn label(self) -> &'static str {
        match self {
            Role::Teacher => TEACHER_LABEL,
            Role::Assistant => ASSISTANT_LABEL,
        }
    }
}

/// One teacher message plus the assistant reply that followed it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Turn {
    /// 1-based position in the dialogue.
    pub index: usize,
    pub teacher_text: String,
    /// Empty for a turn the assistant has not answered yet.
    pub assistant_text: String,
}

impl Turn {
    pub fn sentences(&self) -> Vec<Sentence> {
        segment_sentences(self.index, &self.teacher_text)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "DialogueFile", into = "DialogueFile")]
pub struct Dialogue {
    pub id: String,
    turns: Vec<Turn>,
}

impl Dialogue {
    pub fn new<I, T, A>(id: impl Into<String>, turns: I) -> Self
    where
        I: IntoIterator<Item = (T, A)>,
        T: Into<String>,
        A: Into<String>,
    {
        let mut dialogue = Dialogue { id: id.into(), turns: Vec::new() };
        for (teacher, assistant) in turns {
            dialogue.push_turn(teacher, assistant);
        }
        dialogue
    }

    pub fn empty(id: impl Into<String>) -> Self {
        Dialogue { id: id.into(), turns: Vec::new() }
    }

    /// Appends a turn; its index is assigned from its position.
    pub fn push_turn(&mut self, teacher: impl Into<String>, assistant: impl Into<String>) -> &Turn {
        let index = self.turns.len() + 1;
        self.turns.push(Turn { index, teacher_text: teacher.into(), assistant_text: assistant.into() });
        &self.turns[index - 1]
    }

    pub fn turns(&self) -> &[Turn] {
        &self.turns
    }

    pub fn len(&self) -> usize {
        self.turns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.turns.is_empty()
    }

    /// Looks up a turn by its 1-based index.
    pub fn turn(&self, index: usize) -> Option<&Turn> {
        index.checked_sub(1).and_then(|i| self.turns.get(i))
    }

    /// The dialogue cut after `upto` turns. With `drop_last_reply`, the
    /// assistant half of the final kept turn is cleared.
    pub fn truncated(&self, upto: usize, drop_last_reply: bool) -> Dialogue {
        let mut turns: Vec<Turn> = self.turns.iter().take(upto).cloned().collect();
        if drop_last_reply {
            if let Some(last) = turns.last_mut() {
                last.assistant_text.clear();
            }
        }
        Dialogue { id: self.id.clone(), turns }
    }

    /// All teacher sentences in dialogue order.
    pub fn teacher_sentences(&self) -> Vec<Sentence> {
        self.turns.iter().flat_map(Turn::sentences).collect()
    }

    /// Resolves a (turn, sentence) reference under the canonical segmenter.
    pub fn sentence(&self, turn_index: usize, sentence_index: usize) -> Option<Sentence> {
        self.turn(turn_index)?.sentences().into_iter().find(|s| s.sentence_index == sentence_index)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

/// On-disk dialogue layout: `{"id": ..., "turns": [{"teacher": ..., "assistant": ...}]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
struct DialogueFile {
    id: String,
    turns: Vec<TurnFile>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct TurnFile {
    teacher: String,
    #[serde(default)]
    assistant: String,
}

impl From<DialogueFile> for Dialogue {
    fn from(file: DialogueFile) -> Self {
        Dialogue::new(file.id, file.turns.into_iter().map(|t| (t.teacher, t.assistant)))
    }
}

impl From<Dialogue> for DialogueFile {
    fn from(d: Dialogue) -> Self {
        DialogueFile {
            id: d.id,
            turns: d
                .turns
                .into_iter()
                .map(|t| TurnFile { teacher: t.teacher_text, assistant: t.assistant_text })
                .collect(),
        }
    }
}

/// Half-open character offsets (not bytes) into a teacher utterance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CharSpan {
    pub start_char: usize,
    pub end_char: usize,
}

impl CharSpan {
    pub fn len(&self) -> usize {
        self.end_char - self.start_char
    }

    pub fn is_empty(&self) -> bool {
        self.start_char == self.end_char
    }

    /// The substring of `text` covered by this span, if it is in bounds.
    pub fn slice<'a>(&self, text: &'a str) -> Option<&'a str> {
        if self.start_char > self.end_char {
            return None;
        }
        let mut bounds = text.char_indices().map(|(b, _)| b).chain(std::iter::once(text.len()));
        let start = bounds.nth(self.start_char)?;
        let end = if self.is_empty() { start } else { bounds.nth(self.len() - 1)? };
        Some(&text[start..end])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sentence {
    pub turn_index: usize,
    /// 1-based within the turn.
    pub sentence_index: usize,
    pub text: String,
    pub span: CharSpan,
}

impl Sentence {
    pub fn key(&self) -> (usize, usize) {
        (self.turn_index, self.sentence_index)
    }
}

/// The response whose supporting evidence is being sought.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct TargetResponse(String);

impl TargetResponse {
    pub fn new(text: impl Into<String>) -> Result<Self> {
        let text = text.into();
        if text.trim().is_empty() {
            return Err(Error::InvalidArgument("target response is empty".into()));
        }
        Ok(TargetResponse(text))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for TargetResponse {
    type Error = Error;

    fn try_from(text: String) -> Result<Self> {
        Self::new(text)
    }
}

impl From<TargetResponse> for String {
    fn from(target: TargetResponse) -> Self {
        target.0
    }
}

impl fmt::Display for TargetResponse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

fn is_ascii_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_cjk_terminal(c: char) -> bool {
    matches!(c, '。' | '！' | '？')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']' | '”' | '’' | '」' | '』' | '）')
}

/// Splits a teacher utterance into sentences on terminal punctuation.
///
/// `.`, `!` and `?` end a sentence when followed by whitespace or the end of
/// the text; the CJK marks `。！？` always end one. Runs of terminal marks and
/// trailing closing quotes or brackets stay with the sentence they close.
/// Text without terminal punctuation comes back as a single sentence.
pub fn segment_sentences(turn_index: usize, text: &str) -> Vec<Sentence> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let byte_at = |i: usize| chars.get(i).map_or(text.len(), |&(b, _)| b);

    let mut sentences = Vec::new();
    let mut push = |start: usize, end: usize| {
        let mut lo = start;
        let mut hi = end;
        while lo < hi && chars[lo].1.is_whitespace() {
            lo += 1;
        }
        while hi > lo && chars[hi - 1].1.is_whitespace() {
            hi -= 1;
        }
        if lo < hi {
            sentences.push(Sentence {
                turn_index,
                sentence_index: sentences.len() + 1,
                text: text[byte_at(lo)..byte_at(hi)].to_string(),
                span: CharSpan { start_char: lo, end_char: hi },
            });
        }
    };

    let mut start = 0;
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i].1;
        if is_ascii_terminal(c) || is_cjk_terminal(c) {
            let mut saw_cjk = is_cjk_terminal(c);
            let mut end = i + 1;
            while end < chars.len() && (is_ascii_terminal(chars[end].1) || is_cjk_terminal(chars[end].1)) {
                saw_cjk |= is_cjk_terminal(chars[end].1);
                end += 1;
            }
            while end < chars.len() && is_closer(chars[end].1) {
                end += 1;
            }
            if saw_cjk || end == chars.len() || chars[end].1.is_whitespace() {
                push(start, end);
                start = end;
            }
            i = end;
        } else {
            i += 1;
        }
    }
    push(start, chars.len());
    sentences
}

/// Canonical text of the dialogue prefix `C_upto`, closed by the assistant cue.
pub fn serialize_prefix(dialogue: &Dialogue, upto_turn: usize) -> Result<String> {
    if upto_turn > dialogue.len() {
        return Err(Error::TurnOutOfRange { requested: upto_turn, turns: dialogue.len() });
    }
    let mut out = String::new();
    for turn in &dialogue.turns()[..upto_turn] {
        out.push_str(TEACHER_LABEL);
        out.push(' ');
        out.push_str(&turn.teacher_text);
        out.push('\n');
        if !turn.assistant_text.is_empty() {
            out.push_str(ASSISTANT_LABEL);
            out.push(' ');
            out.push_str(&turn.assistant_text);
            out.push('\n');
        }
    }
    out.push_str(ASSISTANT_CUE);
    Ok(out)
}

/// Canonical text of a teacher context built from `sentences`, optionally
/// with the sentence whose `sentence_index` is `omit` spliced out.
pub fn serialize_teacher_context(sentences: &[Sentence], omit: Option<usize>) -> Result<String> {
    if let Some(j) = omit {
        if !sentences.iter().any(|s| s.sentence_index == j) {
            return Err(Error::SentenceNotFound(j));
        }
    }
    Ok(teacher_context(sentences.iter().filter(|s| Some(s.sentence_index) != omit).map(|s| s.text.as_str())))
}

/// Joins sentence texts into a teacher context. No sentences gives the bare cue.
pub(crate) fn teacher_context<'a>(texts: impl IntoIterator<Item = &'a str>) -> String {
    let mut body = String::new();
    for text in texts {
        if !body.is_empty() {
            body.push(' ');
        }
        body.push_str(text);
    }
    if body.is_empty() {
        ASSISTANT_CUE.to_string()
    } else {
        format!("{TEACHER_LABEL} {body}\n{ASSISTANT_CUE}")
    }
}
