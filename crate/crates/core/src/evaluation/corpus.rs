use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dialogue::{Dialogue, TargetResponse};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GoldRef {
    pub turn: usize,
    pub sentence: usize,
}

/// A dialogue, the response to explain, and the annotated evidence sentences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BenchmarkCase {
    pub id: String,
    pub dialogue: Dialogue,
    pub target: TargetResponse,
    pub gold: Vec<GoldRef>,
}

impl BenchmarkCase {
    /// Checks that gold is non-empty and every reference resolves to a
    /// teacher sentence under the canonical segmenter.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.gold.is_empty() {
            return Err("case has no gold evidence".into());
        }
        for g in &self.gold {
            if self.dialogue.sentence(g.turn, g.sentence).is_none() {
                return Err(format!("gold reference turn {} sentence {} does not resolve", g.turn, g.sentence));
            }
        }
        Ok(())
    }
}

/// Parses JSONL, one case per line. Blank lines are skipped.
pub fn parse_corpus(text: &str) -> Result<Vec<BenchmarkCase>> {
    let mut cases = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let location = format!("line {}", i + 1);
        let case: BenchmarkCase = serde_json::from_str(line).map_err(|e| Error::corpus(&location, e.to_string()))?;
        case.validate().map_err(|message| Error::corpus(format!("{location} (case {})", case.id), message))?;
        cases.push(case);
    }
    Ok(cases)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<BenchmarkCase>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text).map_err(|e| match e {
        Error::Corpus { location, message } => {
            Error::Corpus { location: format!("{}: {location}", path.display()), message }
        }
        other => other,
    })
}

pub fn write_corpus(cases: &[BenchmarkCase], mut out: impl Write) -> Result<()> {
    for case in cases {
        serde_json::to_writer(&mut out, case)?;
        out.write_all(b"\n").map_err(|e| Error::io("<corpus>", e))?;
    }
    Ok(())
}

pub fn save_corpus(cases: &[BenchmarkCase], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_corpus(cases, &mut out)?;
    out.flush().map_err(|e| Error::io(path, e))
}
