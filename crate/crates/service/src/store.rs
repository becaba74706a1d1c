//! Append-only JSONL session log.
//!
//! Every mutation is one record. Opening the store replays the log and then
//! compacts it to one snapshot record per session.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use attrib_core::attribution::AttributionResult;
use attrib_core::explanation::Explanation;
use attrib_core::Dialogue;
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::ServiceError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub dialogue: Dialogue,
    pub created_at: DateTime<Utc>,
    pub updated_at: DateTime<Utc>,
    pub last_attribution: Option<AttributionResult>,
    pub last_explanation: Option<Explanation>,
}

impl Session {
    pub fn new(id: impl Into<String>, at: DateTime<Utc>) -> Self {
        let id = id.into();
        Session {
            dialogue: Dialogue::empty(id.clone()),
            id,
            created_at: at,
            updated_at: at,
            last_attribution: None,
            last_explanation: None,
        }
    }

    /// Applies a mutation record addressed to this session.
    fn apply(&mut self, record: Record) {
        match record {
            Record::Create { .. } | Record::Snapshot { .. } => {}
            Record::Turn { teacher, assistant, at, .. } => {
                self.dialogue.push_turn(teacher, assistant);
                self.updated_at = at;
            }
            Record::Attribution { result, at, .. } => {
                self.last_attribution = Some(result);
                self.updated_at = at;
            }
            Record::Explanation { explanation, at, .. } => {
                self.last_explanation = Some(explanation);
                self.updated_at = at;
            }
        }
    }

    /// Records `record` in memory after it has been persisted.
    pub fn commit(&mut self, record: Record) {
        debug_assert_eq!(record.session_id(), self.id);
        self.apply(record);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Record {
    Create { id: String, at: DateTime<Utc> },
    Turn { id: String, teacher: String, assistant: String, at: DateTime<Utc> },
    Attribution { id: String, result: AttributionResult, at: DateTime<Utc> },
    Explanation { id: String, explanation: Explanation, at: DateTime<Utc> },
    Snapshot { session: Session },
}

impl Record {
    pub fn session_id(&self) -> &str {
        match self {
            Record::Create { id, .. }
            | Record::Turn { id, .. }
            | Record::Attribution { id, .. }
            | Record::Explanation { id, .. } => id,
            Record::Snapshot { session } => &session.id,
        }
    }
}

pub struct SessionStore {
    path: PathBuf,
    file: Mutex<File>,
}

impl SessionStore {
    /// Replays the log at `path` (created when missing), compacts it, and
    /// returns the store with every recovered session.
    pub fn open(path: impl AsRef<Path>) -> Result<(Self, Vec<Session>), ServiceError> {
        let path = path.as_ref().to_path_buf();
        let sessions = if path.exists() { replay(&path)? } else { Vec::new() };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| ServiceError::store(dir, e))?;
        }
        compact(&path, &sessions)?;
        let file = OpenOptions::new().append(true).open(&path).map_err(|e| ServiceError::store(&path, e))?;
        Ok((SessionStore { path, file: Mutex::new(file) }, sessions))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Writes one record and flushes it before returning.
    pub fn append(&self, record: &Record) -> Result<(), ServiceError> {
        let mut line = serde_json::to_vec(record).map_err(attrib_core::Error::from)?;
        line.push(b'\n');
        let mut file = self.file.lock().unwrap_or_else(|poisoned| poisoned.into_inner());
        file.write_all(&line).and_then(|()| file.flush()).map_err(|e| ServiceError::store(&self.path, e))
    }
}

fn replay(path: &Path) -> Result<Vec<Session>, ServiceError> {
    let reader = BufReader::new(File::open(path).map_err(|e| ServiceError::store(path, e))?);
    let lines: Vec<String> = reader.lines().collect::<Result<_, _>>().map_err(|e| ServiceError::store(path, e))?;
    let last = lines.iter().rposition(|l| !l.trim().is_empty());

    let mut order: Vec<String> = Vec::new();
    let mut sessions: HashMap<String, Session> = HashMap::new();
    for (number, line) in lines.iter().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: Record = match serde_json::from_str(line) {
            Ok(record) => record,
            Err(e) if Some(number) == last => {
                tracing::warn!(path = %path.display(), line = number + 1, error = %e, "dropping torn final record");
                break;
            }
            Err(e) => {
                return Err(ServiceError::Corrupt {
                    path: path.to_path_buf(),
                    line: number + 1,
                    message: e.to_string(),
                })
            }
        };
        let corrupt = |message: String| ServiceError::Corrupt { path: path.to_path_buf(), line: number + 1, message };
        match record {
            Record::Create { id, at } => {
                if sessions.contains_key(&id) {
                    return Err(corrupt(format!("session {id} created twice")));
                }
                order.push(id.clone());
                sessions.insert(id.clone(), Session::new(id, at));
            }
            Record::Snapshot { session } => {
                if sessions.contains_key(&session.id) {
                    return Err(corrupt(format!("session {} created twice", session.id)));
                }
                order.push(session.id.clone());
                sessions.insert(session.id.clone(), session);
            }
            other => {
                let id = other.session_id().to_string();
                sessions.get_mut(&id).ok_or_else(|| corrupt(format!("record for unknown session {id}")))?.apply(other);
            }
        }
    }
    Ok(order.into_iter().filter_map(|id| sessions.remove(&id)).collect())
}

/// Rewrites the log as one snapshot per session via a temporary file.
fn compact(path: &Path, sessions: &[Session]) -> Result<(), ServiceError> {
    let tmp = path.with_extension("jsonl.tmp");
    let write = || -> std::io::Result<()> {
        let mut out = BufWriter::new(File::create(&tmp)?);
        for session in sessions {
            serde_json::to_writer(&mut out, &Record::Snapshot { session: session.clone() })?;
            out.write_all(b"\n")?;
        }
        out.into_inner().map_err(|e| e.into_error())?.sync_all()?;
        std::fs::rename(&tmp, path)
    };
    write().map_err(|e| ServiceError::store(path, e))
}
