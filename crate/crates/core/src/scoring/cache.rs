use std::collections::{HashMap, HashSet};
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};

use parking_lot::{Mutex, RwLock};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{LogLikelihood, ScoreRequest, Scorer};
use crate::error::{Error, Result};

type Key = ([u8; 32], [u8; 32]);

fn digest(text: &str) -> [u8; 32] {
    Sha256::digest(text.as_bytes()).into()
}

fn key_of(request: &ScoreRequest) -> Key {
    (digest(&request.context), digest(&request.continuation))
}

/// One line of the persistent cache file.
#[derive(Debug, Serialize, Deserialize)]
struct CacheLine {
    ck: String,
    yk: String,
    lp: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct CacheTelemetry {
    /// Every `logprob` call.
    pub requests: u64,
    pub hits: u64,
    /// Calls forwarded to the wrapped backend.
    pub misses: u64,
    /// Distinct (context, continuation) pairs requested.
    pub distinct: u64,
}

/// Memoizes a scorer on content hashes of context and continuation, with an
/// optional append-only JSONL file shared across runs.
pub struct CachedScorer<S> {
    inner: S,
    entries: RwLock<HashMap<Key, f64>>,
    seen: Mutex<HashSet<Key>>,
    file: Option<(PathBuf, Mutex<File>)>,
    requests: AtomicU64,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl<S: Scorer> CachedScorer<S> {
    pub fn new(inner: S) -> Self {
        CachedScorer {
            inner,
            entries: RwLock::new(HashMap::new()),
            seen: Mutex::new(HashSet::new()),
            file: None,
            requests: AtomicU64::new(0),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    /// Opens (or creates) a cache file and preloads its entries. Unparsable
    /// lines, such as a torn final write, are skipped.
    pub fn with_file(inner: S, path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut cache = Self::new(inner);
        if path.exists() {
            let reader = BufReader::new(File::open(&path).map_err(|e| Error::io(&path, e))?);
            let mut entries = cache.entries.write();
            for (number, line) in reader.lines().enumerate() {
                let line = line.map_err(|e| Error::io(&path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                match parse_line(&line) {
                    Some((key, lp)) => {
                        entries.insert(key, lp);
                    }
                    None => tracing::warn!(path = %path.display(), line = number + 1, "skipping bad cache line"),
                }
            }
        }
        let mut file =
            OpenOptions::new().create(true).read(true).append(true).open(&path).map_err(|e| Error::io(&path, e))?;
        if ends_mid_line(&mut file).map_err(|e| Error::io(&path, e))? {
            file.write_all(b"\n").map_err(|e| Error::io(&path, e))?;
        }
        cache.file = Some((path, Mutex::new(file)));
        Ok(cache)
    }

    pub fn inner(&self) -> &S {
        &self.inner
    }

    pub fn len(&self) -> usize {
        self.entries.read().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn telemetry(&self) -> CacheTelemetry {
        CacheTelemetry {
            requests: self.requests.load(Ordering::Relaxed),
            hits: self.hits.load(Ordering::Relaxed),
            misses: self.misses.load(Ordering::Relaxed),
            distinct: self.seen.lock().len() as u64,
        }
    }

    /// Zeroes the counters; cached values are kept.
    pub fn reset_telemetry(&self) {
        self.requests.store(0, Ordering::Relaxed);
        self.hits.store(0, Ordering::Relaxed);
        self.misses.store(0, Ordering::Relaxed);
        self.seen.lock().clear();
    }

    fn persist(&self, key: &Key, lp: f64) -> Result<()> {
        let Some((path, file)) = &self.file else {
            return Ok(());
        };
        let line = CacheLine { ck: hex::encode(key.0), yk: hex::encode(key.1), lp };
        let mut text = serde_json::to_string(&line)?;
        text.push('\n');
        file.lock().write_all(text.as_bytes()).map_err(|e| Error::io(path, e))
    }
}

fn ends_mid_line(file: &mut File) -> std::io::Result<bool> {
    use std::io::{Read, Seek, SeekFrom};
    if file.metadata()?.len() == 0 {
        return Ok(false);
    }
    file.seek(SeekFrom::End(-1))?;
    let mut last = [0u8; 1];
    file.read_exact(&mut last)?;
    Ok(last[0] != b'\n')
}

fn parse_line(line: &str) -> Option<(Key, f64)> {
    let line: CacheLine = serde_json::from_str(line).ok()?;
    let ck = hex::decode(&line.ck).ok()?.try_into().ok()?;
    let yk = hex::decode(&line.yk).ok()?.try_into().ok()?;
    line.lp.is_finite().then_some(((ck, yk), line.lp))
}

impl<S: Scorer> Scorer for CachedScorer<S> {
    fn logprob(&self, request: &ScoreRequest) -> Result<LogLikelihood> {
        let key = key_of(request);
        self.requests.fetch_add(1, Ordering::Relaxed);
        self.seen.lock().insert(key);
        if let Some(&lp) = self.entries.read().get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return Ok(LogLikelihood(lp));
        }
        self.misses.fetch_add(1, Ordering::Relaxed);
        let lp = self.inner.logprob(request)?;
        // Racing writers store the same deterministic value.
        self.entries.write().insert(key, lp.value());
        self.persist(&key, lp.value())?;
        Ok(lp)
    }
}
