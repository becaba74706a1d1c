use std::path::{Path, PathBuf};

use attrib_core::chat::ChatBackendConfig;
use attrib_core::scoring::ScorerBackendConfig;
use serde::{Deserialize, Serialize};

use crate::ServiceError;

/// Service configuration, read from one TOML file.
///
/// ```toml
/// listen = "127.0.0.1:8080"
/// store_path = "sessions.jsonl"
///
/// [scorer]
/// kind = "lexical"
///
/// [chat]
/// kind = "scripted"
/// script_path = "script.txt"
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub listen: String,
    pub store_path: PathBuf,
    /// Persistent score cache; in-memory only when absent.
    pub cache_path: Option<PathBuf>,
    pub scorer: ScorerBackendConfig,
    pub chat: ChatBackendConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            listen: "127.0.0.1:8080".into(),
            store_path: PathBuf::from("sessions.jsonl"),
            cache_path: None,
            scorer: ScorerBackendConfig::default(),
            chat: ChatBackendConfig::default(),
        }
    }
}

impl ServiceConfig {
    pub fn from_toml(text: &str) -> Result<Self, ServiceError> {
        toml::from_str(text).map_err(|e| ServiceError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ServiceError> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| ServiceError::Config(format!("{}: {e}", path.display())))
    }

    /// Relative paths inside the file resolve against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut self.store_path);
        if let Some(p) = self.cache_path.as_mut() {
            resolve(p);
        }
        if let Some(p) = self.chat.script_path.as_mut() {
            resolve(p);
        }
    }

    pub fn validate(&self) -> Result<(), ServiceError> {
        self.listen
            .parse::<std::net::SocketAddr>()
            .map_err(|e| ServiceError::Config(format!("listen address {:?}: {e}", self.listen)))?;
        self.scorer.validate()?;
        self.chat.validate()?;
        Ok(())
    }
}
