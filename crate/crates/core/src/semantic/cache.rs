//! Append-only on-disk store of raw model responses.
//!
//! One record per line, tab separated:
//!
//! ```text
//! <sha256 hex of model + prompt>\t<model name>\t<RFC 3339 timestamp>\t<raw response as a JSON string>
//! ```

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Content address of a `(model, prompt)` request.
pub fn cache_key(model_name: &str, prompt: &str) -> String {
    let mut h = Sha256::new();
    h.update(model_name.as_bytes());
    h.update([0u8]);
    h.update(prompt.as_bytes());
    hex::encode(h.finalize())
}

#[derive(Debug, Clone, PartialEq)]
pub struct CacheRecord {
    pub key: String,
    pub model: String,
    pub timestamp: String,
    pub response: String,
}

impl CacheRecord {
    fn to_line(&self) -> Result<String> {
        Ok(format!(
            "{}\t{}\t{}\t{}\n",
            self.key,
            self.model,
            self.timestamp,
            serde_json::to_string(&self.response)?
        ))
    }

    fn from_line(line: &str) -> Option<Self> {
        let mut parts = line.splitn(4, '\t');
        let key = parts.next()?;
        let model = parts.next()?;
        let timestamp = parts.next()?;
        let response: String = serde_json::from_str(parts.next()?).ok()?;
        if key.len() != 64 || !key.bytes().all(|b| b.is_ascii_hexdigit()) {
            return None;
        }
        Some(Self {
            key: key.to_string(),
            model: model.to_string(),
            timestamp: timestamp.to_string(),
            response,
        })
    }
}

/// Thread-safe response cache. Reads are served from memory; writes append a
/// whole line under a lock.
#[derive(Debug)]
pub struct ResponseCache {
    path: PathBuf,
    inner: Mutex<HashMap<String, CacheRecord>>,
}

impl ResponseCache {
    /// Loads an existing cache file, or starts empty if it does not exist.
    /// The first record for a key wins; unreadable lines are skipped.
    pub fn open(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut map = HashMap::new();
        if path.exists() {
            let reader = BufReader::new(File::open(&path)?);
            for (i, line) in reader.lines().enumerate() {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                match CacheRecord::from_line(&line) {
                    Some(rec) => {
                        map.entry(rec.key.clone()).or_insert(rec);
                    }
                    None => tracing::warn!(path = %path.display(), line = i + 1, "skipping unreadable cache record"),
                }
            }
        }
        Ok(Self {
            path,
            inner: Mutex::new(map),
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn get(&self, key: &str) -> Option<CacheRecord> {
        self.inner.lock().expect("cache lock").get(key).cloned()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Stores a response unless the key is already present.
    pub fn insert(&self, key: &str, model: &str, response: &str) -> Result<()> {
        let mut map = self.inner.lock().expect("cache lock");
        if map.contains_key(key) {
            return Ok(());
        }
        if model.contains(['\t', '\n']) {
            return Err(Error::InvalidParameter(format!(
                "model name {model:?} cannot be stored in the cache"
            )));
        }
        let rec = CacheRecord {
            key: key.to_string(),
            model: model.to_string(),
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            response: response.to_string(),
        };
        if let Some(parent) = self.path.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        let mut file = OpenOptions::new().create(true).append(true).open(&self.path)?;
        file.write_all(rec.to_line()?.as_bytes())?;
        map.insert(rec.key.clone(), rec);
        Ok(())
    }
}
