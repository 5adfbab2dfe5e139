use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CacheError {
    #[error("cache file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cache file {path} is not a JSON object of scores: {source}")]
    Format {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

type Slot = Arc<Mutex<Option<f64>>>;

/// Request key → score store with per-key single-flight.
///
/// Concurrent misses on the same key are serialized on that key's slot, so
/// only the first caller queries the backend; later callers see its result.
/// Distinct keys never block each other beyond the brief map lookup.
#[derive(Debug, Default)]
pub struct ScoreCache {
    slots: Mutex<HashMap<String, Slot>>,
}

impl ScoreCache {
    pub fn new() -> Self {
        Self::default()
    }

    fn slot(&self, key: &str) -> Slot {
        let mut slots = self.slots.lock().expect("cache map poisoned");
        slots.entry(key.to_string()).or_default().clone()
    }

    pub fn get(&self, key: &str) -> Option<f64> {
        let slots = self.slots.lock().expect("cache map poisoned");
        let slot = slots.get(key)?.clone();
        drop(slots);
        let value = *slot.lock().expect("cache slot poisoned");
        value
    }

    pub fn insert(&self, key: &str, score: f64) {
        let slot = self.slot(key);
        *slot.lock().expect("cache slot poisoned") = Some(score.clamp(0.0, 1.0));
    }

    /// Returns the cached score, or runs `compute` and caches a `Some` result.
    /// The flag is true on a cache hit.
    pub fn get_or_try_insert_with(&self, key: &str, compute: impl FnOnce() -> Option<f64>) -> (Option<f64>, bool) {
        let slot = self.slot(key);
        let mut guard = slot.lock().expect("cache slot poisoned");
        if let Some(v) = *guard {
            return (Some(v), true);
        }
        let computed = compute().map(|s| s.clamp(0.0, 1.0));
        if computed.is_some() {
            *guard = computed;
        }
        (computed, false)
    }

    pub fn len(&self) -> usize {
        self.snapshot().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All populated entries, sorted by key.
    pub fn snapshot(&self) -> BTreeMap<String, f64> {
        let slots: Vec<(String, Slot)> = {
            let map = self.slots.lock().expect("cache map poisoned");
            map.iter().map(|(k, v)| (k.clone(), v.clone())).collect()
        };
        slots
            .into_iter()
            .filter_map(|(k, slot)| {
                let v = *slot.lock().expect("cache slot poisoned");
                v.map(|v| (k, v))
            })
            .collect()
    }

    /// Loads a cache file; a missing file yields an empty cache.
    pub fn load(path: &Path) -> Result<Self, CacheError> {
        let cache = ScoreCache::new();
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(cache),
            Err(source) => {
                return Err(CacheError::Io {
                    path: path.to_path_buf(),
                    source,
                })
            }
        };
        let entries: BTreeMap<String, f64> = serde_json::from_str(&text).map_err(|source| CacheError::Format {
            path: path.to_path_buf(),
            source,
        })?;
        for (k, v) in entries {
            cache.insert(&k, v);
        }
        Ok(cache)
    }

    pub fn save(&self, path: &Path) -> Result<(), CacheError> {
        let text = serde_json::to_string_pretty(&self.snapshot()).expect("scores serialize");
        std::fs::write(path, text).map_err(|source| CacheError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}
