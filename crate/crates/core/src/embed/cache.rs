//! Append-only embedding cache.
//!
//! File format: one JSON object per line. The first line is a header
//! (`{"format":"embedding-cache","version":1}`); every other line is an
//! entry `{key, dim, values}`. Keys are SHA-256 over provider identity and
//! text, so one file can safely serve several providers. A truncated final
//! line (interrupted writer) is tolerated on load and overwritten by later
//! appends.

use std::collections::HashMap;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{check_texts, EmbedError, EmbeddingProvider, EmbeddingVector};

const CACHE_FORMAT: &str = "embedding-cache";
const CACHE_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct CacheHeader {
    format: String,
    version: u32,
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheEntry {
    key: String,
    dim: usize,
    values: Vec<f32>,
}

/// In-memory map over the append-only cache file. Writes are serialized by
/// a mutex so concurrent embedding batches cannot interleave lines.
pub struct EmbeddingCache {
    path: PathBuf,
    state: Mutex<CacheState>,
}

struct CacheState {
    entries: HashMap<String, EmbeddingVector>,
    file: std::fs::File,
}

impl EmbeddingCache {
    /// Opens (or creates) the cache file, loading every valid entry.
    pub fn open(path: &Path) -> Result<Self, EmbedError> {
        let display = path.display().to_string();
        let io_err = |e: std::io::Error| EmbedError::Cache {
            path: display.clone(),
            reason: e.to_string(),
        };
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent).map_err(io_err)?;
            }
        }
        let mut entries = HashMap::new();
        let exists = path.exists();
        if exists {
            let file = std::fs::File::open(path).map_err(io_err)?;
            let mut lines = std::io::BufReader::new(file).lines();
            let header_line = lines
                .next()
                .transpose()
                .map_err(io_err)?
                .unwrap_or_default();
            let header: CacheHeader =
                serde_json::from_str(&header_line).map_err(|_| EmbedError::Cache {
                    path: display.clone(),
                    reason: "missing or malformed cache header".into(),
                })?;
            if header.format != CACHE_FORMAT || header.version != CACHE_VERSION {
                return Err(EmbedError::Cache {
                    path: display.clone(),
                    reason: format!(
                        "unsupported cache format {}/{} (want {CACHE_FORMAT}/{CACHE_VERSION})",
                        header.format, header.version
                    ),
                });
            }
            for line in lines {
                let line = line.map_err(io_err)?;
                if line.trim().is_empty() {
                    continue;
                }
                // A torn trailing line from an interrupted writer is not
                // fatal; the entry is simply not cached.
                let Ok(entry) = serde_json::from_str::<CacheEntry>(&line) else {
                    continue;
                };
                if let Ok(vector) = EmbeddingVector::new(entry.values) {
                    if vector.dim() == entry.dim {
                        entries.insert(entry.key, vector);
                    }
                }
            }
        }
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(io_err)?;
        if !exists {
            let header = serde_json::to_string(&CacheHeader {
                format: CACHE_FORMAT.into(),
                version: CACHE_VERSION,
            })
            .expect("header serializes");
            writeln!(file, "{header}").map_err(io_err)?;
        }
        Ok(EmbeddingCache {
            path: path.to_path_buf(),
            state: Mutex::new(CacheState { entries, file }),
        })
    }

    /// Cache key for one (provider, text) pair.
    pub fn key(provider_id: &str, text: &str) -> String {
        let mut hasher = Sha256::new();
        hasher.update(provider_id.as_bytes());
        hasher.update([0u8]);
        hasher.update(text.as_bytes());
        hex(&hasher.finalize())
    }

    pub fn len(&self) -> usize {
        self.state.lock().expect("cache lock").entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, key: &str) -> Option<EmbeddingVector> {
        self.state
            .lock()
            .expect("cache lock")
            .entries
            .get(key)
            .cloned()
    }

    pub fn put(&self, key: String, vector: EmbeddingVector) -> Result<(), EmbedError> {
        let mut state = self.state.lock().expect("cache lock");
        if state.entries.contains_key(&key) {
            return Ok(());
        }
        let line = serde_json::to_string(&CacheEntry {
            key: key.clone(),
            dim: vector.dim(),
            values: vector.values().to_vec(),
        })
        .expect("cache entry serializes");
        writeln!(state.file, "{line}").map_err(|e| EmbedError::Cache {
            path: self.path.display().to_string(),
            reason: e.to_string(),
        })?;
        state.entries.insert(key, vector);
        Ok(())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Wraps a provider with the cache: hits are served locally, misses go to
/// the inner provider in one batch and are persisted on return.
pub struct CachedProvider {
    inner: Box<dyn EmbeddingProvider>,
    cache: EmbeddingCache,
}

impl CachedProvider {
    pub fn new(inner: Box<dyn EmbeddingProvider>, cache: EmbeddingCache) -> Self {
        CachedProvider { inner, cache }
    }

    pub fn cache(&self) -> &EmbeddingCache {
        &self.cache
    }
}

impl EmbeddingProvider for CachedProvider {
    fn id(&self) -> String {
        self.inner.id()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        check_texts(texts)?;
        let provider_id = self.inner.id();
        let keys: Vec<String> = texts
            .iter()
            .map(|t| EmbeddingCache::key(&provider_id, t))
            .collect();
        let mut out: Vec<Option<EmbeddingVector>> =
            keys.iter().map(|k| self.cache.get(k)).collect();
        let missing: Vec<usize> = (0..texts.len()).filter(|i| out[*i].is_none()).collect();
        if !missing.is_empty() {
            let miss_texts: Vec<String> = missing.iter().map(|i| texts[*i].clone()).collect();
            let fetched = self.inner.embed(&miss_texts).map_err(|e| match e {
                EmbedError::ProviderUnavailable { reason } => {
                    let mut sample: Vec<&str> =
                        miss_texts.iter().take(3).map(|t| t.as_str()).collect();
                    if miss_texts.len() > 3 {
                        sample.push("...");
                    }
                    EmbedError::ProviderUnavailable {
                        reason: format!(
                            "{reason}; {} uncached text(s) could not be embedded: {:?}",
                            miss_texts.len(),
                            sample
                        ),
                    }
                }
                other => other,
            })?;
            for (slot, vector) in missing.iter().zip(fetched) {
                self.cache.put(keys[*slot].clone(), vector.clone())?;
                out[*slot] = Some(vector);
            }
        }
        Ok(out.into_iter().map(|v| v.expect("slot filled")).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::super::DeterministicProvider;
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    /// Counts calls through to the inner provider.
    struct CountingProvider {
        inner: DeterministicProvider,
        calls: Arc<AtomicUsize>,
        fail: bool,
    }

    impl EmbeddingProvider for CountingProvider {
        fn id(&self) -> String {
            self.inner.id()
        }
        fn dim(&self) -> usize {
            self.inner.dim()
        }
        fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
            self.calls.fetch_add(1, Ordering::SeqCst);
            if self.fail {
                return Err(EmbedError::ProviderUnavailable {
                    reason: "offline".into(),
                });
            }
            self.inner.embed(texts)
        }
    }

    fn counting(fail: bool) -> (Box<CountingProvider>, Arc<AtomicUsize>) {
        let calls = Arc::new(AtomicUsize::new(0));
        let provider = Box::new(CountingProvider {
            inner: DeterministicProvider::new(16, 3),
            calls: Arc::clone(&calls),
            fail,
        });
        (provider, calls)
    }

    #[test]
    fn cache_round_trips_across_reopen() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("embeddings.cache");
        let direct = DeterministicProvider::new(16, 3);
        let expected = direct.embed_one("hello world").unwrap();
        {
            let (inner, _) = counting(false);
            let cached = CachedProvider::new(inner, EmbeddingCache::open(&path).unwrap());
            assert_eq!(cached.embed_one("hello world").unwrap(), expected);
        }
        // Second process: inner provider must not be consulted.
        let (inner, calls) = counting(false);
        let cached = CachedProvider::new(inner, EmbeddingCache::open(&path).unwrap());
        assert_eq!(cached.embed_one("hello world").unwrap(), expected);
        assert_eq!(calls.load(Ordering::SeqCst), 0);
    }

    #[test]
    fn warm_cache_survives_provider_outage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("embeddings.cache");
        let (warm_inner, _) = counting(false);
        let warm = CachedProvider::new(warm_inner, EmbeddingCache::open(&path).unwrap());
        warm.embed(&["a".into(), "b".into()]).unwrap();
        let (cold_inner, _) = counting(true);
        let cold = CachedProvider::new(cold_inner, EmbeddingCache::open(&path).unwrap());
        assert!(cold.embed(&["a".into(), "b".into()]).is_ok());
        // An uncached text now fails and names what was missing.
        match cold.embed(&["a".into(), "new text".into()]) {
            Err(EmbedError::ProviderUnavailable { reason }) => {
                assert!(reason.contains("new text"), "{reason}");
                assert!(reason.contains("1 uncached"), "{reason}");
            }
            other => panic!("expected ProviderUnavailable, got {other:?}"),
        }
    }

    #[test]
    fn torn_trailing_line_is_tolerated() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("embeddings.cache");
        {
            let cache = EmbeddingCache::open(&path).unwrap();
            cache
                .put(
                    "k1".into(),
                    EmbeddingVector::new(vec![1.0, 0.0]).unwrap(),
                )
                .unwrap();
        }
        let mut bytes = std::fs::read(&path).unwrap();
        bytes.extend_from_slice(b"{\"key\":\"k2\",\"dim\":2,\"val"); // torn write
        std::fs::write(&path, bytes).unwrap();
        let cache = EmbeddingCache::open(&path).unwrap();
        assert_eq!(cache.len(), 1);
        assert!(cache.get("k1").is_some());
    }

    #[test]
    fn wrong_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.cache");
        std::fs::write(&path, "{\"format\":\"other\",\"version\":9}\n").unwrap();
        assert!(matches!(
            EmbeddingCache::open(&path),
            Err(EmbedError::Cache { .. })
        ));
    }

    #[test]
    fn keys_separate_providers_and_texts() {
        let k1 = EmbeddingCache::key("p1", "text");
        let k2 = EmbeddingCache::key("p2", "text");
        let k3 = EmbeddingCache::key("p1", "other");
        assert_ne!(k1, k2);
        assert_ne!(k1, k3);
        assert_eq!(k1.len(), 64);
    }
}
