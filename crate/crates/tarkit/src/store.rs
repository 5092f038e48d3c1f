//! Content-addressed file store shared by the judge gateway and the
//! embedding cache. One entry per file, filename = key hex; concurrent
//! readers are free, and concurrent misses for one key coalesce into a
//! single upstream computation.

use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Condvar, Mutex};

use sha2::{Digest, Sha256};

/// Store failures: IO from the filesystem, or an error from the closure
/// computing a missing entry.
#[derive(Debug, thiserror::Error)]
pub enum StoreError<E> {
    #[error("cache store io error: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    Inner(E),
}

struct StoreInner {
    dir: PathBuf,
    inflight: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

/// A directory of content-addressed entries.
#[derive(Clone)]
pub struct CacheStore {
    inner: Arc<StoreInner>,
}

impl CacheStore {
    pub fn new(dir: impl AsRef<Path>) -> io::Result<Self> {
        let dir = dir.as_ref().to_path_buf();
        fs::create_dir_all(&dir)?;
        Ok(Self {
            inner: Arc::new(StoreInner {
                dir,
                inflight: Mutex::new(HashMap::new()),
            }),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.inner.dir
    }

    /// Hex SHA-256 over the parts, separated by an unambiguous delimiter.
    pub fn key(parts: &[&str]) -> String {
        let mut hasher = Sha256::new();
        for (i, part) in parts.iter().enumerate() {
            if i > 0 {
                hasher.update([0x1f]);
            }
            hasher.update(part.as_bytes());
        }
        hex::encode(hasher.finalize())
    }

    fn path_for(&self, key: &str) -> PathBuf {
        self.inner.dir.join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> io::Result<Option<String>> {
        match fs::read_to_string(self.path_for(key)) {
            Ok(content) => Ok(Some(content)),
            Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(e),
        }
    }

    /// Writes an entry via a temporary file and rename, so readers never
    /// observe partial content.
    pub fn put(&self, key: &str, value: &str) -> io::Result<()> {
        let final_path = self.path_for(key);
        let tmp_path = self.inner.dir.join(format!(".{key}.tmp"));
        fs::write(&tmp_path, value)?;
        fs::rename(&tmp_path, final_path)
    }

    /// Returns the cached entry for `key`, computing and storing it with
    /// `f` on a miss. The boolean is true on a cache hit. Concurrent misses
    /// for the same key run `f` once; the losers observe the winner's write.
    pub fn get_or_insert_with<E>(
        &self,
        key: &str,
        f: impl FnOnce() -> Result<String, E>,
    ) -> Result<(String, bool), StoreError<E>> {
        if let Some(existing) = self.get(key)? {
            return Ok((existing, true));
        }

        let gate = {
            let mut inflight = self.inner.inflight.lock().expect("inflight lock");
            inflight
                .entry(key.to_string())
                .or_insert_with(|| Arc::new(Mutex::new(())))
                .clone()
        };
        let _guard = gate.lock().expect("per-key gate lock");

        // A coalesced peer may have filled the entry while we waited.
        if let Some(existing) = self.get(key)? {
            return Ok((existing, true));
        }

        let result = f()
            .map_err(StoreError::Inner)
            .and_then(|value| {
                self.put(key, &value)?;
                Ok((value, false))
            });
        // Only drop the in-flight entry once the write is visible (or has
        // failed), so late arrivals cannot recompute behind our back.
        let mut inflight = self.inner.inflight.lock().expect("inflight lock");
        inflight.remove(key);
        result
    }
}

/// Minimal counting semaphore used to cap concurrent upstream calls.
pub struct Semaphore {
    permits: Mutex<usize>,
    available: Condvar,
}

impl Semaphore {
    pub fn new(permits: usize) -> Self {
        Self {
            permits: Mutex::new(permits.max(1)),
            available: Condvar::new(),
        }
    }

    pub fn acquire(&self) -> SemaphoreGuard<'_> {
        let mut permits = self.permits.lock().expect("semaphore lock");
        while *permits == 0 {
            permits = self.available.wait(permits).expect("semaphore wait");
        }
        *permits -= 1;
        SemaphoreGuard { semaphore: self }
    }
}

pub struct SemaphoreGuard<'a> {
    semaphore: &'a Semaphore,
}

impl Drop for SemaphoreGuard<'_> {
    fn drop(&mut self) {
        let mut permits = self.semaphore.permits.lock().expect("semaphore lock");
        *permits += 1;
        self.semaphore.available.notify_one();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    #[test]
    fn keys_are_order_sensitive_and_unambiguous() {
        let a = CacheStore::key(&["ab", "c"]);
        let b = CacheStore::key(&["a", "bc"]);
        let c = CacheStore::key(&["c", "ab"]);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, CacheStore::key(&["ab", "c"]));
    }

    #[test]
    fn get_or_insert_computes_once() {
        let dir = tempfile::tempdir().unwrap();
        let store = CacheStore::new(dir.path()).unwrap();
        let calls = AtomicUsize::new(0);
        let compute = || {
            calls.fetch_add(1, Ordering::SeqCst);
            Ok::<_, std::convert::Infallible>("value".to_string())
        };
        let (first, hit1) = store.get_or_insert_with("k", compute).unwrap();
        assert_eq!(first, "value");
        assert!(!hit1);
        let (second, hit2) = store
            .get_or_insert_with("k", || {
                calls.fetch_add(1, Ordering::SeqCst);
                Ok::<_, std::convert::Infallible>("other".to_string())
            })
            .unwrap();
        assert_eq!(second, "value");
        assert!(hit2);
        assert_eq!(calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn concurrent_misses_coalesce() {
        let dir = tempfile::tempdir().unwrap();
        let store = CacheStore::new(dir.path()).unwrap();
        let calls = Arc::new(AtomicUsize::new(0));

        std::thread::scope(|scope| {
            for _ in 0..8 {
                let store = store.clone();
                let calls = calls.clone();
                scope.spawn(move || {
                    let (value, _) = store
                        .get_or_insert_with("shared", || {
                            calls.fetch_add(1, Ordering::SeqCst);
                            std::thread::sleep(std::time::Duration::from_millis(20));
                            Ok::<_, std::convert::Infallible>("slow".to_string())
                        })
                        .unwrap();
                    assert_eq!(value, "slow");
                });
            }
        });
        assert_eq!(calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn failed_computation_is_not_cached() {
        let dir = tempfile::tempdir().unwrap();
        let store = CacheStore::new(dir.path()).unwrap();
        let err = store
            .get_or_insert_with("k", || Err::<String, _>("boom"))
            .unwrap_err();
        assert!(matches!(err, StoreError::Inner("boom")));
        let (value, hit) = store
            .get_or_insert_with("k", || Ok::<_, &str>("recovered".to_string()))
            .unwrap();
        assert_eq!(value, "recovered");
        assert!(!hit);
    }

    #[test]
    fn semaphore_caps_concurrency() {
        let semaphore = Arc::new(Semaphore::new(2));
        let active = Arc::new(AtomicUsize::new(0));
        let peak = Arc::new(AtomicUsize::new(0));
        std::thread::scope(|scope| {
            for _ in 0..6 {
                let semaphore = semaphore.clone();
                let active = active.clone();
                let peak = peak.clone();
                scope.spawn(move || {
                    let _permit = semaphore.acquire();
                    let now = active.fetch_add(1, Ordering::SeqCst) + 1;
                    peak.fetch_max(now, Ordering::SeqCst);
                    std::thread::sleep(std::time::Duration::from_millis(10));
                    active.fetch_sub(1, Ordering::SeqCst);
                });
            }
        });
        assert!(peak.load(Ordering::SeqCst) <= 2);
    }
}
