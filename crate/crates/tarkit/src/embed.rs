//! Embedding providers for semantic claim similarity.
//!
//! Two providers ship with the crate: a remote HTTP client for a real
//! sentence-embedding service, and a deterministic hashed bag-of-words
//! embedder that keeps the whole pipeline runnable offline and in tests.

use serde::{Deserialize, Serialize};

use crate::store::CacheStore;

#[derive(Debug, thiserror::Error)]
pub enum EmbedError {
    #[error("embedding dimensions differ: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("cosine of a zero vector is undefined")]
    ZeroVector,
    #[error("embedding value at index {index} is not finite")]
    NotFinite { index: usize },
    #[error("empty text cannot be embedded")]
    EmptyText,
    #[error("embedding provider unavailable: {reason}")]
    ProviderUnavailable { reason: String },
}

/// A fixed-length vector of finite reals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingVector {
    values: Vec<f64>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f64>) -> Result<Self, EmbedError> {
        for (index, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(EmbedError::NotFinite { index });
            }
        }
        Ok(Self { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| *v == 0.0)
    }
}

/// Cosine similarity, clamped to `[-1, 1]` against rounding drift.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, EmbedError> {
    if a.dim() != b.dim() {
        return Err(EmbedError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    let mut dot = 0.0;
    let mut norm_a = 0.0;
    let mut norm_b = 0.0;
    for (x, y) in a.values.iter().zip(&b.values) {
        dot += x * y;
        norm_a += x * x;
        norm_b += y * y;
    }
    if norm_a == 0.0 || norm_b == 0.0 {
        return Err(EmbedError::ZeroVector);
    }
    Ok((dot / (norm_a.sqrt() * norm_b.sqrt())).clamp(-1.0, 1.0))
}

/// A deterministic sentence-embedding source. Vectors from one provider
/// share a dimension, and identical text always embeds identically.
pub trait Embedder: Send + Sync {
    /// Stable identifier, used for cache keying and config echo.
    fn id(&self) -> &str;

    fn dim(&self) -> usize;

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError>;

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        texts.iter().map(|t| self.embed(t)).collect()
    }
}

const TEST_EMBEDDER_DIM: usize = 256;

/// Hashed bag-of-words embedder: lowercased alphanumeric tokens hashed
/// (FNV-1a) into a fixed 256-bucket space, then L2-normalized. Fully
/// deterministic and dependency-free; texts with no tokens embed to the
/// zero vector.
#[derive(Debug, Default, Clone)]
pub struct TestEmbedder;

fn fnv1a(token: &str) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for byte in token.as_bytes() {
        hash ^= u64::from(*byte);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

impl Embedder for TestEmbedder {
    fn id(&self) -> &str {
        "test-bow-256"
    }

    fn dim(&self) -> usize {
        TEST_EMBEDDER_DIM
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        if text.is_empty() {
            return Err(EmbedError::EmptyText);
        }
        let mut buckets = vec![0.0f64; TEST_EMBEDDER_DIM];
        let lowered = text.to_lowercase();
        for token in lowered
            .split(|c: char| !c.is_ascii_alphanumeric())
            .filter(|t| !t.is_empty())
        {
            let bucket = (fnv1a(token) % TEST_EMBEDDER_DIM as u64) as usize;
            buckets[bucket] += 1.0;
        }
        let norm: f64 = buckets.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in &mut buckets {
                *v /= norm;
            }
        }
        EmbeddingVector::new(buckets)
    }
}

#[derive(Serialize)]
struct RemoteRequest<'a> {
    texts: &'a [&'a str],
}

#[derive(Deserialize)]
struct RemoteResponse {
    embeddings: Vec<Vec<f64>>,
}

/// Client for an HTTP embedding service that accepts a list of texts and
/// returns a list of float vectors.
pub struct RemoteEmbedder {
    id: String,
    base_url: String,
    dim: usize,
    client: reqwest::blocking::Client,
}

impl RemoteEmbedder {
    pub fn new(id: &str, base_url: &str, dim: usize) -> Result<Self, EmbedError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(std::time::Duration::from_secs(60))
            .build()
            .map_err(|e| EmbedError::ProviderUnavailable {
                reason: e.to_string(),
            })?;
        Ok(Self {
            id: id.to_string(),
            base_url: base_url.trim_end_matches('/').to_string(),
            dim,
            client,
        })
    }
}

impl Embedder for RemoteEmbedder {
    fn id(&self) -> &str {
        &self.id
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        Ok(self.embed_batch(&[text])?.pop().expect("one vector per text"))
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        if texts.iter().any(|t| t.is_empty()) {
            return Err(EmbedError::EmptyText);
        }
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let response = self
            .client
            .post(&self.base_url)
            .json(&RemoteRequest { texts })
            .send()
            .and_then(reqwest::blocking::Response::error_for_status)
            .map_err(|e| EmbedError::ProviderUnavailable {
                reason: e.to_string(),
            })?;
        let parsed: RemoteResponse =
            response.json().map_err(|e| EmbedError::ProviderUnavailable {
                reason: format!("malformed embedding response: {e}"),
            })?;
        if parsed.embeddings.len() != texts.len() {
            return Err(EmbedError::ProviderUnavailable {
                reason: format!(
                    "expected {} vectors, got {}",
                    texts.len(),
                    parsed.embeddings.len()
                ),
            });
        }
        parsed
            .embeddings
            .into_iter()
            .map(|values| {
                if values.len() != self.dim {
                    return Err(EmbedError::ProviderUnavailable {
                        reason: format!(
                            "provider returned dim {}, configured dim {}",
                            values.len(),
                            self.dim
                        ),
                    });
                }
                EmbeddingVector::new(values)
            })
            .collect()
    }
}

/// Wraps any embedder with the shared content-addressed file cache. Claims
/// repeat heavily across candidate generations, so warm caches make reward
/// computation cheap and deterministic.
pub struct CachedEmbedder<E> {
    inner: E,
    store: CacheStore,
}

#[derive(Serialize, Deserialize)]
struct CachedVector {
    provider: String,
    text: String,
    vector: Vec<f64>,
}

impl<E: Embedder> CachedEmbedder<E> {
    pub fn new(inner: E, store: CacheStore) -> Self {
        Self { inner, store }
    }
}

impl<E: Embedder> Embedder for CachedEmbedder<E> {
    fn id(&self) -> &str {
        self.inner.id()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn embed(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        let key = CacheStore::key(&["embed", self.inner.id(), text]);
        let (entry, _hit) = self
            .store
            .get_or_insert_with(&key, || {
                let vector = self.inner.embed(text)?;
                let cached = CachedVector {
                    provider: self.inner.id().to_string(),
                    text: text.to_string(),
                    vector: vector.values().to_vec(),
                };
                Ok::<String, EmbedError>(
                    serde_json::to_string(&cached).expect("cache entry serializes"),
                )
            })
            .map_err(|e| match e {
                crate::store::StoreError::Inner(inner) => inner,
                other => EmbedError::ProviderUnavailable {
                    reason: other.to_string(),
                },
            })?;
        let cached: CachedVector =
            serde_json::from_str(&entry).map_err(|e| EmbedError::ProviderUnavailable {
                reason: format!("corrupt embedding cache entry: {e}"),
            })?;
        EmbeddingVector::new(cached.vector)
    }
}
