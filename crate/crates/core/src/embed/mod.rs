//! Text embeddings: a pluggable provider interface, vector arithmetic, a
//! deterministic offline provider for tests, a remote HTTP provider, and an
//! append-only cache.
//!
//! All similarity math downstream runs on cosine similarity. Note the cosine
//! here is the standard dot-over-norms form; the scoring formula documents
//! treat higher as more similar.

pub mod cache;
pub mod deterministic;
pub mod remote;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cache::{CachedProvider, EmbeddingCache};
pub use deterministic::DeterministicProvider;
pub use remote::RemoteProvider;

/// Default embedding dimension (the sentence-transformer family default).
pub const DEFAULT_DIM: usize = 384;

/// Default embedding model name requested from remote providers.
pub const DEFAULT_MODEL: &str = "all-MiniLM-L6-v2";

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("embedding dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("cosine similarity of a zero vector is undefined")]
    ZeroVector,
    #[error("cannot embed empty text (batch item {index})")]
    EmptyText { index: usize },
    #[error("embedding provider unavailable: {reason}")]
    ProviderUnavailable { reason: String },
    #[error("embedding provider returned a bad response: {reason}")]
    BadResponse { reason: String },
    #[error("vector contains a non-finite component")]
    NonFinite,
    #[error("embedding cache at {path}: {reason}")]
    Cache { path: String, reason: String },
    #[error("invalid embedding config: {0}")]
    Config(String),
}

/// A fixed-dimension dense vector. Construction rejects empty and non-finite
/// data, so every value in circulation is usable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector {
    values: Vec<f32>,
}

impl EmbeddingVector {
    pub fn new(values: Vec<f32>) -> Result<Self, EmbedError> {
        if values.is_empty() {
            return Err(EmbedError::Config("empty embedding vector".into()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(EmbedError::NonFinite);
        }
        Ok(EmbeddingVector { values })
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn l2_norm(&self) -> f64 {
        self.values
            .iter()
            .map(|v| *v as f64 * *v as f64)
            .sum::<f64>()
            .sqrt()
    }
}

/// Standard cosine similarity in f64, clamped into [-1, 1] against rounding.
///
/// Bitwise-identical vectors short-circuit to exactly 1.0 so self-similarity
/// is exact regardless of accumulated rounding.
pub fn cosine_similarity(a: &EmbeddingVector, b: &EmbeddingVector) -> Result<f64, EmbedError> {
    if a.dim() != b.dim() {
        return Err(EmbedError::DimensionMismatch {
            left: a.dim(),
            right: b.dim(),
        });
    }
    if a.values == b.values {
        if a.l2_norm() == 0.0 {
            return Err(EmbedError::ZeroVector);
        }
        return Ok(1.0);
    }
    let mut dot = 0.0f64;
    let mut norm_a = 0.0f64;
    let mut norm_b = 0.0f64;
    for (x, y) in a.values.iter().zip(&b.values) {
        let (x, y) = (*x as f64, *y as f64);
        dot += x * y;
        norm_a += x * x;
        norm_b += y * y;
    }
    if norm_a == 0.0 || norm_b == 0.0 {
        return Err(EmbedError::ZeroVector);
    }
    Ok((dot / (norm_a.sqrt() * norm_b.sqrt())).clamp(-1.0, 1.0))
}

/// Which embedding implementation to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderKind {
    /// JSON-over-HTTP embeddings endpoint.
    Remote,
    /// Seeded token-hash embeddings; offline and fully reproducible.
    Deterministic,
}

/// Provider configuration; see module docs for the environment overrides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingConfig {
    pub kind: ProviderKind,
    pub endpoint: String,
    pub model: String,
    pub dim: usize,
    pub timeout_secs: u64,
    pub max_retries: u32,
    /// Seed for the deterministic provider.
    pub seed: u64,
    /// Maximum texts per remote request.
    pub batch_size: usize,
    /// Maximum concurrent remote batches.
    pub parallelism: usize,
    /// API key, read from the environment; never serialized.
    #[serde(skip)]
    pub api_key: Option<String>,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            kind: ProviderKind::Deterministic,
            endpoint: String::new(),
            model: DEFAULT_MODEL.into(),
            dim: DEFAULT_DIM,
            timeout_secs: 30,
            max_retries: 3,
            seed: 0,
            batch_size: 64,
            parallelism: 4,
            api_key: None,
        }
    }
}

impl EmbeddingConfig {
    pub fn validate(&self) -> Result<(), EmbedError> {
        if self.dim == 0 {
            return Err(EmbedError::Config("dim must be positive".into()));
        }
        if self.batch_size == 0 || self.parallelism == 0 {
            return Err(EmbedError::Config(
                "batch_size and parallelism must be positive".into(),
            ));
        }
        if self.kind == ProviderKind::Remote && self.endpoint.trim().is_empty() {
            return Err(EmbedError::Config(
                "remote embedding provider needs an endpoint".into(),
            ));
        }
        Ok(())
    }
}

/// A text-to-vector map with a stable identity for cache keying.
pub trait EmbeddingProvider: Send + Sync {
    /// Stable identity string; part of every cache key.
    fn id(&self) -> String;
    fn dim(&self) -> usize;
    /// Embeds a batch, order-preserving: one vector per input text.
    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError>;

    /// Convenience wrapper for a single text.
    fn embed_one(&self, text: &str) -> Result<EmbeddingVector, EmbedError> {
        let mut out = self.embed(std::slice::from_ref(&text.to_string()))?;
        Ok(out.remove(0))
    }
}

/// Rejects batches containing blank texts (shared precondition of all
/// providers).
pub(crate) fn check_texts(texts: &[String]) -> Result<(), EmbedError> {
    for (index, t) in texts.iter().enumerate() {
        if t.trim().is_empty() {
            return Err(EmbedError::EmptyText { index });
        }
    }
    Ok(())
}

/// Builds the provider described by `config`.
pub fn build_provider(config: &EmbeddingConfig) -> Result<Box<dyn EmbeddingProvider>, EmbedError> {
    config.validate()?;
    match config.kind {
        ProviderKind::Deterministic => Ok(Box::new(DeterministicProvider::new(
            config.dim,
            config.seed,
        ))),
        ProviderKind::Remote => Ok(Box::new(RemoteProvider::new(config)?)),
    }
}
