//! Offline embedding provider: token hashing folded into `dim` buckets,
//! then L2-normalized. A pure function of (text, dim, seed), so tests and
//! golden files never depend on a network service.
//!
//! The vectors carry no semantic meaning beyond "equal texts embed equally,
//! sharing tokens raises similarity", which is exactly what deterministic
//! pipeline tests need.

use super::{check_texts, EmbedError, EmbeddingProvider, EmbeddingVector};

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x1000_0000_01b3;

#[derive(Debug, Clone)]
pub struct DeterministicProvider {
    dim: usize,
    seed: u64,
}

impl DeterministicProvider {
    pub fn new(dim: usize, seed: u64) -> Self {
        DeterministicProvider { dim, seed }
    }

    fn embed_text(&self, text: &str) -> EmbeddingVector {
        let mut acc = vec![0.0f64; self.dim];
        let lower = text.to_lowercase();
        let mut any_token = false;
        for token in lower
            .split(|c: char| !c.is_ascii_alphanumeric())
            .filter(|t| !t.is_empty())
        {
            any_token = true;
            self.fold_token(token.as_bytes(), &mut acc);
        }
        if !any_token {
            // Texts made entirely of punctuation still get a vector.
            self.fold_token(lower.trim().as_bytes(), &mut acc);
        }
        if acc.iter().all(|v| *v == 0.0) {
            // Opposite-signed collisions cancelled everything; pin one
            // component so the vector stays usable for cosine.
            let h = self.hash(lower.trim().as_bytes());
            acc[(h % self.dim as u64) as usize] = 1.0;
        }
        let norm = acc.iter().map(|v| v * v).sum::<f64>().sqrt();
        let values = acc.iter().map(|v| (*v / norm) as f32).collect();
        EmbeddingVector::new(values).expect("normalized vector is finite and non-empty")
    }

    fn fold_token(&self, token: &[u8], acc: &mut [f64]) {
        let h = self.hash(token);
        let bucket = (h % self.dim as u64) as usize;
        let sign = if h >> 63 == 0 { 1.0 } else { -1.0 };
        acc[bucket] += sign;
    }

    /// FNV-1a with the seed folded into the offset basis.
    fn hash(&self, bytes: &[u8]) -> u64 {
        let mut h = FNV_OFFSET ^ self.seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
        for b in bytes {
            h ^= *b as u64;
            h = h.wrapping_mul(FNV_PRIME);
        }
        h
    }
}

impl EmbeddingProvider for DeterministicProvider {
    fn id(&self) -> String {
        format!("deterministic/dim{}/seed{}", self.dim, self.seed)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        check_texts(texts)?;
        Ok(texts.iter().map(|t| self.embed_text(t)).collect())
    }
}
