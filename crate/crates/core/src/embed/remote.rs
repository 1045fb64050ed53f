//! Remote embedding provider speaking a minimal JSON-over-HTTP protocol.
//!
//! Request body: `{"model": "...", "input": ["text", ...]}`.
//! Accepted response shapes: `{"data": [{"embedding": [...], "index": 0}, ...]}`
//! (index optional) or the flatter `{"embeddings": [[...], ...]}`.
//! Endpoint, model, and API key come from configuration; any compatible
//! inference service works.

use std::time::Duration;

use serde_json::Value;

use super::{check_texts, EmbedError, EmbeddingConfig, EmbeddingProvider, EmbeddingVector};

pub struct RemoteProvider {
    agent: ureq::Agent,
    endpoint: String,
    model: String,
    dim: usize,
    max_retries: u32,
    batch_size: usize,
    parallelism: usize,
    api_key: Option<String>,
}

impl RemoteProvider {
    pub fn new(config: &EmbeddingConfig) -> Result<Self, EmbedError> {
        config.validate()?;
        let agent_config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .build();
        Ok(RemoteProvider {
            agent: agent_config.new_agent(),
            endpoint: config.endpoint.clone(),
            model: config.model.clone(),
            dim: config.dim,
            max_retries: config.max_retries,
            batch_size: config.batch_size,
            parallelism: config.parallelism,
            api_key: config.api_key.clone(),
        })
    }

    fn embed_batch(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        let body = serde_json::json!({ "model": self.model, "input": texts });
        let mut attempt = 0u32;
        loop {
            match self.post_once(&body) {
                Ok(vectors) => return self.validate_batch(texts.len(), vectors),
                Err(e) if retryable(&e) && attempt < self.max_retries => {
                    let backoff = Duration::from_millis(100u64.saturating_mul(1 << attempt.min(6)));
                    std::thread::sleep(backoff);
                    attempt += 1;
                }
                Err(e) => {
                    return Err(EmbedError::ProviderUnavailable {
                        reason: format!("{} (after {attempt} retries): {e}", self.endpoint),
                    })
                }
            }
        }
    }

    fn post_once(&self, body: &Value) -> Result<Vec<Vec<f32>>, ureq::Error> {
        let mut request = self.agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            request = request.header("authorization", &format!("Bearer {key}"));
        }
        let mut response = request.send_json(body)?;
        let value: Value = response.body_mut().read_json()?;
        Ok(parse_vectors(&value))
    }

    fn validate_batch(
        &self,
        expected: usize,
        vectors: Vec<Vec<f32>>,
    ) -> Result<Vec<EmbeddingVector>, EmbedError> {
        if vectors.len() != expected {
            return Err(EmbedError::BadResponse {
                reason: format!("asked for {expected} embeddings, got {}", vectors.len()),
            });
        }
        vectors
            .into_iter()
            .map(|v| {
                if v.len() != self.dim {
                    return Err(EmbedError::BadResponse {
                        reason: format!("expected dim {}, got {}", self.dim, v.len()),
                    });
                }
                EmbeddingVector::new(v)
            })
            .collect()
    }
}

impl EmbeddingProvider for RemoteProvider {
    fn id(&self) -> String {
        format!("remote/{}/dim{}", self.model, self.dim)
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, texts: &[String]) -> Result<Vec<EmbeddingVector>, EmbedError> {
        check_texts(texts)?;
        if texts.is_empty() {
            return Ok(Vec::new());
        }
        let chunks: Vec<&[String]> = texts.chunks(self.batch_size).collect();
        let mut results: Vec<Option<Result<Vec<EmbeddingVector>, EmbedError>>> =
            (0..chunks.len()).map(|_| None).collect();
        // Fire at most `parallelism` batches at a time; order is restored by
        // slot position, so concurrency never reorders outputs.
        for (wave_start, wave) in chunks
            .chunks(self.parallelism)
            .enumerate()
            .map(|(i, w)| (i * self.parallelism, w))
        {
            let wave_results: Vec<_> = std::thread::scope(|scope| {
                let handles: Vec<_> = wave
                    .iter()
                    .map(|chunk| scope.spawn(|| self.embed_batch(chunk)))
                    .collect();
                handles.into_iter().map(|h| h.join().expect("embed batch panicked")).collect()
            });
            for (offset, r) in wave_results.into_iter().enumerate() {
                results[wave_start + offset] = Some(r);
            }
        }
        let mut out = Vec::with_capacity(texts.len());
        for slot in results {
            out.extend(slot.expect("every batch slot filled")?);
        }
        Ok(out)
    }
}

/// Pulls vectors out of either accepted response shape, preserving order
/// (explicit `index` fields win when present).
fn parse_vectors(value: &Value) -> Vec<Vec<f32>> {
    if let Some(data) = value.get("data").and_then(Value::as_array) {
        let mut indexed: Vec<(usize, Vec<f32>)> = data
            .iter()
            .enumerate()
            .filter_map(|(i, item)| {
                let vec = item.get("embedding").and_then(Value::as_array)?;
                let index = item
                    .get("index")
                    .and_then(Value::as_u64)
                    .map(|v| v as usize)
                    .unwrap_or(i);
                Some((index, to_f32s(vec)))
            })
            .collect();
        indexed.sort_by_key(|(i, _)| *i);
        return indexed.into_iter().map(|(_, v)| v).collect();
    }
    if let Some(embeddings) = value.get("embeddings").and_then(Value::as_array) {
        return embeddings
            .iter()
            .filter_map(|e| e.as_array().map(|v| to_f32s(v)))
            .collect();
    }
    Vec::new()
}

fn to_f32s(values: &[Value]) -> Vec<f32> {
    values
        .iter()
        .map(|v| v.as_f64().unwrap_or(f64::NAN) as f32)
        .collect()
}

fn retryable(err: &ureq::Error) -> bool {
    match err {
        ureq::Error::StatusCode(code) => *code == 429 || *code >= 500,
        ureq::Error::Io(_) | ureq::Error::Timeout(_) | ureq::Error::ConnectionFailed => true,
        _ => false,
    }
}
