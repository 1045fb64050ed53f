//! Chat-completion gateway: a uniform interface over a remote backend, a
//! scripted backend for tests, and a record/replay mechanism, with retry,
//! sampling control, and verbatim transcript capture.
//!
//! Every request carries a stage tag naming the pipeline step that issued
//! it; tags drive replay routing and error attribution.

pub mod remote;
pub mod scripted;
pub mod session;

use std::sync::Mutex;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use remote::RemoteBackend;
pub use scripted::ScriptedBackend;
pub use session::{ReplayBackend, SessionMeta, SessionRecorder};

/// Pipeline stage issuing a request. The set is closed: session logs and
/// replay routing depend on it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageTag {
    FounderFeatures,
    FounderRating,
    FounderFinal,
    IdeaFeatures,
    IdeaRating,
    IdeaFinal,
    FitRating,
    FitFinal,
    Summary,
}

impl StageTag {
    pub const ALL: [StageTag; 9] = [
        StageTag::FounderFeatures,
        StageTag::FounderRating,
        StageTag::FounderFinal,
        StageTag::IdeaFeatures,
        StageTag::IdeaRating,
        StageTag::IdeaFinal,
        StageTag::FitRating,
        StageTag::FitFinal,
        StageTag::Summary,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            StageTag::FounderFeatures => "founder_features",
            StageTag::FounderRating => "founder_rating",
            StageTag::FounderFinal => "founder_final",
            StageTag::IdeaFeatures => "idea_features",
            StageTag::IdeaRating => "idea_rating",
            StageTag::IdeaFinal => "idea_final",
            StageTag::FitRating => "fit_rating",
            StageTag::FitFinal => "fit_final",
            StageTag::Summary => "summary",
        }
    }
}

impl std::fmt::Display for StageTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for StageTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StageTag::ALL
            .iter()
            .find(|t| t.as_str() == s)
            .copied()
            .ok_or_else(|| format!("unknown stage tag `{s}`"))
    }
}

/// Sampling controls forwarded to the backend.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplingParams {
    pub top_p: f64,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl SamplingParams {
    pub fn validate(&self) -> Result<(), LlmError> {
        if !(self.top_p > 0.0 && self.top_p <= 1.0) {
            return Err(LlmError::InvalidRequest(format!(
                "top_p {} outside (0, 1]",
                self.top_p
            )));
        }
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(LlmError::InvalidRequest(format!(
                "temperature {} must be a finite non-negative number",
                self.temperature
            )));
        }
        if self.max_tokens == 0 {
            return Err(LlmError::InvalidRequest("max_tokens must be positive".into()));
        }
        Ok(())
    }
}

/// One chat completion request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub system_text: String,
    pub user_text: String,
    pub sampling: SamplingParams,
    pub tag: StageTag,
}

impl ChatRequest {
    pub fn validate(&self) -> Result<(), LlmError> {
        if self.user_text.trim().is_empty() {
            return Err(LlmError::InvalidRequest("empty user text".into()));
        }
        self.sampling.validate()
    }
}

/// A completed request/response pair; `response_text` is verbatim, untrimmed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatExchange {
    pub request: ChatRequest,
    pub response_text: String,
    pub latency_ms: u64,
    pub backend_id: String,
}

/// What a backend hands back: raw text plus whether it was cut off at the
/// token limit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BackendReply {
    pub text: String,
    pub truncated: bool,
}

#[derive(Debug, Error)]
pub enum LlmError {
    #[error("chat backend unavailable: {reason}")]
    BackendUnavailable { reason: String },
    #[error("transient chat backend failure: {reason}")]
    Transient { reason: String },
    #[error("response truncated at the token limit during stage {tag}")]
    ResponseTooLong { tag: StageTag },
    #[error("invalid chat request: {0}")]
    InvalidRequest(String),
    #[error("replay script has no more responses for stage {tag}")]
    ReplayExhausted { tag: StageTag },
    #[error("replayed request differs from recording at stage {tag}: {diff}")]
    ReplayMismatch { tag: StageTag, diff: String },
    #[error("session log {path}: {reason}")]
    SessionFile { path: String, reason: String },
}

impl LlmError {
    /// Only transient failures are worth retrying.
    pub fn is_retryable(&self) -> bool {
        matches!(self, LlmError::Transient { .. })
    }
}

/// The completion interface implemented by every backend.
pub trait ChatBackend: Send + Sync {
    /// Stable identity recorded in every exchange.
    fn id(&self) -> String;
    fn complete(&self, request: &ChatRequest) -> Result<BackendReply, LlmError>;
}

/// Retry policy for transient backend failures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RetryPolicy {
    pub max_retries: u32,
    pub initial_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_retries: 3,
            initial_backoff: Duration::from_millis(200),
        }
    }
}

/// Front door for all completions: validates, retries, measures, and logs.
pub struct Gateway {
    backend: Box<dyn ChatBackend>,
    retry: RetryPolicy,
    recorder: Option<Mutex<SessionRecorder>>,
}

impl Gateway {
    pub fn new(backend: Box<dyn ChatBackend>) -> Self {
        Gateway {
            backend,
            retry: RetryPolicy::default(),
            recorder: None,
        }
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    /// Appends every exchange to a session log at `path`.
    pub fn record_to(mut self, path: &std::path::Path, meta: SessionMeta) -> Result<Self, LlmError> {
        self.recorder = Some(Mutex::new(SessionRecorder::create(path, meta)?));
        Ok(self)
    }

    pub fn backend_id(&self) -> String {
        self.backend.id()
    }

    /// Runs one completion: retries transient failures with exponential
    /// backoff, records the exchange, and rejects truncated responses.
    pub fn complete(&self, request: ChatRequest) -> Result<ChatExchange, LlmError> {
        request.validate()?;
        let started = Instant::now();
        let mut attempt = 0u32;
        let reply = loop {
            match self.backend.complete(&request) {
                Ok(reply) => break reply,
                Err(e) if e.is_retryable() && attempt < self.retry.max_retries => {
                    let backoff = self.retry.initial_backoff.saturating_mul(1 << attempt.min(10));
                    std::thread::sleep(backoff);
                    attempt += 1;
                }
                Err(LlmError::Transient { reason }) => {
                    return Err(LlmError::BackendUnavailable {
                        reason: format!("{reason} (after {attempt} retries)"),
                    })
                }
                Err(e) => return Err(e),
            }
        };
        let exchange = ChatExchange {
            request,
            response_text: reply.text,
            latency_ms: started.elapsed().as_millis() as u64,
            backend_id: self.backend.id(),
        };
        if let Some(recorder) = &self.recorder {
            recorder
                .lock()
                .expect("session recorder lock")
                .append(&exchange)?;
        }
        if reply.truncated {
            return Err(LlmError::ResponseTooLong {
                tag: exchange.request.tag,
            });
        }
        Ok(exchange)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::{AtomicU32, Ordering};

    fn request(tag: StageTag) -> ChatRequest {
        ChatRequest {
            system_text: "system".into(),
            user_text: "user".into(),
            sampling: SamplingParams {
                top_p: 1.0,
                temperature: 0.7,
                max_tokens: 512,
            },
            tag,
        }
    }

    #[test]
    fn stage_tags_round_trip() {
        for tag in StageTag::ALL {
            let s = tag.as_str();
            assert_eq!(s.parse::<StageTag>().unwrap(), tag);
            let json = serde_json::to_string(&tag).unwrap();
            assert_eq!(json, format!("\"{s}\""));
        }
        assert!("bogus".parse::<StageTag>().is_err());
    }

    #[test]
    fn gateway_returns_scripted_reply_verbatim() {
        let backend = ScriptedBackend::from_sequence(vec![
            "Overall likelihood of success: 0.85".into(),
        ]);
        let gateway = Gateway::new(Box::new(backend));
        let exchange = gateway.complete(request(StageTag::FounderRating)).unwrap();
        assert_eq!(exchange.response_text, "Overall likelihood of success: 0.85");
        assert_eq!(exchange.request.tag, StageTag::FounderRating);
    }

    #[test]
    fn invalid_requests_are_rejected_before_the_backend() {
        let gateway = Gateway::new(Box::new(ScriptedBackend::from_sequence(vec!["x".into()])));
        let mut bad = request(StageTag::Summary);
        bad.user_text = "   ".into();
        assert!(matches!(
            gateway.complete(bad),
            Err(LlmError::InvalidRequest(_))
        ));
        let mut bad = request(StageTag::Summary);
        bad.sampling.top_p = 0.0;
        assert!(matches!(
            gateway.complete(bad),
            Err(LlmError::InvalidRequest(_))
        ));
    }

    struct FlakyBackend {
        failures_left: AtomicU32,
    }

    impl ChatBackend for FlakyBackend {
        fn id(&self) -> String {
            "flaky".into()
        }
        fn complete(&self, _request: &ChatRequest) -> Result<BackendReply, LlmError> {
            if self
                .failures_left
                .fetch_update(Ordering::SeqCst, Ordering::SeqCst, |v| v.checked_sub(1))
                .is_ok()
            {
                return Err(LlmError::Transient {
                    reason: "connection reset".into(),
                });
            }
            Ok(BackendReply {
                text: "recovered".into(),
                truncated: false,
            })
        }
    }

    #[test]
    fn transient_failures_are_retried() {
        let gateway = Gateway::new(Box::new(FlakyBackend {
            failures_left: AtomicU32::new(2),
        }))
        .with_retry(RetryPolicy {
            max_retries: 3,
            initial_backoff: Duration::from_millis(1),
        });
        let exchange = gateway.complete(request(StageTag::FitRating)).unwrap();
        assert_eq!(exchange.response_text, "recovered");
    }

    #[test]
    fn retries_exhaust_into_backend_unavailable() {
        let gateway = Gateway::new(Box::new(FlakyBackend {
            failures_left: AtomicU32::new(10),
        }))
        .with_retry(RetryPolicy {
            max_retries: 1,
            initial_backoff: Duration::from_millis(1),
        });
        match gateway.complete(request(StageTag::FitRating)) {
            Err(LlmError::BackendUnavailable { reason }) => {
                assert!(reason.contains("after 1 retries"), "{reason}")
            }
            other => panic!("expected BackendUnavailable, got {other:?}"),
        }
    }

    struct TruncatingBackend;

    impl ChatBackend for TruncatingBackend {
        fn id(&self) -> String {
            "truncating".into()
        }
        fn complete(&self, _request: &ChatRequest) -> Result<BackendReply, LlmError> {
            Ok(BackendReply {
                text: "cut off mid".into(),
                truncated: true,
            })
        }
    }

    #[test]
    fn truncated_replies_surface_with_stage_tag() {
        let gateway = Gateway::new(Box::new(TruncatingBackend));
        match gateway.complete(request(StageTag::IdeaRating)) {
            Err(LlmError::ResponseTooLong { tag }) => assert_eq!(tag, StageTag::IdeaRating),
            other => panic!("expected ResponseTooLong, got {other:?}"),
        }
    }
}
