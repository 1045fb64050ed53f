//! Remote chat backend speaking a minimal chat-completion JSON protocol.
//!
//! Request: `{"model", "messages": [{role, content}...], "temperature",
//! "top_p", "max_tokens"}`. Response: `{"choices": [{"message": {"content"},
//! "finish_reason"}]}` — `finish_reason == "length"` marks truncation.
//! Model identity is pure configuration; any compatible service works.

use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{BackendReply, ChatBackend, ChatRequest, LlmError};

/// Connection settings for the remote backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemoteLlmConfig {
    pub endpoint: String,
    pub model: String,
    pub timeout_secs: u64,
    /// API key, read from the environment; never serialized.
    #[serde(skip)]
    pub api_key: Option<String>,
}

impl Default for RemoteLlmConfig {
    fn default() -> Self {
        RemoteLlmConfig {
            endpoint: String::new(),
            model: "gpt-4".into(),
            timeout_secs: 120,
            api_key: None,
        }
    }
}

pub struct RemoteBackend {
    agent: ureq::Agent,
    config: RemoteLlmConfig,
}

impl RemoteBackend {
    pub fn new(config: RemoteLlmConfig) -> Result<Self, LlmError> {
        if config.endpoint.trim().is_empty() {
            return Err(LlmError::InvalidRequest(
                "remote chat backend needs an endpoint".into(),
            ));
        }
        let agent_config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .build();
        Ok(RemoteBackend {
            agent: agent_config.new_agent(),
            config,
        })
    }
}

impl ChatBackend for RemoteBackend {
    fn id(&self) -> String {
        format!("remote/{}", self.config.model)
    }

    fn complete(&self, request: &ChatRequest) -> Result<BackendReply, LlmError> {
        let mut messages = Vec::new();
        if !request.system_text.trim().is_empty() {
            messages.push(serde_json::json!({
                "role": "system",
                "content": request.system_text,
            }));
        }
        messages.push(serde_json::json!({
            "role": "user",
            "content": request.user_text,
        }));
        let body = serde_json::json!({
            "model": self.config.model,
            "messages": messages,
            "temperature": request.sampling.temperature,
            "top_p": request.sampling.top_p,
            "max_tokens": request.sampling.max_tokens,
        });
        let mut http_request = self.agent.post(&self.config.endpoint);
        if let Some(key) = &self.config.api_key {
            http_request = http_request.header("authorization", &format!("Bearer {key}"));
        }
        let mut response = http_request
            .send_json(&body)
            .map_err(classify_transport_error)?;
        let value: Value = response
            .body_mut()
            .read_json()
            .map_err(|e| LlmError::BackendUnavailable {
                reason: format!("unreadable response body: {e}"),
            })?;
        parse_chat_response(&value)
    }
}

fn classify_transport_error(err: ureq::Error) -> LlmError {
    match err {
        ureq::Error::StatusCode(code) if code == 429 || code >= 500 => LlmError::Transient {
            reason: format!("server returned status {code}"),
        },
        ureq::Error::StatusCode(code) => LlmError::BackendUnavailable {
            reason: format!("server returned status {code}"),
        },
        ureq::Error::Io(e) => LlmError::Transient {
            reason: format!("io: {e}"),
        },
        ureq::Error::Timeout(t) => LlmError::Transient {
            reason: format!("timeout: {t}"),
        },
        ureq::Error::ConnectionFailed => LlmError::Transient {
            reason: "connection failed".into(),
        },
        other => LlmError::BackendUnavailable {
            reason: other.to_string(),
        },
    }
}

fn parse_chat_response(value: &Value) -> Result<BackendReply, LlmError> {
    let choice = value
        .get("choices")
        .and_then(Value::as_array)
        .and_then(|c| c.first())
        .ok_or_else(|| LlmError::BackendUnavailable {
            reason: "response has no choices".into(),
        })?;
    let text = choice
        .get("message")
        .and_then(|m| m.get("content"))
        .and_then(Value::as_str)
        .ok_or_else(|| LlmError::BackendUnavailable {
            reason: "response choice has no message content".into(),
        })?
        .to_string();
    let truncated = choice
        .get("finish_reason")
        .and_then(Value::as_str)
        .map(|r| r == "length")
        .unwrap_or(false);
    Ok(BackendReply { text, truncated })
}
