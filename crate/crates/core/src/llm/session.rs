//! Session record/replay.
//!
//! A session log is line-delimited JSON: a header line carrying pipeline
//! version and config hash, then one serialized exchange per line in
//! completion order. A recorded live session replays byte-for-byte without
//! network access; replay routes responses by stage tag so concurrent
//! branches stay deterministic, and strict mode additionally verifies the
//! replayed prompts match the recorded ones.

use std::collections::{HashMap, VecDeque};
use std::io::{BufRead, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{BackendReply, ChatBackend, ChatExchange, ChatRequest, LlmError, StageTag};

const SESSION_SCHEMA: &str = "founderfit-session";
const SESSION_VERSION: u32 = 1;

/// Provenance carried in the session header.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionMeta {
    pub pipeline_version: String,
    pub config_hash: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct SessionHeader {
    schema: String,
    version: u32,
    #[serde(flatten)]
    meta: SessionMeta,
}

/// Appends exchanges to a session log, flushing after every line so a
/// crashed run still leaves a usable prefix.
pub struct SessionRecorder {
    path: String,
    writer: std::io::BufWriter<std::fs::File>,
}

impl SessionRecorder {
    pub fn create(path: &Path, meta: SessionMeta) -> Result<Self, LlmError> {
        let display = path.display().to_string();
        let io_err = |e: std::io::Error| LlmError::SessionFile {
            path: display.clone(),
            reason: e.to_string(),
        };
        if let Some(parent) = path.parent() {
            if !parent.as_os_str().is_empty() {
                std::fs::create_dir_all(parent).map_err(io_err)?;
            }
        }
        let file = std::fs::File::create(path).map_err(io_err)?;
        let mut writer = std::io::BufWriter::new(file);
        let header = SessionHeader {
            schema: SESSION_SCHEMA.into(),
            version: SESSION_VERSION,
            meta,
        };
        writeln!(
            writer,
            "{}",
            serde_json::to_string(&header).expect("header serializes")
        )
        .map_err(io_err)?;
        writer.flush().map_err(io_err)?;
        Ok(SessionRecorder {
            path: display,
            writer,
        })
    }

    pub fn append(&mut self, exchange: &ChatExchange) -> Result<(), LlmError> {
        let io_err = |e: std::io::Error| LlmError::SessionFile {
            path: self.path.clone(),
            reason: e.to_string(),
        };
        writeln!(
            self.writer,
            "{}",
            serde_json::to_string(exchange).expect("exchange serializes")
        )
        .map_err(io_err)?;
        self.writer.flush().map_err(io_err)
    }
}

/// Serves recorded responses back, keyed by stage tag.
pub struct ReplayBackend {
    queues: Mutex<HashMap<StageTag, VecDeque<ChatExchange>>>,
    meta: SessionMeta,
    strict: bool,
}

impl ReplayBackend {
    /// Loads a session log. With `strict`, every replayed request must match
    /// the recorded prompt text exactly; otherwise only tags must line up.
    pub fn load(path: &Path, strict: bool) -> Result<Self, LlmError> {
        let display = path.display().to_string();
        let file_err = |reason: String| LlmError::SessionFile {
            path: display.clone(),
            reason,
        };
        let file = std::fs::File::open(path).map_err(|e| file_err(e.to_string()))?;
        let mut lines = std::io::BufReader::new(file).lines();
        let header_line = lines
            .next()
            .transpose()
            .map_err(|e| file_err(e.to_string()))?
            .ok_or_else(|| file_err("file is empty".into()))?;
        let header: SessionHeader = serde_json::from_str(&header_line)
            .map_err(|e| file_err(format!("malformed header: {e}")))?;
        if header.schema != SESSION_SCHEMA || header.version != SESSION_VERSION {
            return Err(file_err(format!(
                "unsupported session schema {}/{} (want {SESSION_SCHEMA}/{SESSION_VERSION})",
                header.schema, header.version
            )));
        }
        let mut queues: HashMap<StageTag, VecDeque<ChatExchange>> = HashMap::new();
        for (number, line) in lines.enumerate() {
            let line = line.map_err(|e| file_err(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let exchange: ChatExchange = serde_json::from_str(&line)
                .map_err(|e| file_err(format!("malformed exchange on line {}: {e}", number + 2)))?;
            queues
                .entry(exchange.request.tag)
                .or_default()
                .push_back(exchange);
        }
        Ok(ReplayBackend {
            queues: Mutex::new(queues),
            meta: header.meta,
            strict,
        })
    }

    pub fn meta(&self) -> &SessionMeta {
        &self.meta
    }

    /// Exchanges not yet replayed.
    pub fn remaining(&self) -> usize {
        self.queues
            .lock()
            .expect("replay lock")
            .values()
            .map(VecDeque::len)
            .sum()
    }
}

impl ChatBackend for ReplayBackend {
    fn id(&self) -> String {
        "replay".into()
    }

    fn complete(&self, request: &ChatRequest) -> Result<BackendReply, LlmError> {
        let recorded = self
            .queues
            .lock()
            .expect("replay lock")
            .get_mut(&request.tag)
            .and_then(VecDeque::pop_front)
            .ok_or(LlmError::ReplayExhausted { tag: request.tag })?;
        if self.strict {
            if let Some(diff) = first_difference(&recorded.request, request) {
                return Err(LlmError::ReplayMismatch {
                    tag: request.tag,
                    diff,
                });
            }
        }
        Ok(BackendReply {
            text: recorded.response_text,
            truncated: false,
        })
    }
}

/// Locates the first differing line between the recorded and replayed
/// prompts; the returned snippet names the field and both variants.
fn first_difference(recorded: &ChatRequest, replayed: &ChatRequest) -> Option<String> {
    for (field, a, b) in [
        ("system_text", &recorded.system_text, &replayed.system_text),
        ("user_text", &recorded.user_text, &replayed.user_text),
    ] {
        if a == b {
            continue;
        }
        let mut a_lines = a.lines();
        let mut b_lines = b.lines();
        let mut line_number = 1usize;
        loop {
            match (a_lines.next(), b_lines.next()) {
                (Some(x), Some(y)) if x == y => line_number += 1,
                (x, y) => {
                    return Some(format!(
                        "{field} line {line_number}: recorded `{}` vs replayed `{}`",
                        clip(x.unwrap_or("<end>")),
                        clip(y.unwrap_or("<end>")),
                    ));
                }
            }
        }
    }
    None
}

fn clip(s: &str) -> String {
    const LIMIT: usize = 80;
    if s.chars().count() <= LIMIT {
        s.to_string()
    } else {
        let cut: String = s.chars().take(LIMIT).collect();
        format!("{cut}…")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::SamplingParams;

    fn request(tag: StageTag, user_text: &str) -> ChatRequest {
        ChatRequest {
            system_text: "system".into(),
            user_text: user_text.into(),
            sampling: SamplingParams {
                top_p: 0.3,
                temperature: 1.0,
                max_tokens: 256,
            },
            tag,
        }
    }

    fn exchange(tag: StageTag, user_text: &str, response: &str) -> ChatExchange {
        ChatExchange {
            request: request(tag, user_text),
            response_text: response.into(),
            latency_ms: 12,
            backend_id: "scripted".into(),
        }
    }

    fn record_sample(path: &Path) {
        let mut recorder = SessionRecorder::create(
            path,
            SessionMeta {
                pipeline_version: "test".into(),
                config_hash: "cafe".into(),
            },
        )
        .unwrap();
        recorder
            .append(&exchange(StageTag::FounderFeatures, "features prompt", "1. grit"))
            .unwrap();
        recorder
            .append(&exchange(StageTag::FounderRating, "rating prompt", "Likelihood: 0.9"))
            .unwrap();
        recorder
            .append(&exchange(StageTag::FounderRating, "second rating", "Likelihood: 0.8"))
            .unwrap();
    }

    #[test]
    fn record_then_replay_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("session.jsonl");
        record_sample(&path);
        let replay = ReplayBackend::load(&path, false).unwrap();
        assert_eq!(replay.meta().config_hash, "cafe");
        assert_eq!(replay.remaining(), 3);
        let r1 = replay
            .complete(&request(StageTag::FounderRating, "rating prompt"))
            .unwrap();
        assert_eq!(r1.text, "Likelihood: 0.9");
        let r2 = replay
            .complete(&request(StageTag::FounderFeatures, "features prompt"))
            .unwrap();
        assert_eq!(r2.text, "1. grit");
        let r3 = replay
            .complete(&request(StageTag::FounderRating, "second rating"))
            .unwrap();
        assert_eq!(r3.text, "Likelihood: 0.8");
    }

    #[test]
    fn exhausted_replay_names_the_stage() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("session.jsonl");
        record_sample(&path);
        let replay = ReplayBackend::load(&path, false).unwrap();
        match replay.complete(&request(StageTag::IdeaRating, "anything")) {
            Err(LlmError::ReplayExhausted { tag }) => assert_eq!(tag, StageTag::IdeaRating),
            other => panic!("expected ReplayExhausted, got {other:?}"),
        }
    }

    #[test]
    fn strict_mode_reports_prompt_drift() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("session.jsonl");
        record_sample(&path);
        let replay = ReplayBackend::load(&path, true).unwrap();
        match replay.complete(&request(StageTag::FounderFeatures, "different prompt")) {
            Err(LlmError::ReplayMismatch { tag, diff }) => {
                assert_eq!(tag, StageTag::FounderFeatures);
                assert!(diff.contains("features prompt"), "{diff}");
                assert!(diff.contains("different prompt"), "{diff}");
            }
            other => panic!("expected ReplayMismatch, got {other:?}"),
        }
    }

    #[test]
    fn lenient_mode_ignores_prompt_drift() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("session.jsonl");
        record_sample(&path);
        let replay = ReplayBackend::load(&path, false).unwrap();
        let reply = replay
            .complete(&request(StageTag::FounderFeatures, "different prompt"))
            .unwrap();
        assert_eq!(reply.text, "1. grit");
    }

    #[test]
    fn wrong_header_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(&path, "{\"schema\":\"other\",\"version\":1,\"pipeline_version\":\"\",\"config_hash\":\"\"}\n").unwrap();
        assert!(matches!(
            ReplayBackend::load(&path, false),
            Err(LlmError::SessionFile { .. })
        ));
    }
}
