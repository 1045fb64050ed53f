//! Scripted chat backend: replies come from pre-loaded queues instead of a
//! model, making every pipeline test deterministic and offline.
//!
//! Two modes:
//! - sequence: one global FIFO, replies served in load order regardless of tag;
//! - by-tag: one FIFO per stage tag, so concurrent branches cannot steal each
//!   other's replies.

use std::collections::{HashMap, VecDeque};
use std::sync::Mutex;

use super::{BackendReply, ChatBackend, ChatRequest, LlmError, StageTag};

enum Script {
    Sequence(VecDeque<String>),
    ByTag(HashMap<StageTag, VecDeque<String>>),
}

pub struct ScriptedBackend {
    script: Mutex<Script>,
}

impl ScriptedBackend {
    /// A backend serving `replies` in order, whatever the request tags.
    pub fn from_sequence(replies: Vec<String>) -> Self {
        ScriptedBackend {
            script: Mutex::new(Script::Sequence(replies.into())),
        }
    }

    /// An empty by-tag backend; load replies with [`push`](Self::push).
    pub fn by_tag() -> Self {
        ScriptedBackend {
            script: Mutex::new(Script::ByTag(HashMap::new())),
        }
    }

    /// Queues one reply for `tag` (by-tag mode only).
    pub fn push(&self, tag: StageTag, reply: impl Into<String>) -> &Self {
        let mut script = self.script.lock().expect("script lock");
        match &mut *script {
            Script::ByTag(queues) => queues.entry(tag).or_default().push_back(reply.into()),
            Script::Sequence(_) => panic!("push() requires a by-tag scripted backend"),
        };
        self
    }

    /// Replies left in every queue; 0 means the script was fully consumed.
    pub fn remaining(&self) -> usize {
        match &*self.script.lock().expect("script lock") {
            Script::Sequence(q) => q.len(),
            Script::ByTag(queues) => queues.values().map(VecDeque::len).sum(),
        }
    }
}

impl ChatBackend for ScriptedBackend {
    fn id(&self) -> String {
        "scripted".into()
    }

    fn complete(&self, request: &ChatRequest) -> Result<BackendReply, LlmError> {
        let mut script = self.script.lock().expect("script lock");
        let next = match &mut *script {
            Script::Sequence(q) => q.pop_front(),
            Script::ByTag(queues) => queues.get_mut(&request.tag).and_then(VecDeque::pop_front),
        };
        match next {
            Some(text) => Ok(BackendReply {
                text,
                truncated: false,
            }),
            None => Err(LlmError::BackendUnavailable {
                reason: format!("script exhausted for stage {}", request.tag),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::SamplingParams;

    fn request(tag: StageTag) -> ChatRequest {
        ChatRequest {
            system_text: String::new(),
            user_text: "prompt".into(),
            sampling: SamplingParams {
                top_p: 0.3,
                temperature: 1.0,
                max_tokens: 256,
            },
            tag,
        }
    }

    #[test]
    fn sequence_mode_serves_in_order() {
        let backend = ScriptedBackend::from_sequence(vec!["one".into(), "two".into()]);
        assert_eq!(
            backend.complete(&request(StageTag::Summary)).unwrap().text,
            "one"
        );
        assert_eq!(
            backend
                .complete(&request(StageTag::FounderRating))
                .unwrap()
                .text,
            "two"
        );
        assert!(matches!(
            backend.complete(&request(StageTag::Summary)),
            Err(LlmError::BackendUnavailable { .. })
        ));
    }

    #[test]
    fn by_tag_mode_routes_by_stage() {
        let backend = ScriptedBackend::by_tag();
        backend.push(StageTag::FounderRating, "founder reply");
        backend.push(StageTag::IdeaRating, "idea reply one");
        backend.push(StageTag::IdeaRating, "idea reply two");
        assert_eq!(
            backend.complete(&request(StageTag::IdeaRating)).unwrap().text,
            "idea reply one"
        );
        assert_eq!(
            backend
                .complete(&request(StageTag::FounderRating))
                .unwrap()
                .text,
            "founder reply"
        );
        assert_eq!(
            backend.complete(&request(StageTag::IdeaRating)).unwrap().text,
            "idea reply two"
        );
        assert_eq!(backend.remaining(), 0);
        let err = backend.complete(&request(StageTag::IdeaRating)).unwrap_err();
        assert!(err.to_string().contains("idea_rating"), "{err}");
    }
}
