//! Deterministic provider replaying canned replies.
//!
//! Script file layout (JSON):
//!
//! ```json
//! {
//!   "replies":  { "keyword_selection": ["NEW_KEYWORD: x\n...", "..."] },
//!   "defaults": { "relation_analysis": "Both keywords meet in ..." }
//! }
//! ```
//!
//! The n-th call tagged with a template id receives `replies[id][n]`. Once a
//! list is exhausted the template's `defaults` entry is returned, and without
//! one the call fails with [`LlmError::ScriptUnderrun`].

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{ChatProvider, ChatRequest, ChatResponse, LlmError, TemplateId};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Script {
    #[serde(default)]
    pub replies: BTreeMap<TemplateId, Vec<String>>,
    #[serde(default)]
    pub defaults: BTreeMap<TemplateId, String>,
}

impl Script {
    pub fn push(&mut self, id: TemplateId, reply: impl Into<String>) -> &mut Self {
        self.replies.entry(id).or_default().push(reply.into());
        self
    }

    pub fn set_default(&mut self, id: TemplateId, reply: impl Into<String>) -> &mut Self {
        self.defaults.insert(id, reply.into());
        self
    }

    pub fn from_json(text: &str) -> Result<Self, LlmError> {
        serde_json::from_str(text).map_err(|e| LlmError::Script(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scripts always serialize")
    }
}

#[derive(Debug, Default)]
struct ScriptState {
    cursors: BTreeMap<TemplateId, usize>,
    log: Vec<ChatRequest>,
}

#[derive(Debug)]
pub struct ScriptedProvider {
    script: Script,
    name: String,
    state: Mutex<ScriptState>,
}

impl ScriptedProvider {
    pub fn new(script: Script) -> Self {
        Self {
            script,
            name: "scripted".into(),
            state: Mutex::default(),
        }
    }

    pub fn from_path(path: &Path) -> Result<Self, LlmError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LlmError::Script(format!("{}: {e}", path.display())))?;
        let mut p = Self::new(Script::from_json(&text)?);
        p.name = format!("scripted:{}", path.display());
        Ok(p)
    }

    pub fn script(&self) -> &Script {
        &self.script
    }

    /// Number of calls made so far for `id`.
    pub fn calls(&self, id: TemplateId) -> usize {
        self.lock().cursors.get(&id).copied().unwrap_or(0)
    }

    pub fn total_calls(&self) -> usize {
        self.lock().log.len()
    }

    /// Every request seen, in call order.
    pub fn requests(&self) -> Vec<ChatRequest> {
        self.lock().log.clone()
    }

    fn lock(&self) -> std::sync::MutexGuard<'_, ScriptState> {
        self.state.lock().unwrap_or_else(|e| e.into_inner())
    }
}

impl ChatProvider for ScriptedProvider {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        request.validate()?;
        let mut state = self.lock();
        let cursor = state.cursors.entry(request.template).or_insert(0);
        let index = *cursor;
        *cursor += 1;
        state.log.push(request.clone());
        let reply = self
            .script
            .replies
            .get(&request.template)
            .and_then(|r| r.get(index))
            .or_else(|| self.script.defaults.get(&request.template))
            .ok_or(LlmError::ScriptUnderrun {
                template: request.template,
                index,
            })?;
        Ok(ChatResponse::text(reply.clone()))
    }

    fn identity(&self) -> String {
        self.name.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::llm::ChatMessage;

    fn req(id: TemplateId) -> ChatRequest {
        ChatRequest {
            template: id,
            messages: vec![ChatMessage::user("hi")],
            temperature: 0.2,
            max_tokens: None,
        }
    }

    #[test]
    fn replies_in_order_per_key() {
        let mut s = Script::default();
        s.push(TemplateId::Router, "one")
            .push(TemplateId::Router, "two");
        s.push(TemplateId::Review, "r");
        let p = ScriptedProvider::new(s);
        assert_eq!(p.complete(&req(TemplateId::Router)).unwrap().text, "one");
        assert_eq!(p.complete(&req(TemplateId::Review)).unwrap().text, "r");
        assert_eq!(p.complete(&req(TemplateId::Router)).unwrap().text, "two");
        assert_eq!(p.calls(TemplateId::Router), 2);
    }

    #[test]
    fn underrun_is_typed() {
        let mut s = Script::default();
        s.push(TemplateId::Router, "only");
        let p = ScriptedProvider::new(s);
        p.complete(&req(TemplateId::Router)).unwrap();
        assert_eq!(
            p.complete(&req(TemplateId::Router)).unwrap_err(),
            LlmError::ScriptUnderrun {
                template: TemplateId::Router,
                index: 1
            }
        );
    }

    #[test]
    fn defaults_after_exhaustion() {
        let mut s = Script::default();
        s.push(TemplateId::RelationAnalysis, "first");
        s.set_default(TemplateId::RelationAnalysis, "again");
        let p = ScriptedProvider::new(s);
        let texts: Vec<_> = (0..3)
            .map(|_| p.complete(&req(TemplateId::RelationAnalysis)).unwrap().text)
            .collect();
        assert_eq!(texts, ["first", "again", "again"]);
    }

    #[test]
    fn script_json_shape() {
        let s = Script::from_json(
            r#"{"replies":{"keyword_selection":["a","b"]},"defaults":{"review":"c"}}"#,
        )
        .unwrap();
        assert_eq!(s.replies[&TemplateId::KeywordSelection], ["a", "b"]);
        assert_eq!(Script::from_json(&s.to_json()).unwrap(), s);
        assert!(Script::from_json(r#"{"replies":{"bogus":[]}}"#).is_err());
    }

    #[test]
    fn rejects_empty_messages() {
        let p = ScriptedProvider::new(Script::default());
        let mut r = req(TemplateId::Router);
        r.messages.clear();
        assert!(matches!(p.complete(&r), Err(LlmError::InvalidRequest(_))));
    }
}
