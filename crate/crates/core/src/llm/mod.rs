//! Prompt rendering, chat transport and reply parsing.

mod provider;
mod remote;
mod scripted;
pub mod structured;
mod template;

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use provider::{ChatMessage, ChatProvider, ChatRequest, ChatResponse, Role, TokenUsage};
pub use remote::{RemoteConfig, RemoteProvider, RetryPolicy};
pub use scripted::{Script, ScriptedProvider};
pub use structured::{
    parse_structured, Replacement, RouterAction, RouterReply, Selection, StructuredError,
    StructuredKind, StructuredReply,
};
pub use template::{render_prompt, PromptLibrary, PromptTemplate, TemplateError, TemplateId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LlmError {
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("transport failed after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("provider returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("could not decode provider response: {0}")]
    Decode(String),
    #[error("script has no reply #{index} for template {template}")]
    ScriptUnderrun { template: TemplateId, index: usize },
    #[error("invalid script: {0}")]
    Script(String),
}

/// Failure of a render-ask-parse loop.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AskError<E: std::error::Error + 'static> {
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("reply rejected after {attempts} attempts: {last}")]
    Rejected { attempts: usize, last: E },
}

/// Per-call knobs shared by every prompt a gateway sends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GatewaySettings {
    /// Used for idea formulation.
    pub creative_temperature: f32,
    /// Used for every other prompt.
    pub decisive_temperature: f32,
    pub max_tokens: Option<u32>,
    /// Extra attempts after a reply fails to parse.
    pub parse_retries: usize,
    /// Role carrying the rendered template.
    pub instruction_role: Role,
}

impl Default for GatewaySettings {
    fn default() -> Self {
        Self {
            creative_temperature: 0.7,
            decisive_temperature: 0.2,
            max_tokens: None,
            parse_retries: 3,
            instruction_role: Role::User,
        }
    }
}

/// A provider plus the templates and settings used to talk to it.
#[derive(Clone)]
pub struct Gateway {
    provider: Arc<dyn ChatProvider>,
    prompts: Arc<PromptLibrary>,
    settings: GatewaySettings,
}

impl std::fmt::Debug for Gateway {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Gateway")
            .field("provider", &self.provider.identity())
            .field("settings", &self.settings)
            .finish()
    }
}

impl Gateway {
    pub fn new(provider: Arc<dyn ChatProvider>) -> Self {
        Self {
            provider,
            prompts: Arc::new(PromptLibrary::builtin()),
            settings: GatewaySettings::default(),
        }
    }

    pub fn with_prompts(mut self, prompts: PromptLibrary) -> Self {
        self.prompts = Arc::new(prompts);
        self
    }

    pub fn with_settings(mut self, settings: GatewaySettings) -> Self {
        self.settings = settings;
        self
    }

    pub fn settings(&self) -> &GatewaySettings {
        &self.settings
    }

    pub fn prompts(&self) -> &PromptLibrary {
        &self.prompts
    }

    pub fn provider_identity(&self) -> String {
        self.provider.identity()
    }

    pub fn temperature(&self, id: TemplateId) -> f32 {
        match id {
            TemplateId::IdeaFormulation => self.settings.creative_temperature,
            _ => self.settings.decisive_temperature,
        }
    }

    pub fn request(&self, id: TemplateId, prompt: String) -> ChatRequest {
        let messages = match self.settings.instruction_role {
            Role::System => vec![
                ChatMessage::system(prompt),
                ChatMessage::user("Follow the instructions above."),
            ],
            _ => vec![ChatMessage::user(prompt)],
        };
        ChatRequest {
            template: id,
            messages,
            temperature: self.temperature(id),
            max_tokens: self.settings.max_tokens,
        }
    }

    pub fn render(&self, id: TemplateId, bindings: &[(&str, &str)]) -> Result<String, LlmError> {
        Ok(self.prompts.render(id, bindings)?)
    }

    /// Renders `id` and returns the reply text.
    pub fn ask(&self, id: TemplateId, bindings: &[(&str, &str)]) -> Result<String, LlmError> {
        let prompt = self.render(id, bindings)?;
        self.send(id, prompt)
    }

    fn send(&self, id: TemplateId, prompt: String) -> Result<String, LlmError> {
        Ok(self.provider.complete(&self.request(id, prompt))?.text)
    }

    /// Asks the same prompt until `parse` accepts the reply, up to
    /// `1 + parse_retries` times.
    pub fn ask_parsed<T, E, F>(
        &self,
        id: TemplateId,
        bindings: &[(&str, &str)],
        parse: F,
    ) -> Result<T, AskError<E>>
    where
        E: std::error::Error + 'static,
        F: FnMut(&str) -> Result<T, E>,
    {
        self.ask_with_attempts(id, bindings, self.settings.parse_retries + 1, parse)
    }

    pub fn ask_with_attempts<T, E, F>(
        &self,
        id: TemplateId,
        bindings: &[(&str, &str)],
        attempts: usize,
        mut parse: F,
    ) -> Result<T, AskError<E>>
    where
        E: std::error::Error + 'static,
        F: FnMut(&str) -> Result<T, E>,
    {
        let prompt = self.render(id, bindings)?;
        let attempts = attempts.max(1);
        let mut last = None;
        for _ in 0..attempts {
            let reply = self.send(id, prompt.clone())?;
            match parse(&reply) {
                Ok(v) => return Ok(v),
                Err(e) => last = Some(e),
            }
        }
        Err(AskError::Rejected {
            attempts,
            last: last.expect("at least one attempt was made"),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gateway(script: Script) -> (Arc<ScriptedProvider>, Gateway) {
        let p = Arc::new(ScriptedProvider::new(script));
        (p.clone(), Gateway::new(p))
    }

    const ROUTER_BINDINGS: [(&str, &str); 4] = [
        ("research_idea", "idea"),
        ("keywords", "a, b"),
        ("novelty_score_desc", "3 - meh"),
        ("feasibility_score_desc", "4 - fine"),
    ];

    #[test]
    fn temperatures_by_template() {
        let (_, g) = gateway(Script::default());
        assert_eq!(g.temperature(TemplateId::IdeaFormulation), 0.7);
        for id in [
            TemplateId::KeywordSelection,
            TemplateId::Router,
            TemplateId::Review,
        ] {
            assert_eq!(g.temperature(id), 0.2);
        }
    }

    #[test]
    fn parse_retry_then_success() {
        let mut s = Script::default();
        s.push(TemplateId::Router, "garbage")
            .push(TemplateId::Router, "ACTION: Idea_Rewrite\nREASON: ok");
        let (p, g) = gateway(s);
        let r = g
            .ask_parsed(
                TemplateId::Router,
                &ROUTER_BINDINGS,
                structured::parse_router,
            )
            .unwrap();
        assert_eq!(r.action, RouterAction::IdeaRewrite);
        assert_eq!(p.calls(TemplateId::Router), 2);
        let sent = p.requests();
        assert_eq!(sent[0].messages, sent[1].messages);
        assert!(sent[0].messages[0].content.contains("- Keywords: a, b"));
    }

    #[test]
    fn parse_retries_exhausted() {
        let mut s = Script::default();
        for _ in 0..4 {
            s.push(TemplateId::Router, "nope");
        }
        let (p, g) = gateway(s);
        let err = g
            .ask_parsed(
                TemplateId::Router,
                &ROUTER_BINDINGS,
                structured::parse_router,
            )
            .unwrap_err();
        assert!(matches!(err, AskError::Rejected { attempts: 4, .. }));
        assert_eq!(p.calls(TemplateId::Router), 4);
    }

    #[test]
    fn system_role_option() {
        let (p, g) = gateway({
            let mut s = Script::default();
            s.set_default(TemplateId::Router, "x");
            s
        });
        let g = g.with_settings(GatewaySettings {
            instruction_role: Role::System,
            ..Default::default()
        });
        g.ask(TemplateId::Router, &ROUTER_BINDINGS).unwrap();
        let msgs = &p.requests()[0].messages;
        assert_eq!(msgs[0].role, Role::System);
        assert_eq!(msgs[1].role, Role::User);
    }
}
