//! HTTP chat-completion provider (`POST {base_url}/chat/completions`).

use std::time::Duration;

use reqwest::blocking::Client;
use reqwest::StatusCode;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{ChatProvider, ChatRequest, ChatResponse, LlmError, TokenUsage};

/// Exponential backoff for transient failures (timeouts, 408, 429, 5xx).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetryPolicy {
    /// Retries after the first attempt.
    pub max_retries: u32,
    pub initial_backoff: Duration,
    pub max_backoff: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_retries: 4,
            initial_backoff: Duration::from_millis(500),
            max_backoff: Duration::from_secs(30),
        }
    }
}

impl RetryPolicy {
    /// Delay before retry number `retry` (0-based).
    pub fn backoff(&self, retry: u32) -> Duration {
        let factor = 2u32.saturating_pow(retry.min(16));
        self.initial_backoff
            .saturating_mul(factor)
            .min(self.max_backoff)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RemoteConfig {
    pub base_url: String,
    pub model: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
    pub retry: RetryPolicy,
}

impl RemoteConfig {
    pub fn new(base_url: impl Into<String>, model: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            model: model.into(),
            api_key: None,
            timeout: Duration::from_secs(120),
            retry: RetryPolicy::default(),
        }
    }

    /// Reads `{prefix}_BASE_URL`, `{prefix}_MODEL` and optional `{prefix}_API_KEY`.
    /// Returns `None` when base URL or model is unset.
    pub fn from_env(prefix: &str) -> Option<Self> {
        let var = |name: &str| {
            std::env::var(format!("{prefix}_{name}"))
                .ok()
                .filter(|v| !v.trim().is_empty())
        };
        let mut cfg = Self::new(var("BASE_URL")?, var("MODEL")?);
        cfg.api_key = var("API_KEY");
        Some(cfg)
    }
}

#[derive(Debug, Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
    #[serde(default)]
    usage: Option<TokenUsage>,
}

#[derive(Debug, Deserialize)]
struct WireChoice {
    message: WireMessage,
    #[serde(default)]
    finish_reason: Option<String>,
}

#[derive(Debug, Deserialize)]
struct WireMessage {
    #[serde(default)]
    content: Option<String>,
}

enum Failure {
    Transient(String, Option<Duration>),
    Fatal(LlmError),
}

pub struct RemoteProvider {
    client: Client,
    config: RemoteConfig,
}

impl RemoteProvider {
    pub fn new(config: RemoteConfig) -> Result<Self, LlmError> {
        let client = Client::builder()
            .timeout(config.timeout)
            .build()
            .map_err(|e| LlmError::InvalidRequest(format!("building HTTP client: {e}")))?;
        Ok(Self { client, config })
    }

    pub fn config(&self) -> &RemoteConfig {
        &self.config
    }

    fn endpoint(&self) -> String {
        format!(
            "{}/chat/completions",
            self.config.base_url.trim_end_matches('/')
        )
    }

    fn body(&self, request: &ChatRequest) -> serde_json::Value {
        let mut body = json!({
            "model": self.config.model,
            "messages": request.messages,
            "temperature": request.temperature,
        });
        if let Some(max) = request.max_tokens {
            body["max_tokens"] = json!(max);
        }
        body
    }

    fn attempt(&self, body: &serde_json::Value) -> Result<ChatResponse, Failure> {
        let mut req = self.client.post(self.endpoint()).json(body);
        if let Some(key) = &self.config.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() || e.is_connect() || e.is_request() {
                Failure::Transient(e.to_string(), None)
            } else {
                Failure::Fatal(LlmError::Decode(e.to_string()))
            }
        })?;
        let status = resp.status();
        if !status.is_success() {
            let retry_after = resp
                .headers()
                .get(reqwest::header::RETRY_AFTER)
                .and_then(|v| v.to_str().ok())
                .and_then(|v| v.trim().parse::<u64>().ok())
                .map(Duration::from_secs);
            let text = resp.text().unwrap_or_default();
            return if is_retryable(status) {
                Err(Failure::Transient(
                    format!("HTTP {status}: {text}"),
                    retry_after,
                ))
            } else {
                Err(Failure::Fatal(LlmError::Status {
                    status: status.as_u16(),
                    body: text,
                }))
            };
        }
        let wire: WireResponse = resp
            .json()
            .map_err(|e| Failure::Fatal(LlmError::Decode(e.to_string())))?;
        let choice =
            wire.choices.into_iter().next().ok_or_else(|| {
                Failure::Fatal(LlmError::Decode("response has no choices".into()))
            })?;
        Ok(ChatResponse {
            text: choice.message.content.unwrap_or_default(),
            finish_reason: choice.finish_reason,
            usage: wire.usage,
        })
    }
}

fn is_retryable(status: StatusCode) -> bool {
    status == StatusCode::TOO_MANY_REQUESTS
        || status == StatusCode::REQUEST_TIMEOUT
        || status.is_server_error()
}

impl ChatProvider for RemoteProvider {
    fn complete(&self, request: &ChatRequest) -> Result<ChatResponse, LlmError> {
        request.validate()?;
        let body = self.body(request);
        let policy = &self.config.retry;
        let mut last = String::new();
        let mut wait = None;
        for attempt in 0..=policy.max_retries {
            if let Some(delay) = wait.take() {
                std::thread::sleep(delay);
            }
            match self.attempt(&body) {
                Ok(resp) => return Ok(resp),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(Failure::Transient(msg, retry_after)) => {
                    // Retry-After is honored, but never beyond the backoff cap.
                    let delay = retry_after
                        .map_or_else(|| policy.backoff(attempt), |d| d.min(policy.max_backoff));
                    wait = Some(delay);
                    last = msg;
                }
            }
        }
        Err(LlmError::Transport {
            attempts: policy.max_retries + 1,
            message: last,
        })
    }

    fn identity(&self) -> String {
        format!("{}@{}", self.config.model, self.config.base_url)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn backoff_doubles_and_caps() {
        let p = RetryPolicy {
            max_retries: 10,
            initial_backoff: Duration::from_millis(100),
            max_backoff: Duration::from_millis(700),
        };
        let delays: Vec<_> = (0..5).map(|i| p.backoff(i).as_millis()).collect();
        assert_eq!(delays, [100, 200, 400, 700, 700]);
    }

    #[test]
    fn wire_body_shape() {
        let p = RemoteProvider::new(RemoteConfig::new("http://x/v1/", "m")).unwrap();
        assert_eq!(p.endpoint(), "http://x/v1/chat/completions");
        let body = p.body(&ChatRequest {
            template: crate::llm::TemplateId::Router,
            messages: vec![crate::llm::ChatMessage::user("hello")],
            temperature: 0.25,
            max_tokens: Some(10),
        });
        assert_eq!(
            body,
            json!({"model":"m","messages":[{"role":"user","content":"hello"}],"temperature":0.25,"max_tokens":10})
        );
    }
}
