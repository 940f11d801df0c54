use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{Backend, BackendError, Completion, CompletionRequest, ModelParams, DEFAULT_MODEL};

/// Environment variable holding the bearer token.
pub const API_KEY_ENV: &str = "OPENAI_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LiveConfig {
    pub base_url: String,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub timeout_s: u64,
    /// Total attempts per call, the first one included.
    pub max_retries: u32,
    pub backoff_base_ms: u64,
    pub backoff_cap_ms: u64,
    pub api_key_env: String,
}

impl Default for LiveConfig {
    fn default() -> Self {
        Self {
            base_url: "https://api.openai.com".into(),
            model: DEFAULT_MODEL.into(),
            temperature: 0.0,
            max_tokens: 1024,
            timeout_s: 60,
            max_retries: 5,
            backoff_base_ms: 1000,
            backoff_cap_ms: 30_000,
            api_key_env: API_KEY_ENV.into(),
        }
    }
}

impl LiveConfig {
    pub fn params(&self) -> ModelParams {
        ModelParams {
            model: self.model.clone(),
            temperature: self.temperature,
            max_tokens: self.max_tokens,
        }
    }

    pub fn endpoint(&self) -> String {
        format!("{}/v1/chat/completions", self.base_url.trim_end_matches('/'))
    }

    /// Delay before attempt `attempt + 1` (attempts count from 1).
    pub fn backoff(&self, attempt: u32) -> Duration {
        let factor = 1u64.checked_shl(attempt.saturating_sub(1)).unwrap_or(u64::MAX);
        Duration::from_millis(self.backoff_base_ms.saturating_mul(factor).min(self.backoff_cap_ms))
    }
}

/// Client for OpenAI-compatible `/v1/chat/completions` endpoints.
pub struct LiveBackend {
    config: LiveConfig,
    api_key: Option<String>,
    agent: ureq::Agent,
}

enum Attempt {
    Done(String),
    Retry { status: Option<u16>, message: String },
}

impl LiveBackend {
    /// Reads the API key from the configured environment variable. A missing
    /// key is allowed for local endpoints that do not check it.
    pub fn new(config: LiveConfig) -> Result<Self, BackendError> {
        if config.base_url.trim().is_empty() {
            return Err(BackendError::Config("base_url is empty".into()));
        }
        if config.max_retries == 0 {
            return Err(BackendError::Config("max_retries must be at least 1".into()));
        }
        let api_key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        let agent_config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_s.max(1))))
            .http_status_as_error(false)
            .build();
        Ok(Self {
            config,
            api_key,
            agent: ureq::Agent::new_with_config(agent_config),
        })
    }

    pub fn config(&self) -> &LiveConfig {
        &self.config
    }

    fn attempt(&self, body: &Value) -> Result<Attempt, BackendError> {
        let mut req = self.agent.post(&self.config.endpoint());
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = match req.send_json(body) {
            Ok(r) => r,
            Err(e) => {
                return Ok(Attempt::Retry {
                    status: None,
                    message: e.to_string(),
                })
            }
        };
        let status = response.status().as_u16();
        let text = match response.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => {
                return Ok(Attempt::Retry {
                    status: Some(status),
                    message: format!("reading body: {e}"),
                })
            }
        };
        if status == 429 || status >= 500 {
            return Ok(Attempt::Retry {
                status: Some(status),
                message: excerpt(&text),
            });
        }
        if !(200..300).contains(&status) {
            return Err(BackendError::Status {
                status,
                body: excerpt(&text),
            });
        }
        parse_response(&text).map(Attempt::Done)
    }
}

/// Pulls `choices[0].message.content` out of a completion response.
pub(crate) fn parse_response(text: &str) -> Result<String, BackendError> {
    let value: Value = serde_json::from_str(text)
        .map_err(|e| BackendError::Protocol(format!("{e}: {}", excerpt(text))))?;
    value
        .pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(str::to_string)
        .ok_or_else(|| BackendError::Protocol(format!("no choices[0].message.content in {}", excerpt(text))))
}

fn excerpt(text: &str) -> String {
    const MAX: usize = 300;
    if text.chars().count() <= MAX {
        text.to_string()
    } else {
        let cut: String = text.chars().take(MAX).collect();
        format!("{cut}...")
    }
}

impl Backend for LiveBackend {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, BackendError> {
        request.validate()?;
        let body = request.wire_body();
        let attempts = self.config.max_retries;
        let mut last = (None, String::new());
        for attempt in 1..=attempts {
            match self.attempt(&body)? {
                Attempt::Done(text) => {
                    return Ok(Completion {
                        text,
                        retries: attempt - 1,
                    })
                }
                Attempt::Retry { status, message } => {
                    log::warn!(
                        "{} attempt {attempt}/{attempts} failed ({}): {message}",
                        request.describe(),
                        status.map_or("no status".to_string(), |s| s.to_string())
                    );
                    last = (status, message);
                    if attempt < attempts {
                        std::thread::sleep(self.config.backoff(attempt));
                    }
                }
            }
        }
        Err(BackendError::Exhausted {
            attempts,
            status: last.0,
            message: last.1,
        })
    }
}
