//! Language-model backends.
//!
//! Everything above this module talks to a [`Backend`]: the HTTP client for
//! OpenAI-compatible endpoints, the scripted stand-in used by tests, the
//! replayer reading saved transcripts, and the simulation in [`crate::sim`].

mod live;
mod replay;
mod scripted;
mod transcript;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::model::MemberId;

pub use live::{LiveBackend, LiveConfig, API_KEY_ENV};
pub use replay::ReplayBackend;
pub use scripted::{ScriptKey, ScriptedBackend};
pub use transcript::{read_transcript, Recording, TranscriptLog, TranscriptRecord};

/// Request tags, one per calling module.
pub mod tags {
    pub const INTENT: &str = "intent";
    pub const MEMBER: &str = "member";
    pub const SUMMARIZER: &str = "summarizer";
    pub const COORDINATOR: &str = "coordinator";
    pub const EVALUATOR: &str = "evaluator";
    pub const PARAPHRASE: &str = "paraphrase";
}

pub const DEFAULT_MODEL: &str = "gpt-3.5-turbo";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

/// Where a call comes from. The harness keys transcripts and scripts on it.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CallKey {
    pub scenario: String,
    pub round: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub member: Option<MemberId>,
}

/// Sampling parameters shared by every request of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for ModelParams {
    fn default() -> Self {
        Self {
            model: DEFAULT_MODEL.to_string(),
            temperature: 0.0,
            max_tokens: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRequest {
    pub messages: Vec<ChatMessage>,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub tag: String,
    #[serde(default)]
    pub key: CallKey,
    /// Structured side channel read by the simulation; never sent over HTTP.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<Value>,
}

impl CompletionRequest {
    pub fn new(tag: &str, key: CallKey, messages: Vec<ChatMessage>, params: &ModelParams) -> Self {
        Self {
            messages,
            model: params.model.clone(),
            temperature: params.temperature,
            max_tokens: params.max_tokens,
            tag: tag.to_string(),
            key,
            context: None,
        }
    }

    pub fn with_context(mut self, context: Value) -> Self {
        self.context = Some(context);
        self
    }

    pub fn validate(&self) -> Result<(), BackendError> {
        if self.messages.is_empty() {
            return Err(BackendError::InvalidRequest("no messages".into()));
        }
        for (i, m) in self.messages.iter().enumerate() {
            if m.role != Role::Assistant && m.content.trim().is_empty() {
                return Err(BackendError::InvalidRequest(format!(
                    "message {i} ({:?}) has empty content",
                    m.role
                )));
            }
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(BackendError::InvalidRequest(format!(
                "temperature {} is negative",
                self.temperature
            )));
        }
        if self.max_tokens == 0 {
            return Err(BackendError::InvalidRequest("max_tokens must be positive".into()));
        }
        Ok(())
    }

    /// Body of a `/v1/chat/completions` POST.
    pub fn wire_body(&self) -> Value {
        json!({
            "model": self.model,
            "messages": self.messages,
            "temperature": self.temperature,
            "max_tokens": self.max_tokens,
        })
    }

    /// Human-readable call key for error messages.
    pub fn describe(&self) -> String {
        let mut s = format!(
            "tag={} round={} scenario={}",
            self.tag, self.key.round, self.key.scenario
        );
        if let Some(m) = &self.key.member {
            s.push_str(&format!(" member={m}"));
        }
        s
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Completion {
    pub text: String,
    pub retries: u32,
}

impl Completion {
    pub fn new(text: impl Into<String>) -> Self {
        Self {
            text: text.into(),
            retries: 0,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("gave up after {attempts} attempts (last status: {}): {message}", status.map_or("none".to_string(), |s| s.to_string()))]
    Exhausted {
        attempts: u32,
        status: Option<u16>,
        message: String,
    },
    #[error("endpoint returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed endpoint response: {0}")]
    Protocol(String),
    #[error("unscripted call: {0}")]
    Unscripted(String),
    #[error("script exhausted for {0}")]
    ScriptExhausted(String),
    #[error("script key registered twice: {0}")]
    DuplicateScript(String),
    #[error("no recorded response for {0}")]
    NotRecorded(String),
    #[error("simulation: {0}")]
    Simulation(String),
    #[error("transcript: {0}")]
    Transcript(String),
    #[error("configuration: {0}")]
    Config(String),
}

pub trait Backend: Send + Sync {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, BackendError>;
}

impl<B: Backend + ?Sized> Backend for &B {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, BackendError> {
        (**self).complete(request)
    }
}

impl<B: Backend + ?Sized> Backend for Box<B> {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, BackendError> {
        (**self).complete(request)
    }
}

impl<B: Backend + ?Sized> Backend for std::sync::Arc<B> {
    fn complete(&self, request: &CompletionRequest) -> Result<Completion, BackendError> {
        (**self).complete(request)
    }
}

/// Builds requests for one scenario.
#[derive(Debug, Clone)]
pub struct CallSite<'a> {
    pub scenario: &'a str,
    pub round: u32,
    pub params: &'a ModelParams,
}

impl<'a> CallSite<'a> {
    pub fn new(scenario: &'a str, round: u32, params: &'a ModelParams) -> Self {
        Self {
            scenario,
            round,
            params,
        }
    }

    pub fn request(&self, tag: &str, member: Option<&MemberId>, messages: Vec<ChatMessage>) -> CompletionRequest {
        CompletionRequest::new(
            tag,
            CallKey {
                scenario: self.scenario.to_string(),
                round: self.round,
                member: member.cloned(),
            },
            messages,
            self.params,
        )
    }
}
