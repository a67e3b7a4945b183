//! Provider-agnostic chat transport: a live HTTP client for
//! chat-completion endpoints and a scripted replay transport.

use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

pub const ENV_ENDPOINT: &str = "IMR_LLM_ENDPOINT";
pub const ENV_MODEL: &str = "IMR_LLM_MODEL";
pub const ENV_API_KEY: &str = "IMR_LLM_API_KEY";

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
    pub fn new(role: Role, content: impl Into<String>) -> Self {
        Self { role, content: content.into() }
    }
}

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("transport not configured: {0}")]
    Config(String),
    #[error("request failed: {0}")]
    Http(String),
    #[error("unexpected response body: {0}")]
    Decode(String),
    #[error("script has no record left for request {0}")]
    ScriptExhausted(usize),
    #[error("request {index} does not match the script (expected digest {expected}, got {actual})")]
    ScriptMismatch {
        index: usize,
        expected: String,
        actual: String,
    },
    #[error("cannot read script: {0}")]
    Script(String),
}

/// Sends the full message history and returns the assistant's text. Each
/// call is independent; implementations keep no conversation state.
pub trait ChatTransport: Send + Sync {
    fn send(&self, messages: &[ChatMessage]) -> Result<String, TransportError>;
}

/// SHA-256 over the compact JSON of the message list.
pub fn request_digest(messages: &[ChatMessage]) -> String {
    let body = serde_json::to_vec(messages).expect("messages serialize");
    hex::encode(Sha256::digest(&body))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScriptRecord {
    /// Expected request digest; `None` replays without checking.
    #[serde(default)]
    pub digest: Option<String>,
    pub response: String,
}

/// Replays canned responses in order, checking request digests where the
/// record carries one.
#[derive(Debug)]
pub struct ScriptedTransport {
    records: Vec<ScriptRecord>,
    cursor: Mutex<usize>,
}

impl ScriptedTransport {
    pub fn new(records: Vec<ScriptRecord>) -> Self {
        Self { records, cursor: Mutex::new(0) }
    }

    /// Reads a JSON array of records.
    pub fn load(path: &Path) -> Result<Self, TransportError> {
        let text = std::fs::read_to_string(path).map_err(|e| TransportError::Script(format!("{}: {e}", path.display())))?;
        let records = serde_json::from_str(&text).map_err(|e| TransportError::Script(format!("{}: {e}", path.display())))?;
        Ok(Self::new(records))
    }

    /// Skips the first `n` records, used to resume a stored session.
    pub fn starting_at(self, n: usize) -> Self {
        *self.cursor.lock().unwrap() = n;
        self
    }

    pub fn position(&self) -> usize {
        *self.cursor.lock().unwrap()
    }
}

impl ChatTransport for ScriptedTransport {
    fn send(&self, messages: &[ChatMessage]) -> Result<String, TransportError> {
        let mut cursor = self.cursor.lock().unwrap();
        let index = *cursor;
        let record = self.records.get(index).ok_or(TransportError::ScriptExhausted(index))?;
        if let Some(expected) = &record.digest {
            let actual = request_digest(messages);
            if &actual != expected {
                return Err(TransportError::ScriptMismatch {
                    index,
                    expected: expected.clone(),
                    actual,
                });
            }
        }
        *cursor += 1;
        Ok(record.response.clone())
    }
}

/// Blocking client for a generic chat-completion endpoint.
pub struct HttpTransport {
    agent: ureq::Agent,
    endpoint: String,
    model: String,
    api_key: Option<String>,
}

#[derive(Serialize)]
struct CompletionRequest<'a> {
    model: &'a str,
    temperature: f64,
    messages: &'a [ChatMessage],
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: ChatMessage,
}

impl HttpTransport {
    pub fn new(endpoint: impl Into<String>, model: impl Into<String>, api_key: Option<String>) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(180)))
            .build()
            .into();
        Self {
            agent,
            endpoint: endpoint.into(),
            model: model.into(),
            api_key,
        }
    }

    /// Endpoint is required; the model defaults to `default` and the key is
    /// optional.
    pub fn from_env() -> Result<Self, TransportError> {
        let endpoint = std::env::var(ENV_ENDPOINT)
            .map_err(|_| TransportError::Config(format!("set {ENV_ENDPOINT} or supply a transcript")))?;
        let model = std::env::var(ENV_MODEL).unwrap_or_else(|_| "default".to_string());
        Ok(Self::new(endpoint, model, std::env::var(ENV_API_KEY).ok()))
    }
}

impl ChatTransport for HttpTransport {
    fn send(&self, messages: &[ChatMessage]) -> Result<String, TransportError> {
        let body = CompletionRequest {
            model: &self.model,
            temperature: 0.0,
            messages,
        };
        let mut req = self.agent.post(&self.endpoint);
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req.send_json(&body).map_err(|e| TransportError::Http(e.to_string()))?;
        let parsed: CompletionResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| TransportError::Decode(e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| TransportError::Decode("no choices".into()))
    }
}
