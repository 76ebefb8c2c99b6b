//! Chat-completion boundary: a uniform trait with a remote adapter for any
//! OpenAI-compatible endpoint and a deterministic scripted backend for
//! offline runs.

mod remote;
mod retry;
mod scripted;

pub use remote::{RemoteBackend, RemoteConfig, API_KEY_ENV};
pub use retry::{complete_with_retry, RetryCondition, RetryPolicy};
pub use scripted::ScriptedBackend;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Sampling parameters for one completion call. Defaults: temperature 0.7,
/// 2048 output tokens.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatParams {
    pub model_name: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_seed: Option<u64>,
}

impl Default for ChatParams {
    fn default() -> Self {
        ChatParams {
            model_name: "gpt-4o-mini".to_string(),
            temperature: 0.7,
            max_output_tokens: 2048,
            random_seed: None,
        }
    }
}

/// Role a history turn is sent under in the two-role chat wire format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TurnRole {
    User,
    Assistant,
}

/// One prior turn of the conversation as presented to the model. The active
/// agent's own prior turns are sent as `assistant`; every other speaker is
/// sent as `user` with a `[<display name>]: ` prefix already applied to the
/// content.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatTurn {
    pub speaker_tag: String,
    pub role: TurnRole,
    pub content: String,
}

/// A full request to a chat backend.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    /// System prompt; empty for baseline runs, where it is omitted on the wire.
    pub system: String,
    pub turns: Vec<ChatTurn>,
    pub params: ChatParams,
}

impl ChatRequest {
    /// Total whitespace-separated words across system and turn contents.
    /// The scripted backend reports this as prompt token usage.
    pub fn word_count(&self) -> u64 {
        let mut count = self.system.split_whitespace().count() as u64;
        for turn in &self.turns {
            count += turn.content.split_whitespace().count() as u64;
        }
        count
    }

    fn validate(&self) -> Result<(), BackendError> {
        if self.turns.is_empty() {
            return Err(BackendError::InvalidRequest("turns must be non-empty".into()));
        }
        if self.params.model_name.is_empty() {
            return Err(BackendError::InvalidRequest("model_name must be non-empty".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenUsage {
    pub prompt_tokens: u64,
    pub completion_tokens: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FinishReason {
    Stop,
    Length,
    Other,
}

/// A completion: the model text plus usage accounting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatResponse {
    pub text: String,
    pub usage: TokenUsage,
    pub finish_reason: FinishReason,
}

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("no API credential configured (set {API_KEY_ENV})")]
    AuthMissing,
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("remote error (status {status}): {body_excerpt}")]
    Remote { status: u16, body_excerpt: String },
    #[error("rate limited (status {status}): {body_excerpt}")]
    RateLimited { status: u16, body_excerpt: String },
    #[error("transient network failure: {0}")]
    TransientNetwork(String),
    #[error("scripted backend exhausted after {served} responses")]
    ScriptExhausted { served: usize },
    #[error("retries exhausted after {attempts} attempts: {last}")]
    RetriesExhausted {
        attempts: u32,
        #[source]
        last: Box<BackendError>,
    },
}

impl BackendError {
    /// Condition class used by retry policies; `None` means non-retryable.
    pub fn retry_condition(&self) -> Option<RetryCondition> {
        match self {
            BackendError::RateLimited { .. } => Some(RetryCondition::RateLimited),
            BackendError::TransientNetwork(_) => Some(RetryCondition::TransientNetwork),
            BackendError::Remote { status, .. } if *status >= 500 => {
                Some(RetryCondition::ServerError)
            }
            _ => None,
        }
    }
}

/// Uniform completion boundary implemented by the remote adapter and the
/// scripted backend. `complete` validates the request before doing anything
/// else, so invariant breaches never reach the wire.
pub trait ChatBackend: Send {
    fn complete(&mut self, request: &ChatRequest) -> Result<ChatResponse, BackendError>;

    /// Stable provenance text recorded into transcripts: model name (or a
    /// backend tag) plus a digest of the sampling parameters.
    fn fingerprint(&self, params: &ChatParams) -> String {
        format!("{}:{}", params.model_name, fingerprint_params(params))
    }
}

/// Stable hex digest of the sampling parameters. Equal parameters give equal
/// digests; any parameter change (including setting a seed) changes it.
pub fn fingerprint_params(params: &ChatParams) -> String {
    let mut canon = format!(
        "model={};temperature={};max_output_tokens={}",
        params.model_name, params.temperature, params.max_output_tokens
    );
    if let Some(seed) = params.random_seed {
        canon.push_str(&format!(";seed={seed}"));
    }
    let digest = Sha256::digest(canon.as_bytes());
    let mut out = String::with_capacity(16);
    for byte in digest.iter().take(8) {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}
