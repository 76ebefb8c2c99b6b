use std::time::Duration;

use serde_json::{json, Value};

use super::{
    BackendError, ChatBackend, ChatRequest, ChatResponse, FinishReason, TokenUsage, TurnRole,
};

/// Environment variable holding the bearer credential for remote runs.
pub const API_KEY_ENV: &str = "ETHOSFORGE_API_KEY";

const DEFAULT_ENDPOINT: &str = "https://api.openai.com/v1/chat/completions";
const BODY_EXCERPT_LEN: usize = 300;

/// Connection settings for an OpenAI-compatible chat-completions endpoint.
#[derive(Debug, Clone)]
pub struct RemoteConfig {
    /// Endpoint URL; a bare base URL gets `/chat/completions` appended.
    pub endpoint_url: String,
    pub api_key: Option<String>,
    /// Single-request timeout; a timeout classifies as transient-network for
    /// retry purposes.
    pub timeout: Duration,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            endpoint_url: DEFAULT_ENDPOINT.to_string(),
            api_key: std::env::var(API_KEY_ENV).ok(),
            timeout: Duration::from_secs(120),
        }
    }
}

/// HTTP adapter for any OpenAI-compatible chat-completions endpoint. Maps the
/// speaker-tagged debate history onto the two-role wire format: the active
/// agent's prior turns as `assistant`, everyone else as `user`.
pub struct RemoteBackend {
    config: RemoteConfig,
    url: String,
    agent: ureq::Agent,
}

impl RemoteBackend {
    pub fn new(config: RemoteConfig) -> Self {
        let url = if config.endpoint_url.contains("/chat/completions") {
            config.endpoint_url.clone()
        } else {
            format!("{}/chat/completions", config.endpoint_url.trim_end_matches('/'))
        };
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        RemoteBackend { config, url, agent }
    }

    fn wire_messages(request: &ChatRequest) -> Vec<Value> {
        let mut messages = Vec::with_capacity(request.turns.len() + 1);
        if !request.system.is_empty() {
            messages.push(json!({"role": "system", "content": request.system}));
        }
        for turn in &request.turns {
            let role = match turn.role {
                TurnRole::User => "user",
                TurnRole::Assistant => "assistant",
            };
            messages.push(json!({"role": role, "content": turn.content}));
        }
        messages
    }

    fn wire_body(request: &ChatRequest) -> Value {
        let mut body = json!({
            "model": request.params.model_name,
            "temperature": request.params.temperature,
            "max_tokens": request.params.max_output_tokens,
            "messages": Self::wire_messages(request),
        });
        if let Some(seed) = request.params.random_seed {
            body["seed"] = json!(seed);
        }
        body
    }

    fn parse_response(value: &Value) -> Result<ChatResponse, BackendError> {
        let choice = value
            .get("choices")
            .and_then(Value::as_array)
            .and_then(|c| c.first())
            .ok_or_else(|| BackendError::Remote {
                status: 200,
                body_excerpt: "response carries no choices".into(),
            })?;
        let text = choice
            .pointer("/message/content")
            .and_then(Value::as_str)
            .unwrap_or_default()
            .to_string();
        let finish_reason = match choice.get("finish_reason").and_then(Value::as_str) {
            Some("stop") => FinishReason::Stop,
            Some("length") => FinishReason::Length,
            _ => FinishReason::Other,
        };
        let usage = TokenUsage {
            prompt_tokens: value
                .pointer("/usage/prompt_tokens")
                .and_then(Value::as_u64)
                .unwrap_or(0),
            completion_tokens: value
                .pointer("/usage/completion_tokens")
                .and_then(Value::as_u64)
                .unwrap_or(0),
        };
        Ok(ChatResponse { text, usage, finish_reason })
    }
}

fn excerpt(body: &str) -> String {
    if body.len() <= BODY_EXCERPT_LEN {
        body.to_string()
    } else {
        let mut end = BODY_EXCERPT_LEN;
        while !body.is_char_boundary(end) {
            end -= 1;
        }
        format!("{}…", &body[..end])
    }
}

fn transport_error(err: ureq::Error) -> BackendError {
    match err {
        ureq::Error::Timeout(t) => BackendError::TransientNetwork(format!("timeout: {t}")),
        ureq::Error::Io(e) => BackendError::TransientNetwork(format!("io: {e}")),
        ureq::Error::HostNotFound => BackendError::TransientNetwork("host not found".into()),
        other => BackendError::TransientNetwork(other.to_string()),
    }
}

impl ChatBackend for RemoteBackend {
    fn complete(&mut self, request: &ChatRequest) -> Result<ChatResponse, BackendError> {
        request.validate()?;
        // Fail before any network activity when no credential is configured.
        let Some(api_key) = self.config.api_key.clone() else {
            return Err(BackendError::AuthMissing);
        };

        let body = Self::wire_body(request);
        let mut response = self
            .agent
            .post(&self.url)
            .header("Authorization", &format!("Bearer {api_key}"))
            .send_json(&body)
            .map_err(transport_error)?;

        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(transport_error)?;

        match status {
            200..=299 => {
                let value: Value = serde_json::from_str(&text).map_err(|e| BackendError::Remote {
                    status,
                    body_excerpt: format!("unparsable response body: {e}"),
                })?;
                Self::parse_response(&value)
            }
            429 => Err(BackendError::RateLimited { status, body_excerpt: excerpt(&text) }),
            _ => Err(BackendError::Remote { status, body_excerpt: excerpt(&text) }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{ChatParams, ChatTurn};

    fn request() -> ChatRequest {
        ChatRequest {
            system: "act as a developer".into(),
            turns: vec![
                ChatTurn {
                    speaker_tag: "project".into(),
                    role: TurnRole::User,
                    content: "the PD".into(),
                },
                ChatTurn {
                    speaker_tag: "dev1".into(),
                    role: TurnRole::Assistant,
                    content: "my earlier answer".into(),
                },
            ],
            params: ChatParams::default(),
        }
    }

    #[test]
    fn missing_credential_fails_before_network() {
        let mut backend = RemoteBackend::new(RemoteConfig {
            endpoint_url: "https://nonexistent.invalid".into(),
            api_key: None,
            timeout: Duration::from_secs(1),
        });
        let err = backend.complete(&request()).unwrap_err();
        assert!(matches!(err, BackendError::AuthMissing));
    }

    #[test]
    fn wire_body_maps_roles_and_omits_empty_system() {
        let body = RemoteBackend::wire_body(&request());
        let messages = body["messages"].as_array().unwrap();
        assert_eq!(messages.len(), 3);
        assert_eq!(messages[0]["role"], "system");
        assert_eq!(messages[1]["role"], "user");
        assert_eq!(messages[2]["role"], "assistant");

        let mut baseline = request();
        baseline.system = String::new();
        baseline.turns.truncate(1);
        let body = RemoteBackend::wire_body(&baseline);
        let messages = body["messages"].as_array().unwrap();
        assert_eq!(messages.len(), 1);
        assert_eq!(messages[0]["role"], "user");
    }

    #[test]
    fn wire_body_includes_seed_only_when_set() {
        let mut req = request();
        assert!(RemoteBackend::wire_body(&req).get("seed").is_none());
        req.params.random_seed = Some(11);
        assert_eq!(RemoteBackend::wire_body(&req)["seed"], 11);
    }

    #[test]
    fn parse_response_reads_choice_and_usage() {
        let value: Value = serde_json::from_str(
            r#"{"choices":[{"message":{"content":"hello"},"finish_reason":"stop"}],
                "usage":{"prompt_tokens":12,"completion_tokens":3}}"#,
        )
        .unwrap();
        let resp = RemoteBackend::parse_response(&value).unwrap();
        assert_eq!(resp.text, "hello");
        assert_eq!(resp.usage.prompt_tokens, 12);
        assert_eq!(resp.usage.completion_tokens, 3);
        assert_eq!(resp.finish_reason, FinishReason::Stop);
    }

    #[test]
    fn endpoint_path_is_appended_to_bare_base() {
        let backend = RemoteBackend::new(RemoteConfig {
            endpoint_url: "http://localhost:8080/v1".into(),
            api_key: Some("k".into()),
            timeout: Duration::from_secs(1),
        });
        assert_eq!(backend.url, "http://localhost:8080/v1/chat/completions");
    }

    #[test]
    fn fingerprint_never_leaks_the_credential() {
        let backend = RemoteBackend::new(RemoteConfig {
            endpoint_url: "http://localhost:8080/v1".into(),
            api_key: Some("sk-extremely-secret".into()),
            timeout: Duration::from_secs(1),
        });
        let fingerprint = backend.fingerprint(&ChatParams::default());
        assert!(!fingerprint.contains("secret"));
        assert!(fingerprint.starts_with("gpt-4o-mini:"));
    }
}
