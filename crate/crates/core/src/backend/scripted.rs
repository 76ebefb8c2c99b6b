use super::{
    fingerprint_params, BackendError, ChatBackend, ChatParams, ChatRequest, ChatResponse,
    FinishReason, TokenUsage,
};

/// Deterministic backend serving a fixed queue of canned responses, in order.
/// Exhaustion is an error. Usage is derived from word counts so repeated runs
/// over the same script are bit-identical.
///
/// Single-consumer: one scripted backend drives one run.
#[derive(Debug, Clone)]
pub struct ScriptedBackend {
    responses: Vec<String>,
    served_count: usize,
}

impl ScriptedBackend {
    pub fn new<I, S>(responses: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        ScriptedBackend {
            responses: responses.into_iter().map(Into::into).collect(),
            served_count: 0,
        }
    }

    /// Parses a script file body: responses separated by a sentinel line
    /// `=== NEXT ===`. A trailing newline before the sentinel belongs to the
    /// separator, not the response.
    pub fn from_script(script: &str) -> Self {
        let mut responses = Vec::new();
        let mut current = String::new();
        for line in script.split_inclusive('\n') {
            let bare = line.strip_suffix('\n').unwrap_or(line);
            let bare = bare.strip_suffix('\r').unwrap_or(bare);
            if bare.trim() == "=== NEXT ===" {
                responses.push(std::mem::take(&mut current));
            } else {
                current.push_str(line);
            }
        }
        if !current.trim().is_empty() {
            responses.push(current);
        }
        // Strip one trailing newline per response; the separator line owns it.
        let responses = responses
            .into_iter()
            .map(|r| r.strip_suffix('\n').map(str::to_string).unwrap_or(r))
            .collect();
        ScriptedBackend { responses, served_count: 0 }
    }

    pub fn served_count(&self) -> usize {
        self.served_count
    }

    pub fn remaining(&self) -> usize {
        self.responses.len() - self.served_count
    }
}

impl ChatBackend for ScriptedBackend {
    fn complete(&mut self, request: &ChatRequest) -> Result<ChatResponse, BackendError> {
        request.validate()?;
        let Some(text) = self.responses.get(self.served_count) else {
            return Err(BackendError::ScriptExhausted { served: self.served_count });
        };
        self.served_count += 1;
        Ok(ChatResponse {
            usage: TokenUsage {
                prompt_tokens: request.word_count(),
                completion_tokens: text.split_whitespace().count() as u64,
            },
            finish_reason: FinishReason::Stop,
            text: text.clone(),
        })
    }

    fn fingerprint(&self, params: &ChatParams) -> String {
        format!("scripted:{}", fingerprint_params(params))
    }
}
