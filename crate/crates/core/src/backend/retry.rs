use std::collections::BTreeSet;
use std::time::Duration;

use super::{BackendError, ChatBackend, ChatRequest, ChatResponse};

/// Failure classes a retry policy may opt into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RetryCondition {
    RateLimited,
    TransientNetwork,
    ServerError,
}

/// Geometric-backoff retry policy. Delay before attempt n+1 is
/// `base_delay * multiplier^(n-1)`.
#[derive(Debug, Clone)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base_delay: Duration,
    pub multiplier: f64,
    pub retryable_conditions: BTreeSet<RetryCondition>,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy {
            max_attempts: 3,
            base_delay: Duration::from_secs(1),
            multiplier: 2.0,
            retryable_conditions: [
                RetryCondition::RateLimited,
                RetryCondition::TransientNetwork,
                RetryCondition::ServerError,
            ]
            .into_iter()
            .collect(),
        }
    }
}

impl RetryPolicy {
    /// Delay to sleep after the given 1-based failed attempt.
    pub fn delay_after(&self, attempt: u32) -> Duration {
        let factor = self.multiplier.powi(attempt.saturating_sub(1) as i32);
        self.base_delay.mul_f64(factor.max(0.0))
    }

    pub fn is_retryable(&self, error: &BackendError) -> bool {
        error
            .retry_condition()
            .is_some_and(|c| self.retryable_conditions.contains(&c))
    }
}

/// Calls `complete` up to `policy.max_attempts` times, sleeping with
/// geometric backoff between attempts. Non-retryable errors propagate
/// immediately; exhaustion wraps the last error.
pub fn complete_with_retry(
    backend: &mut dyn ChatBackend,
    request: &ChatRequest,
    policy: &RetryPolicy,
) -> Result<ChatResponse, BackendError> {
    let attempts = policy.max_attempts.max(1);
    let mut last: Option<BackendError> = None;
    for attempt in 1..=attempts {
        match backend.complete(request) {
            Ok(response) => return Ok(response),
            Err(err) => {
                if !policy.is_retryable(&err) {
                    return Err(err);
                }
                tracing::warn!(attempt, max_attempts = attempts, error = %err, "retryable backend failure");
                last = Some(err);
                if attempt < attempts {
                    std::thread::sleep(policy.delay_after(attempt));
                }
            }
        }
    }
    Err(BackendError::RetriesExhausted {
        attempts,
        last: Box::new(last.expect("at least one attempt ran")),
    })
}
