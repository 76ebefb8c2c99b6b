use thiserror::Error;

use crate::backend::{ChatParams, ChatRequest, ChatTurn, TurnRole};

use super::types::{AgentSpec, Transcript};

/// What to do when a rendered context would exceed its budget. The protocol
/// promises each agent the entire history, so the default is to stop the run
/// rather than silently truncate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverflowPolicy {
    /// Raise `ContextOverflow`.
    #[default]
    Error,
    /// Drop the oldest prior messages until the context fits, replacing them
    /// with an explicit elision marker turn — loud, never silent.
    ElideOldest,
}

/// Upper bound on the estimated token size of a rendered context.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct ContextBudget {
    pub max_tokens: usize,
    #[serde(default)]
    pub overflow: OverflowPolicy,
}

impl Default for ContextBudget {
    fn default() -> Self {
        // Generous default sized for 128k-context models.
        ContextBudget { max_tokens: 120_000, overflow: OverflowPolicy::Error }
    }
}

impl ContextBudget {
    pub fn strict(max_tokens: usize) -> Self {
        ContextBudget { max_tokens, overflow: OverflowPolicy::Error }
    }
}

/// One prior debate turn as rendered into an agent's context.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTurn {
    pub agent_id: String,
    pub display_name: String,
    pub raw_text: String,
}

/// The full input for one agent slot: its system prompt, the project body,
/// and every prior message in transcript order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptContext {
    pub system_prompt: String,
    pub project_body: String,
    pub prior: Vec<PromptTurn>,
    pub estimated_tokens: usize,
}

#[derive(Debug, Error)]
pub enum ContextError {
    #[error("estimated context of {estimated} tokens exceeds budget of {budget}")]
    ContextOverflow { estimated: usize, budget: usize },
    #[error("agent '{0}' is not a member of the transcript team")]
    UnknownAgent(String),
    #[error("round must be >= 1")]
    InvalidRound,
}

/// Conservative size heuristic: characters divided by four, rounded up.
/// Backend-reported usage is recorded separately when available.
pub fn estimate_tokens(text_chars: usize) -> usize {
    text_chars.div_ceil(4)
}

/// Renders the context for `agent` speaking in `round`: system prompt, the
/// project description body, then the raw text of every message from earlier
/// slots, in transcript order. For the agent at position i in round r with
/// team size K, that is exactly K·(r−1) + (i−1) prior messages.
pub fn render_context(
    transcript: &Transcript,
    agent: &AgentSpec,
    round: u32,
    budget: ContextBudget,
) -> Result<PromptContext, ContextError> {
    if round < 1 {
        return Err(ContextError::InvalidRound);
    }
    if transcript.position_of(&agent.agent_id).is_none() {
        return Err(ContextError::UnknownAgent(agent.agent_id.clone()));
    }

    let slot = (round, agent.position_index);
    let mut prior = Vec::new();
    let mut chars = agent.system_prompt.chars().count()
        + transcript.project.body.chars().count();

    for message in &transcript.messages {
        let position = transcript.position_of(&message.agent_id).unwrap_or(u32::MAX);
        if (message.round, position) >= slot {
            continue;
        }
        let display_name = transcript
            .team
            .iter()
            .find(|a| a.agent_id == message.agent_id)
            .map(|a| a.display_name.clone())
            .unwrap_or_else(|| message.agent_id.clone());
        chars += message.raw_text.chars().count();
        prior.push(PromptTurn {
            agent_id: message.agent_id.clone(),
            display_name,
            raw_text: message.raw_text.clone(),
        });
    }

    let mut estimated_tokens = estimate_tokens(chars);
    if estimated_tokens > budget.max_tokens {
        match budget.overflow {
            OverflowPolicy::Error => {
                return Err(ContextError::ContextOverflow {
                    estimated: estimated_tokens,
                    budget: budget.max_tokens,
                });
            }
            OverflowPolicy::ElideOldest => {
                let mut elided = 0usize;
                while estimated_tokens > budget.max_tokens && !prior.is_empty() {
                    let dropped = prior.remove(0);
                    chars -= dropped.raw_text.chars().count();
                    elided += 1;
                    let marker = elision_marker(elided);
                    estimated_tokens = estimate_tokens(chars + marker.chars().count());
                }
                if elided > 0 {
                    prior.insert(
                        0,
                        PromptTurn {
                            agent_id: "history".to_string(),
                            display_name: "History".to_string(),
                            raw_text: elision_marker(elided),
                        },
                    );
                }
                // Even an empty history can overflow a tiny budget.
                if estimated_tokens > budget.max_tokens {
                    return Err(ContextError::ContextOverflow {
                        estimated: estimated_tokens,
                        budget: budget.max_tokens,
                    });
                }
            }
        }
    }

    Ok(PromptContext {
        system_prompt: agent.system_prompt.clone(),
        project_body: transcript.project.body.clone(),
        prior,
        estimated_tokens,
    })
}

fn elision_marker(count: usize) -> String {
    format!("[context elided: the oldest {count} message(s) were dropped to fit the budget]")
}

impl PromptContext {
    /// Maps the context onto the two-role chat wire shape: the project body
    /// first as a user turn, then each prior message — the active agent's own
    /// turns as assistant, all other agents as user turns prefixed with
    /// `[<display name>]: `.
    pub fn to_chat_request(&self, active_agent_id: &str, params: ChatParams) -> ChatRequest {
        let mut turns = Vec::with_capacity(self.prior.len() + 1);
        turns.push(ChatTurn {
            speaker_tag: "project_description".to_string(),
            role: TurnRole::User,
            content: self.project_body.clone(),
        });
        for turn in &self.prior {
            if turn.agent_id == active_agent_id {
                turns.push(ChatTurn {
                    speaker_tag: turn.agent_id.clone(),
                    role: TurnRole::Assistant,
                    content: turn.raw_text.clone(),
                });
            } else {
                turns.push(ChatTurn {
                    speaker_tag: turn.agent_id.clone(),
                    role: TurnRole::User,
                    content: format!("[{}]: {}", turn.display_name, turn.raw_text),
                });
            }
        }
        ChatRequest { system: self.system_prompt.clone(), turns, params }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{parse_agent_output, ProjectDescription, RunMode};

    fn team(k: u32) -> Vec<AgentSpec> {
        (1..=k)
            .map(|i| AgentSpec {
                agent_id: format!("a{i}"),
                display_name: format!("Agent {i}"),
                role_title: "Developer".into(),
                system_prompt: format!("prompt {i}"),
                position_index: i,
            })
            .collect()
    }

    fn transcript_with(k: u32, filled_slots: u32) -> Transcript {
        let team = team(k);
        let mut messages = Vec::new();
        for slot in 0..filled_slots {
            let round = slot / k + 1;
            let agent = &team[(slot % k) as usize];
            let mut msg = parse_agent_output(&format!("message r{round} {}", agent.agent_id), agent, round);
            msg.run_id = "run".into();
            messages.push(msg);
        }
        Transcript {
            run_id: "run".into(),
            run_label: "O1_1".into(),
            mode: RunMode::Debate,
            project: ProjectDescription {
                pd_id: "pd1".into(),
                title: "t".into(),
                body: "the project".into(),
                incident_ref: None,
            },
            team,
            round_count: 5,
            messages,
            backend_fingerprint: "scripted:x".into(),
            created_at: "1970-01-01T00:00:00Z".into(),
            truncation: None,
        }
    }

    #[test]
    fn first_slot_sees_no_history() {
        let t = transcript_with(3, 0);
        let ctx = render_context(&t, &t.team[0], 1, ContextBudget::default()).unwrap();
        assert!(ctx.prior.is_empty());
        assert_eq!(ctx.system_prompt, "prompt 1");
        assert_eq!(ctx.project_body, "the project");
    }

    #[test]
    fn prior_count_follows_the_arithmetic() {
        // Slot (r=2, i=3) with K=3 sees 3·1 + 2 = 5 prior messages.
        let t = transcript_with(3, 15);
        let ctx = render_context(&t, &t.team[2], 2, ContextBudget::default()).unwrap();
        assert_eq!(ctx.prior.len(), 5);
    }

    #[test]
    fn arithmetic_holds_for_all_slots() {
        let (k, rounds) = (3u32, 5u32);
        let t = transcript_with(k, k * rounds);
        for r in 1..=rounds {
            for i in 1..=k {
                let ctx =
                    render_context(&t, &t.team[(i - 1) as usize], r, ContextBudget::default())
                        .unwrap();
                assert_eq!(ctx.prior.len() as u32, k * (r - 1) + (i - 1));
            }
        }
    }

    #[test]
    fn slot_contexts_are_prefixes_of_the_next() {
        let k = 3u32;
        let t = transcript_with(k, 15);
        let mut previous: Vec<String> = Vec::new();
        for r in 1..=5u32 {
            for i in 1..=k {
                let ctx =
                    render_context(&t, &t.team[(i - 1) as usize], r, ContextBudget::default())
                        .unwrap();
                let texts: Vec<String> = ctx.prior.iter().map(|p| p.raw_text.clone()).collect();
                assert!(texts.starts_with(&previous));
                previous = texts;
            }
        }
    }

    #[test]
    fn tiny_budget_overflows_instead_of_truncating() {
        let t = transcript_with(3, 6);
        let err = render_context(&t, &t.team[0], 3, ContextBudget::strict(10)).unwrap_err();
        assert!(matches!(err, ContextError::ContextOverflow { .. }));
    }

    #[test]
    fn elide_oldest_mode_drops_history_loudly() {
        let t = transcript_with(3, 6);
        let full = render_context(&t, &t.team[0], 3, ContextBudget::default()).unwrap();
        assert_eq!(full.prior.len(), 6);

        let budget = ContextBudget {
            max_tokens: full.estimated_tokens - 1,
            overflow: OverflowPolicy::ElideOldest,
        };
        let elided = render_context(&t, &t.team[0], 3, budget).unwrap();
        assert!(elided.estimated_tokens <= budget.max_tokens);
        assert!(elided.prior.len() < full.prior.len() + 1);
        assert!(elided.prior[0].raw_text.contains("context elided"));
        // The surviving turns are the newest ones, still in order.
        let survivors: Vec<&str> =
            elided.prior[1..].iter().map(|p| p.raw_text.as_str()).collect();
        let tail: Vec<&str> = full.prior[full.prior.len() - survivors.len()..]
            .iter()
            .map(|p| p.raw_text.as_str())
            .collect();
        assert_eq!(survivors, tail);

        // A budget too small even for the fixed parts still errors.
        let hopeless = ContextBudget { max_tokens: 1, overflow: OverflowPolicy::ElideOldest };
        assert!(matches!(
            render_context(&t, &t.team[0], 3, hopeless),
            Err(ContextError::ContextOverflow { .. })
        ));
    }

    #[test]
    fn unknown_agent_is_rejected() {
        let t = transcript_with(2, 0);
        let stranger = AgentSpec {
            agent_id: "zz".into(),
            display_name: "Z".into(),
            role_title: "X".into(),
            system_prompt: "p".into(),
            position_index: 9,
        };
        assert!(matches!(
            render_context(&t, &stranger, 1, ContextBudget::default()),
            Err(ContextError::UnknownAgent(_))
        ));
    }

    #[test]
    fn chat_request_maps_self_to_assistant_and_others_to_user() {
        let t = transcript_with(3, 4);
        let ctx = render_context(&t, &t.team[1], 2, ContextBudget::default()).unwrap();
        let req = ctx.to_chat_request("a2", ChatParams::default());
        // project body + 4 prior
        assert_eq!(req.turns.len(), 5);
        assert_eq!(req.turns[0].role, TurnRole::User);
        // prior slots: r1a1 (user), r1a2 (assistant/self), r1a3 (user), r2a1 (user)
        assert_eq!(req.turns[1].role, TurnRole::User);
        assert!(req.turns[1].content.starts_with("[Agent 1]: "));
        assert_eq!(req.turns[2].role, TurnRole::Assistant);
        assert!(!req.turns[2].content.starts_with('['));
        assert_eq!(req.turns[3].role, TurnRole::User);
        assert_eq!(req.turns[4].role, TurnRole::User);
    }

    #[test]
    fn token_estimate_is_chars_over_four() {
        assert_eq!(estimate_tokens(0), 0);
        assert_eq!(estimate_tokens(1), 1);
        assert_eq!(estimate_tokens(4), 1);
        assert_eq!(estimate_tokens(5), 2);
    }
}
