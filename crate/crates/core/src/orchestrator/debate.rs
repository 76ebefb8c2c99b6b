use std::path::PathBuf;
use std::time::Duration;

use crate::backend::{ChatBackend, ChatParams, ChatRequest, ChatTurn, TurnRole};
use crate::protocol::{
    render_context, save_transcript, AgentSpec, ProjectDescription, RunMode, SectionMarkers,
    Transcript, TruncationMarker,
};

use super::clock::{Clock, FixedClock};
use super::labels::RunLabel;
use super::{DebateError, TeamConfig, DEFAULT_PACING};

/// Everything one run needs besides the team: the backend, its sampling
/// parameters, a clock, and optional round-boundary persistence. The
/// transcript file is rewritten after every message so a crash loses at most
/// one turn.
pub struct RunSession {
    pub backend: Box<dyn ChatBackend>,
    pub params: ChatParams,
    pub clock: Box<dyn Clock>,
    pub persist_root: Option<PathBuf>,
    /// Fixed delay between successive agent calls.
    pub pacing: Duration,
}

impl RunSession {
    /// A session over the given backend with deterministic timestamps and no
    /// persistence — the configuration every offline test wants.
    pub fn scripted(backend: impl ChatBackend + 'static) -> Self {
        RunSession {
            backend: Box::new(backend),
            params: ChatParams::default(),
            clock: Box::new(FixedClock::default()),
            persist_root: None,
            pacing: DEFAULT_PACING,
        }
    }

    fn persist(&self, transcript: &Transcript) -> Result<(), DebateError> {
        if let Some(root) = &self.persist_root {
            save_transcript(transcript, root)?;
        }
        Ok(())
    }
}

fn new_transcript(
    pd: &ProjectDescription,
    team: Vec<AgentSpec>,
    mode: RunMode,
    round_count: u32,
    label: &RunLabel,
    session: &RunSession,
) -> Transcript {
    Transcript {
        run_id: format!("{}:{}", pd.pd_id, label.render()),
        run_label: label.render(),
        mode,
        project: pd.clone(),
        team,
        round_count,
        messages: Vec::new(),
        backend_fingerprint: session.backend.fingerprint(&session.params),
        created_at: session.clock.now_rfc3339(),
        truncation: None,
    }
}

/// Runs the sequential rounds `first_round..=last_round` over an existing
/// transcript, appending one message per agent per round.
fn run_rounds(
    transcript: &mut Transcript,
    team: &TeamConfig,
    session: &mut RunSession,
    first_round: u32,
    last_round: u32,
) -> Result<(), DebateError> {
    let agents: Vec<AgentSpec> = team.ordered_agents().into_iter().cloned().collect();
    let markers: &SectionMarkers = &team.section_markers;

    for round in first_round..=last_round {
        for agent in &agents {
            let context = match render_context(transcript, agent, round, team.context_budget) {
                Ok(context) => context,
                Err(source) => {
                    let err = DebateError::ContextOverflow {
                        round,
                        agent_id: agent.agent_id.clone(),
                        source,
                    };
                    truncate_and_persist(transcript, session, round, agent, &err)?;
                    return Err(err);
                }
            };
            let request = context.to_chat_request(&agent.agent_id, session.params.clone());
            let response = match session.backend.complete(&request) {
                Ok(response) => response,
                Err(source) => {
                    let err = DebateError::BackendFailure {
                        round,
                        agent_id: agent.agent_id.clone(),
                        source,
                    };
                    truncate_and_persist(transcript, session, round, agent, &err)?;
                    return Err(err);
                }
            };

            tracing::info!(
                round,
                agent = %agent.agent_id,
                prompt_tokens = response.usage.prompt_tokens,
                completion_tokens = response.usage.completion_tokens,
                "agent turn complete"
            );

            let mut message = markers.parse(&response.text, agent, round);
            message.run_id = transcript.run_id.clone();
            message.usage = Some(response.usage);
            transcript.messages.push(message);
            session.persist(transcript)?;

            if !session.pacing.is_zero() {
                std::thread::sleep(session.pacing);
            }
        }
    }
    Ok(())
}

fn truncate_and_persist(
    transcript: &mut Transcript,
    session: &RunSession,
    round: u32,
    agent: &AgentSpec,
    err: &DebateError,
) -> Result<(), DebateError> {
    transcript.truncation = Some(TruncationMarker {
        round,
        agent_id: agent.agent_id.clone(),
        reason: err.to_string(),
    });
    session.persist(transcript)
}

/// Executes one full debate: for each round, each agent in position order
/// receives the entire prior history, completes, and its parsed output is
/// appended. A completed run has exactly `round_count × K` messages; a failed
/// run persists a truncated transcript and reports where it stopped.
pub fn run_debate(
    pd: &ProjectDescription,
    team: &TeamConfig,
    session: &mut RunSession,
    label: &RunLabel,
) -> Result<Transcript, DebateError> {
    team.validate()?;
    if pd.body.is_empty() {
        return Err(DebateError::InvalidArgument("project body must be non-empty".into()));
    }
    let agents: Vec<AgentSpec> = team.ordered_agents().into_iter().cloned().collect();
    let mut transcript =
        new_transcript(pd, agents, RunMode::Debate, team.round_count, label, session);
    session.persist(&transcript)?;
    run_rounds(&mut transcript, team, session, 1, team.round_count)?;
    Ok(transcript)
}

/// Synthetic single-member "team" recorded in baseline transcripts. The
/// system prompt is empty because the baseline condition sends none.
fn baseline_agent() -> AgentSpec {
    AgentSpec {
        agent_id: "baseline".to_string(),
        display_name: "Baseline".to_string(),
        role_title: "Single-prompt baseline".to_string(),
        system_prompt: String::new(),
        position_index: 1,
    }
}

/// The comparison condition: one request carrying only the project body — no
/// role prompts, no history, no rounds.
pub fn run_baseline(
    pd: &ProjectDescription,
    session: &mut RunSession,
    label: &RunLabel,
) -> Result<Transcript, DebateError> {
    if pd.body.is_empty() {
        return Err(DebateError::InvalidArgument("project body must be non-empty".into()));
    }
    let agent = baseline_agent();
    let mut transcript = new_transcript(pd, vec![agent.clone()], RunMode::Baseline, 1, label, session);

    let request = ChatRequest {
        system: String::new(),
        turns: vec![ChatTurn {
            speaker_tag: "project_description".to_string(),
            role: TurnRole::User,
            content: pd.body.clone(),
        }],
        params: session.params.clone(),
    };
    let response = match session.backend.complete(&request) {
        Ok(response) => response,
        Err(source) => {
            let err = DebateError::BackendFailure { round: 1, agent_id: agent.agent_id, source };
            transcript.truncation = Some(TruncationMarker {
                round: 1,
                agent_id: "baseline".to_string(),
                reason: err.to_string(),
            });
            session.persist(&transcript)?;
            return Err(err);
        }
    };

    let mut message = SectionMarkers::default().parse(&response.text, &agent, 1);
    message.run_id = transcript.run_id.clone();
    message.usage = Some(response.usage);
    transcript.messages.push(message);
    session.persist(&transcript)?;
    Ok(transcript)
}

/// Continues a completed debate for `additional_rounds` more rounds with the
/// full prior history. Truncated and baseline transcripts are not resumable.
/// Resumption uses default section markers and context budget.
pub fn resume_debate(
    transcript: &Transcript,
    additional_rounds: u32,
    session: &mut RunSession,
) -> Result<Transcript, DebateError> {
    if additional_rounds < 1 {
        return Err(DebateError::InvalidArgument("additional_rounds must be >= 1".into()));
    }
    if transcript.mode != RunMode::Debate {
        return Err(DebateError::NotResumable("baseline transcripts cannot be resumed".into()));
    }
    if !transcript.is_complete() {
        return Err(DebateError::NotResumable(
            "transcript is truncated or incomplete".into(),
        ));
    }

    let mut team = TeamConfig::new(transcript.team.clone());
    team.round_count = transcript.round_count + additional_rounds;
    team.validate()?;

    let mut resumed = transcript.clone();
    resumed.round_count = team.round_count;
    session.persist(&resumed)?;
    run_rounds(
        &mut resumed,
        &team,
        session,
        transcript.round_count + 1,
        team.round_count,
    )?;
    Ok(resumed)
}
