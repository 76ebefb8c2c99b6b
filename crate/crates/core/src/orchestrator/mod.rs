//! The executable debate schedule: sequential multi-agent rounds over shared
//! append-only history, the single-prompt baseline condition, and N-fold
//! replication.

mod clock;
mod debate;
mod labels;
mod replicate;

pub use clock::{Clock, FixedClock, SystemClock};
pub use debate::{resume_debate, run_baseline, run_debate, RunSession};
pub use labels::{LabelKind, RunLabel};
pub use replicate::{
    run_replications, run_replications_parallel, DebateResult, ReplicationFailure,
};

use std::time::Duration;

use thiserror::Error;

use crate::backend::BackendError;
use crate::protocol::{AgentSpec, ContextBudget, ContextError, PersistError, SectionMarkers};

/// A debate team plus its schedule parameters. Defaults: five rounds, three
/// replications.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct TeamConfig {
    /// Agents ordered by `position_index`.
    pub agents: Vec<AgentSpec>,
    pub round_count: u32,
    pub replication_count: u32,
    pub context_budget: ContextBudget,
    #[serde(default)]
    pub section_markers: SectionMarkers,
}

impl TeamConfig {
    pub fn new(agents: Vec<AgentSpec>) -> Self {
        TeamConfig {
            agents,
            round_count: 5,
            replication_count: 3,
            context_budget: ContextBudget::default(),
            section_markers: SectionMarkers::default(),
        }
    }

    /// Checks team invariants: contiguous positions 1..K, non-empty system
    /// prompts, round_count ≥ 1.
    pub fn validate(&self) -> Result<(), DebateError> {
        if self.agents.is_empty() {
            return Err(DebateError::InvalidTeam("team must have at least one agent".into()));
        }
        if self.round_count < 1 {
            return Err(DebateError::InvalidTeam("round_count must be >= 1".into()));
        }
        let mut positions: Vec<u32> = self.agents.iter().map(|a| a.position_index).collect();
        positions.sort_unstable();
        let expected: Vec<u32> = (1..=self.agents.len() as u32).collect();
        if positions != expected {
            return Err(DebateError::InvalidTeam(format!(
                "agent positions must be contiguous 1..{}, got {positions:?}",
                self.agents.len()
            )));
        }
        if let Some(agent) = self.agents.iter().find(|a| a.system_prompt.is_empty()) {
            return Err(DebateError::InvalidTeam(format!(
                "agent '{}' has an empty system prompt",
                agent.agent_id
            )));
        }
        Ok(())
    }

    /// Agents in speaking order.
    pub fn ordered_agents(&self) -> Vec<&AgentSpec> {
        let mut agents: Vec<&AgentSpec> = self.agents.iter().collect();
        agents.sort_by_key(|a| a.position_index);
        agents
    }
}

#[derive(Debug, Error)]
pub enum DebateError {
    #[error("backend failure at round {round}, agent '{agent_id}': {source}")]
    BackendFailure {
        round: u32,
        agent_id: String,
        #[source]
        source: BackendError,
    },
    #[error("context overflow at round {round}, agent '{agent_id}': {source}")]
    ContextOverflow {
        round: u32,
        agent_id: String,
        #[source]
        source: ContextError,
    },
    #[error("invalid team configuration: {0}")]
    InvalidTeam(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("transcript is not resumable: {0}")]
    NotResumable(String),
    #[error("all {} replications failed", failures.len())]
    AllReplicationsFailed { failures: Vec<ReplicationFailure> },
    #[error(transparent)]
    Persist(#[from] PersistError),
}

/// Optional fixed delay between successive agent calls, for rate-limit
/// friendliness. Zero by default.
pub const DEFAULT_PACING: Duration = Duration::ZERO;
