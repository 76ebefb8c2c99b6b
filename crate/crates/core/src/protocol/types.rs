use serde::{Deserialize, Serialize};

use crate::assembly::CodeBlock;
use crate::backend::TokenUsage;

/// One member of a debate team: a role identity plus its position in the
/// sequential workflow.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub agent_id: String,
    pub display_name: String,
    /// E.g. "Senior Python Developer" or "AI Ethicist".
    pub role_title: String,
    pub system_prompt: String,
    /// Order within a round, 1-based. Positions within a team must be
    /// contiguous 1..K with no duplicates.
    pub position_index: u32,
}

/// The task brief a debate works on, typically derived from a real incident.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectDescription {
    pub pd_id: String,
    pub title: String,
    pub body: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub incident_ref: Option<String>,
}

/// The four protocol section kinds every agent turn is parsed into.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SectionKind {
    Reply,
    Reflection,
    Code,
    Critique,
}

impl SectionKind {
    pub const ALL: [SectionKind; 4] = [
        SectionKind::Reply,
        SectionKind::Reflection,
        SectionKind::Code,
        SectionKind::Critique,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SectionKind::Reply => "reply",
            SectionKind::Reflection => "reflection",
            SectionKind::Code => "code",
            SectionKind::Critique => "critique",
        }
    }
}

/// One labeled slice of an agent's output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Section {
    pub kind: SectionKind,
    pub text: String,
}

/// A single agent turn: the raw model output, its parsed sections, and any
/// code fences found inside it. Parsing is non-destructive; `raw_text` is
/// always the unmodified model output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructuredMessage {
    pub run_id: String,
    /// 1-based debate round.
    pub round: u32,
    pub agent_id: String,
    pub raw_text: String,
    /// At most one section per kind, in order of appearance.
    pub sections: Vec<Section>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub code_blocks: Vec<CodeBlock>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub usage: Option<TokenUsage>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Whether a transcript came from the orchestrated debate or the
/// single-prompt baseline condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunMode {
    Debate,
    Baseline,
}

/// Where and why a run stopped early. A completed run carries no marker.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationMarker {
    pub round: u32,
    pub agent_id: String,
    pub reason: String,
}

/// The append-only debate record: one project, one team, all messages in
/// (round, position) order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub run_id: String,
    /// Replication-scheme label such as "O1_2" or "AS_1".
    pub run_label: String,
    pub mode: RunMode,
    pub project: ProjectDescription,
    pub team: Vec<AgentSpec>,
    pub round_count: u32,
    pub messages: Vec<StructuredMessage>,
    /// Model name plus parameter digest of the backend that produced this run.
    pub backend_fingerprint: String,
    /// RFC 3339 creation time. Deterministic clocks produce a fixed value so
    /// scripted runs are byte-reproducible.
    pub created_at: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<TruncationMarker>,
}

impl Transcript {
    /// Position index of an agent within this transcript's team, if present.
    pub fn position_of(&self, agent_id: &str) -> Option<u32> {
        self.team
            .iter()
            .find(|a| a.agent_id == agent_id)
            .map(|a| a.position_index)
    }

    pub fn team_size(&self) -> usize {
        self.team.len()
    }

    /// True when the transcript represents a finished run: no truncation and
    /// the full message-count law holds.
    pub fn is_complete(&self) -> bool {
        if self.truncation.is_some() {
            return false;
        }
        match self.mode {
            RunMode::Debate => {
                self.messages.len() == self.round_count as usize * self.team.len()
            }
            RunMode::Baseline => self.messages.len() == 1,
        }
    }
}
