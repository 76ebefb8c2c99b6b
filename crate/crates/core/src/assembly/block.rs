use serde::{Deserialize, Serialize};

use crate::protocol::SectionKind;

/// How confident the path-inference chain is about a block's file path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathConfidence {
    /// A `# file:` / `// file:` marker named the path outright.
    Explicit,
    /// Inferred from a cross-block import of a symbol this block defines.
    Heuristic,
    /// Ordinal `snippet_<n>.<ext>` placeholder.
    Fallback,
}

/// Where in the debate a code block came from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockOrigin {
    pub round: u32,
    pub agent_id: String,
    /// Author's position within the round, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub position_index: Option<u32>,
    /// Protocol section the fence appeared in, if it fell inside one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub section_kind: Option<SectionKind>,
}

/// One fenced code block extracted from an agent message.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeBlock {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language_hint: Option<String>,
    /// Fence body, byte-exact from the source message.
    pub text: String,
    pub origin: BlockOrigin,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inferred_path: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path_confidence: Option<PathConfidence>,
    /// Set when the closing fence was missing and the body was recovered to
    /// the end of the message.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub unterminated: bool,
}
