use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::block::{BlockOrigin, CodeBlock};
use super::deps::ScanConfig;

/// How same-path blocks from different rounds are merged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MergeStrategy {
    /// Keep the latest-round version: the debate refines code iteratively,
    /// so later rounds supersede earlier ones. The default.
    LastWins,
    /// Keep the first version seen.
    FirstWins,
    /// Fail on any path written twice with differing content.
    ErrorOnConflict,
}

/// An assembled file layout: path → content plus per-path provenance and the
/// internal modules the code references but no file provides.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProjectTree {
    pub files: BTreeMap<String, String>,
    pub provenance: BTreeMap<String, Vec<BlockOrigin>>,
    pub unresolved_refs: Vec<String>,
    pub strategy: MergeStrategy,
}

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("block {index} has no inferred path; run path inference first")]
    MissingPath { index: usize },
    #[error("unsafe path '{0}': paths must be relative with no traversal segments")]
    UnsafePath(String),
    #[error("conflicting content for path '{path}' ({contributors} contributors)")]
    PathConflict { path: String, contributors: usize },
    #[error("invalid normalization table: {0}")]
    InvalidNormalizationTable(String),
    #[error("io failure at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Normalizes a candidate relative path, rejecting traversal and absolute
/// forms. `./x`, doubled separators, and backslashes are cleaned up.
pub(crate) fn normalize_path(raw: &str) -> Result<String, AssemblyError> {
    let cleaned = raw.replace('\\', "/");
    if cleaned.starts_with('/') || cleaned.contains(':') {
        return Err(AssemblyError::UnsafePath(raw.to_string()));
    }
    let mut parts = Vec::new();
    for segment in cleaned.split('/') {
        match segment {
            "" | "." => continue,
            ".." => return Err(AssemblyError::UnsafePath(raw.to_string())),
            other => parts.push(other),
        }
    }
    if parts.is_empty() {
        return Err(AssemblyError::UnsafePath(raw.to_string()));
    }
    Ok(parts.join("/"))
}

/// Merge rank: greater means later in the debate. List order breaks ties so
/// within-message fence order is respected.
fn origin_rank(origin: &BlockOrigin, list_index: usize) -> (u32, u32, usize) {
    (origin.round, origin.position_index.unwrap_or(0), list_index)
}

/// Groups blocks by inferred path and merges them under the chosen strategy.
/// Provenance keeps every contributing origin (identical duplicates are
/// recorded once); imports of modules no file provides land in
/// `unresolved_refs`.
pub fn assemble_project(
    blocks: &[CodeBlock],
    strategy: MergeStrategy,
) -> Result<ProjectTree, AssemblyError> {
    // path → (content, rank, origins, distinct contents)
    struct Slot {
        content: String,
        rank: (u32, u32, usize),
        origins: Vec<BlockOrigin>,
        distinct: Vec<String>,
    }
    let mut slots: BTreeMap<String, Slot> = BTreeMap::new();

    for (index, block) in blocks.iter().enumerate() {
        let raw_path = block
            .inferred_path
            .as_deref()
            .ok_or(AssemblyError::MissingPath { index })?;
        let path = normalize_path(raw_path)?;
        let rank = origin_rank(&block.origin, index);

        let slot = slots.entry(path).or_insert_with(|| Slot {
            content: block.text.clone(),
            rank,
            origins: Vec::new(),
            distinct: Vec::new(),
        });
        if !slot.origins.contains(&block.origin) {
            slot.origins.push(block.origin.clone());
        }
        if !slot.distinct.contains(&block.text) {
            slot.distinct.push(block.text.clone());
        }
        let replace = match strategy {
            MergeStrategy::LastWins => rank >= slot.rank,
            MergeStrategy::FirstWins => rank < slot.rank,
            MergeStrategy::ErrorOnConflict => rank >= slot.rank,
        };
        if replace {
            slot.content = block.text.clone();
            slot.rank = rank;
        }
    }

    if strategy == MergeStrategy::ErrorOnConflict {
        for (path, slot) in &slots {
            if slot.distinct.len() > 1 {
                return Err(AssemblyError::PathConflict {
                    path: path.clone(),
                    contributors: slot.origins.len(),
                });
            }
        }
    }

    let mut files = BTreeMap::new();
    let mut provenance = BTreeMap::new();
    for (path, slot) in slots {
        files.insert(path.clone(), slot.content);
        provenance.insert(path, slot.origins);
    }

    let unresolved_refs = ScanConfig::default().unresolved_internal_refs(&files);

    Ok(ProjectTree { files, provenance, unresolved_refs, strategy })
}
