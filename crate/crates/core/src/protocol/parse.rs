use std::collections::BTreeMap;

use crate::assembly::fence::scan_fences;
use crate::assembly::{BlockOrigin, CodeBlock};

use super::types::{AgentSpec, Section, SectionKind, StructuredMessage};

/// Heading words that mark each protocol section, matched case-insensitively
/// against markdown heading lines (`## Reply`, `# code:` ...). Teams may add
/// synonyms for models with drifting vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SectionMarkers {
    markers: BTreeMap<SectionKind, Vec<String>>,
}

impl Default for SectionMarkers {
    fn default() -> Self {
        let mut markers = BTreeMap::new();
        for kind in SectionKind::ALL {
            markers.insert(kind, vec![kind.name().to_string()]);
        }
        SectionMarkers { markers }
    }
}

impl SectionMarkers {
    pub fn add_synonym(&mut self, kind: SectionKind, word: impl Into<String>) {
        self.markers
            .entry(kind)
            .or_default()
            .push(word.into().to_lowercase());
    }

    /// Section kind named by `line` if it is a protocol heading:
    /// up to three leading spaces, 1-6 `#`, a marker word, optional colon.
    fn heading_kind(&self, line: &str) -> Option<SectionKind> {
        let trimmed = line.trim_start_matches(' ');
        if line.len() - trimmed.len() > 3 {
            return None;
        }
        let hashes = trimmed.len() - trimmed.trim_start_matches('#').len();
        if hashes == 0 || hashes > 6 {
            return None;
        }
        let word = trimmed[hashes..].trim().trim_end_matches(':').trim();
        let word = word.to_lowercase();
        for (kind, names) in &self.markers {
            if names.iter().any(|n| n == &word) {
                return Some(*kind);
            }
        }
        None
    }

    /// Parses raw model output into a structured message. Total over any
    /// finite text: malformed input degrades to warnings, never failure, and
    /// `raw_text` is always retained verbatim.
    pub fn parse(&self, raw_text: &str, author: &AgentSpec, round: u32) -> StructuredMessage {
        let mut warnings = Vec::new();
        let fences = scan_fences(raw_text);

        // Heading lines inside code fences are content, not boundaries.
        let in_fence =
            |offset: usize| fences.iter().any(|f| offset >= f.start_offset && offset < f.end_offset);

        // (kind, heading line start, content start)
        let mut headings: Vec<(SectionKind, usize, usize)> = Vec::new();
        let mut offset = 0;
        for line in raw_text.split_inclusive('\n') {
            let bare = line.strip_suffix('\n').unwrap_or(line);
            let bare = bare.strip_suffix('\r').unwrap_or(bare);
            if !in_fence(offset) {
                if let Some(kind) = self.heading_kind(bare) {
                    headings.push((kind, offset, offset + line.len()));
                }
            }
            offset += line.len();
        }

        // Spans carry the kind governing each stretch of text, for fence
        // attribution even when a kind repeats.
        let mut spans: Vec<(SectionKind, usize, usize)> = Vec::new();
        let mut sections: Vec<Section> = Vec::new();

        if raw_text.is_empty() {
            warnings.push("empty output".to_string());
        } else if headings.is_empty() {
            warnings.push("no protocol headings found".to_string());
            sections.push(Section { kind: SectionKind::Reply, text: raw_text.to_string() });
            spans.push((SectionKind::Reply, 0, raw_text.len()));
        } else {
            if !raw_text[..headings[0].1].trim().is_empty() {
                warnings.push("content before first protocol heading".to_string());
            }
            for (i, &(kind, _, content_start)) in headings.iter().enumerate() {
                let content_end = headings
                    .get(i + 1)
                    .map(|&(_, next_start, _)| next_start)
                    .unwrap_or(raw_text.len());
                let text = &raw_text[content_start..content_end];
                spans.push((kind, content_start, content_end));
                match sections.iter_mut().find(|s| s.kind == kind) {
                    Some(existing) => {
                        warnings.push(format!("duplicate heading: {}", kind.name()));
                        if !existing.text.ends_with('\n') && !existing.text.is_empty() {
                            existing.text.push('\n');
                        }
                        existing.text.push_str(text);
                    }
                    None => sections.push(Section { kind, text: text.to_string() }),
                }
            }
        }

        let mut code_blocks = Vec::with_capacity(fences.len());
        for fence in fences {
            if fence.unterminated {
                warnings.push("unterminated code fence".to_string());
            }
            let section_kind = spans
                .iter()
                .find(|&&(_, start, end)| fence.start_offset >= start && fence.start_offset < end)
                .map(|&(kind, _, _)| kind);
            code_blocks.push(CodeBlock {
                language_hint: fence.language_hint,
                text: fence.text,
                origin: BlockOrigin {
                    round,
                    agent_id: author.agent_id.clone(),
                    position_index: Some(author.position_index),
                    section_kind,
                },
                inferred_path: None,
                path_confidence: None,
                unterminated: fence.unterminated,
            });
        }

        StructuredMessage {
            run_id: String::new(),
            round,
            agent_id: author.agent_id.clone(),
            raw_text: raw_text.to_string(),
            sections,
            code_blocks,
            usage: None,
            warnings,
        }
    }
}

/// Parses one agent turn with the default heading markers. See
/// [`SectionMarkers::parse`] for the full contract.
pub fn parse_agent_output(raw_text: &str, author: &AgentSpec, round: u32) -> StructuredMessage {
    SectionMarkers::default().parse(raw_text, author, round)
}
