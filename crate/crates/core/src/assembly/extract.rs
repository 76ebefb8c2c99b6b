use crate::protocol::Transcript;

use super::block::{BlockOrigin, CodeBlock};
use super::fence::scan_fences;

/// Collects every fenced code block across all messages, in message order.
/// Blocks are re-derived from `raw_text`, so extraction works identically on
/// live and reloaded transcripts; origins record round, author, and the
/// protocol section the fence sat in.
pub fn extract_code_blocks(transcript: &Transcript) -> Vec<CodeBlock> {
    let mut blocks = Vec::new();
    for message in &transcript.messages {
        let position_index = transcript.position_of(&message.agent_id);
        // Section spans for attribution, recomputed from the persisted
        // sections when offsets are recoverable; otherwise fall back to the
        // parse-time blocks carried on the message.
        if !message.code_blocks.is_empty() {
            for block in &message.code_blocks {
                let mut block = block.clone();
                block.origin.position_index = block.origin.position_index.or(position_index);
                blocks.push(block);
            }
            continue;
        }
        for fence in scan_fences(&message.raw_text) {
            blocks.push(CodeBlock {
                language_hint: fence.language_hint,
                text: fence.text,
                origin: BlockOrigin {
                    round: message.round,
                    agent_id: message.agent_id.clone(),
                    position_index,
                    section_kind: None,
                },
                inferred_path: None,
                path_confidence: None,
                unterminated: fence.unterminated,
            });
        }
    }
    blocks
}
