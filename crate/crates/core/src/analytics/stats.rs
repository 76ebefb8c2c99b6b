use serde::{Deserialize, Serialize};

use crate::assembly::fence::scan_fences;
use crate::protocol::Transcript;

/// Line and word accounting over a transcript's raw text. Code lines are the
/// bodies of fenced blocks; fence delimiter lines count as prose. Blank lines
/// count — a line is anything newline-delimited.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub total_lines: u64,
    pub prose_lines: u64,
    pub code_lines: u64,
    pub word_count: u64,
}

impl CorpusStats {
    pub fn add(&mut self, other: CorpusStats) {
        self.total_lines += other.total_lines;
        self.prose_lines += other.prose_lines;
        self.code_lines += other.code_lines;
        self.word_count += other.word_count;
    }
}

fn stats_of_text(text: &str) -> CorpusStats {
    let total_lines = text.lines().count() as u64;
    let word_count = text.split_whitespace().count() as u64;
    let code_lines: u64 = scan_fences(text)
        .iter()
        .map(|fence| fence.text.lines().count() as u64)
        .sum();
    CorpusStats {
        total_lines,
        prose_lines: total_lines - code_lines,
        code_lines,
        word_count,
    }
}

/// Sums line/word statistics over every message of the transcript.
pub fn corpus_stats(transcript: &Transcript) -> CorpusStats {
    let mut stats = CorpusStats::default();
    for message in &transcript.messages {
        stats.add(stats_of_text(&message.raw_text));
    }
    stats
}
