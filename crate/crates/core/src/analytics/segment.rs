use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::protocol::Transcript;

/// Small built-in English stopword list; replaceable by file. Stopwords
/// apply to prose tokens and identifier parts, never to whole underscore
/// identifiers.
const DEFAULT_STOPWORDS: &[&str] = &[
    "a", "about", "after", "again", "all", "an", "and", "any", "are", "as", "at", "be", "been",
    "being", "both", "but", "by", "can", "could", "did", "do", "does", "down", "each", "else",
    "few", "for", "from", "further", "had", "has", "have", "he", "her", "here", "him", "his",
    "how", "i", "if", "in", "into", "is", "it", "its", "may", "might", "more", "most", "must",
    "no", "not", "now", "of", "on", "or", "other", "our", "out", "over", "own", "same", "shall",
    "she", "should", "so", "some", "such", "than", "that", "the", "their", "them", "then",
    "there", "these", "they", "this", "those", "to", "too", "under", "up", "very", "was", "we",
    "were", "what", "when", "where", "which", "while", "who", "will", "with", "would", "you",
    "your",
];

/// Tokenization knobs for corpus segmentation.
#[derive(Debug, Clone)]
pub struct SegmentOptions {
    pub stopwords: BTreeSet<String>,
    pub reduce_suffixes: bool,
}

impl Default for SegmentOptions {
    fn default() -> Self {
        SegmentOptions {
            stopwords: DEFAULT_STOPWORDS.iter().map(|s| s.to_string()).collect(),
            reduce_suffixes: true,
        }
    }
}

impl SegmentOptions {
    pub fn without_stopwords() -> Self {
        SegmentOptions { stopwords: BTreeSet::new(), ..SegmentOptions::default() }
    }

    /// Loads one stopword per line (`#` comments skipped).
    pub fn with_stopword_file(path: &Path) -> Result<Self, AnalyticsError> {
        let body = std::fs::read_to_string(path)
            .map_err(|e| AnalyticsError::InvalidArgument(format!("{}: {e}", path.display())))?;
        let stopwords = body
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.to_lowercase())
            .collect();
        Ok(SegmentOptions { stopwords, ..SegmentOptions::default() })
    }
}

/// Where an ECU's tokens came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EcuSpan {
    /// Index of the message contributing the ECU's first token (0 for plain
    /// text input).
    pub message_index: usize,
    /// Offsets into the retained token stream, `token_start..token_end`.
    pub token_start: usize,
    pub token_end: usize,
}

/// Elementary context unit: a fixed-size chunk of the reduced token stream,
/// the clustering unit of the descending hierarchical classification.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ecu {
    pub ecu_id: usize,
    pub tokens: Vec<String>,
    pub source_span: EcuSpan,
}

/// Lightweight suffix stripping: plural and common verbal endings, one
/// suffix at most, never below three characters. Deliberately not a
/// full stemmer; short words like "bias" pass through untouched.
fn reduce(word: &str) -> String {
    let n = word.len();
    if n >= 6 && word.ends_with("ing") && n - 3 >= 3 {
        return word[..n - 3].to_string();
    }
    if n >= 5 && word.ends_with("ed") && n - 2 >= 3 {
        return word[..n - 2].to_string();
    }
    if n >= 5 && word.ends_with("sses") {
        return word[..n - 2].to_string();
    }
    if n >= 5 && word.ends_with("ies") {
        return format!("{}y", &word[..n - 3]);
    }
    if n >= 5 && word.ends_with("es") {
        let stem_last = word.as_bytes()[n - 3];
        if matches!(stem_last, b's' | b'x' | b'z' | b'h') {
            return word[..n - 2].to_string();
        }
    }
    if n >= 5
        && word.ends_with('s')
        && !word.ends_with("ss")
        && !word.ends_with("us")
        && !word.ends_with("is")
    {
        return word[..n - 1].to_string();
    }
    word.to_string()
}

fn has_alpha(token: &str) -> bool {
    token.chars().any(|c| c.is_alphabetic())
}

/// Lowercases, strips punctuation, applies stopword removal and suffix
/// reduction. Underscore identifiers are kept whole and additionally emitted
/// as their split parts, so `bias_score` yields `bias_score, bias, score`.
fn retained_tokens(text: &str, options: &SegmentOptions) -> Vec<String> {
    let mut retained = Vec::new();
    let lowered = text.to_lowercase();
    for raw in lowered.split(|c: char| !c.is_alphanumeric() && c != '_') {
        let raw = raw.trim_matches('_');
        if raw.is_empty() || !has_alpha(raw) {
            continue;
        }
        if raw.contains('_') {
            retained.push(raw.to_string());
            for part in raw.split('_') {
                if !has_alpha(part) || options.stopwords.contains(part) {
                    continue;
                }
                retained.push(if options.reduce_suffixes { reduce(part) } else { part.to_string() });
            }
        } else {
            if options.stopwords.contains(raw) {
                continue;
            }
            retained.push(if options.reduce_suffixes { reduce(raw) } else { raw.to_string() });
        }
    }
    retained
}

fn chunk(tagged: Vec<(usize, String)>, segment_size: usize) -> Vec<Ecu> {
    let segment_size = segment_size.max(1);
    let mut ecus = Vec::new();
    let mut offset = 0;
    for (ecu_id, window) in tagged.chunks(segment_size).enumerate() {
        let tokens: Vec<String> = window.iter().map(|(_, t)| t.clone()).collect();
        ecus.push(Ecu {
            ecu_id,
            tokens,
            source_span: EcuSpan {
                message_index: window[0].0,
                token_start: offset,
                token_end: offset + window.len(),
            },
        });
        offset += window.len();
    }
    ecus
}

/// Segments plain text into ECUs of at most `segment_size` retained tokens.
/// No token is lost between consecutive ECUs: concatenating them reproduces
/// the retained stream exactly.
pub fn segment_corpus(text: &str, segment_size: usize) -> Vec<Ecu> {
    segment_corpus_with(text, segment_size, &SegmentOptions::default())
}

pub fn segment_corpus_with(text: &str, segment_size: usize, options: &SegmentOptions) -> Vec<Ecu> {
    let tagged: Vec<(usize, String)> =
        retained_tokens(text, options).into_iter().map(|t| (0, t)).collect();
    chunk(tagged, segment_size)
}

/// Segments the appended raw output of one or more transcripts — the usual
/// clustering corpus is all replications of one project description appended.
/// Message indices count across transcripts in order.
pub fn segment_transcripts(
    transcripts: &[&Transcript],
    segment_size: usize,
    options: &SegmentOptions,
) -> Vec<Ecu> {
    let mut tagged = Vec::new();
    let mut message_counter = 0;
    for transcript in transcripts {
        for message in &transcript.messages {
            for token in retained_tokens(&message.raw_text, options) {
                tagged.push((message_counter, token));
            }
            message_counter += 1;
        }
    }
    chunk(tagged, segment_size)
}
