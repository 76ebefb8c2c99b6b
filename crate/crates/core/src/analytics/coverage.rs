use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::protocol::Transcript;

const MAX_EXAMPLE_LOCATIONS: usize = 20;

/// Principle-name → trigger-phrase mapping. The shipped seed covers the
/// eleven Ryan & Stahl principles plus an EU-AI-Act entry; the phrase lists
/// are deliberately small and replaceable by file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EthicsLexicon {
    /// (principle, phrases); phrases are stored lowercased.
    pub principles: Vec<(String, Vec<String>)>,
}

impl Default for EthicsLexicon {
    fn default() -> Self {
        let seed: &[(&str, &[&str])] = &[
            (
                "Transparency",
                &[
                    "transparency",
                    "accountability",
                    "transparency and accountability",
                    "documentation of ai processes",
                    "transparency in ai processes",
                ],
            ),
            (
                "Justice and Fairness",
                &[
                    "justice and fairness",
                    "fairness",
                    "fairness evaluation",
                    "bias",
                    "bias detection",
                    "bias detection and mitigation",
                    "bias elimination strategies",
                    "evaluate bias",
                    "bias score",
                    "bias type",
                ],
            ),
            (
                "Non-maleficence",
                &["non-maleficence", "harmful", "psychological harm", "harm to social systems"],
            ),
            ("Responsibility", &["responsibility", "ai responsibility"]),
            (
                "Privacy",
                &[
                    "privacy",
                    "user consent",
                    "gdpr",
                    "gdpr compliance",
                    "user consent and gdpr compliance",
                    "data security",
                ],
            ),
            ("Beneficence", &["beneficence"]),
            ("Freedom and Autonomy", &["freedom and autonomy"]),
            ("Trust", &["trust", "trustworthiness"]),
            ("Sustainability", &["sustainability"]),
            ("Dignity", &["dignity"]),
            ("Solidarity", &["solidarity"]),
            (
                "EU AI Act Compliance",
                &["eu ai act", "eu ai act compliance", "compliance with the eu ai act"],
            ),
        ];
        EthicsLexicon {
            principles: seed
                .iter()
                .map(|(name, phrases)| {
                    (name.to_string(), phrases.iter().map(|p| p.to_string()).collect())
                })
                .collect(),
        }
    }
}

impl EthicsLexicon {
    pub fn empty() -> Self {
        EthicsLexicon { principles: Vec::new() }
    }

    pub fn add_phrase(&mut self, principle: &str, phrase: &str) {
        let phrase = phrase.to_lowercase();
        match self.principles.iter_mut().find(|(name, _)| name == principle) {
            Some((_, phrases)) => {
                if !phrases.contains(&phrase) {
                    phrases.push(phrase);
                }
            }
            None => self.principles.push((principle.to_string(), vec![phrase])),
        }
    }

    /// Loads `principle: phrase` lines (one per line, `#` comments) on top of
    /// an empty lexicon.
    pub fn load(path: &Path) -> Result<Self, AnalyticsError> {
        let body = std::fs::read_to_string(path)
            .map_err(|e| AnalyticsError::InvalidArgument(format!("{}: {e}", path.display())))?;
        let mut lexicon = EthicsLexicon::empty();
        for (number, line) in body.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((principle, phrase)) = line.split_once(':') else {
                return Err(AnalyticsError::InvalidArgument(format!(
                    "{} line {}: expected 'principle: phrase'",
                    path.display(),
                    number + 1
                )));
            };
            let (principle, phrase) = (principle.trim(), phrase.trim());
            if principle.is_empty() || phrase.is_empty() {
                return Err(AnalyticsError::InvalidArgument(format!(
                    "{} line {}: empty principle or phrase",
                    path.display(),
                    number + 1
                )));
            }
            lexicon.add_phrase(principle, phrase);
        }
        Ok(lexicon)
    }
}

/// Hits for one principle. Principles absent from the text still appear,
/// with a zero count.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrincipleCoverage {
    pub principle: String,
    pub hit_count: u64,
    pub matched_phrases: BTreeSet<String>,
    /// (message index, 1-based line number) of the first matches.
    pub example_locations: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub per_principle: Vec<PrincipleCoverage>,
    pub total_hits: u64,
}

impl CoverageReport {
    pub fn principle(&self, name: &str) -> Option<&PrincipleCoverage> {
        self.per_principle.iter().find(|p| p.principle == name)
    }

    pub fn hit_count(&self, name: &str) -> u64 {
        self.principle(name).map_or(0, |p| p.hit_count)
    }
}

/// Lowercases and splits into word tokens. Underscores and hyphens become
/// separators so the identifier `evaluate_bias` matches the phrase
/// "evaluate bias" and "non-maleficence" matches its own hyphenated form.
fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

fn count_occurrences(haystack: &[String], needle: &[String]) -> u64 {
    if needle.is_empty() || haystack.len() < needle.len() {
        return 0;
    }
    let mut count = 0;
    for start in 0..=(haystack.len() - needle.len()) {
        if haystack[start..start + needle.len()] == *needle {
            count += 1;
        }
    }
    count
}

/// Case-insensitive whole-phrase matching over every message's raw text,
/// prose and code alike. Matching is per line; every principle of the
/// lexicon is reported even when it never matches.
pub fn ethics_coverage(transcript: &Transcript, lexicon: &EthicsLexicon) -> CoverageReport {
    let phrase_tokens: Vec<(usize, Vec<Vec<String>>)> = lexicon
        .principles
        .iter()
        .enumerate()
        .map(|(index, (_, phrases))| {
            (index, phrases.iter().map(|p| tokenize(p)).collect())
        })
        .collect();

    let mut per_principle: Vec<PrincipleCoverage> = lexicon
        .principles
        .iter()
        .map(|(name, _)| PrincipleCoverage {
            principle: name.clone(),
            hit_count: 0,
            matched_phrases: BTreeSet::new(),
            example_locations: Vec::new(),
        })
        .collect();

    for (message_index, message) in transcript.messages.iter().enumerate() {
        for (line_index, line) in message.raw_text.lines().enumerate() {
            let tokens = tokenize(line);
            if tokens.is_empty() {
                continue;
            }
            for (principle_index, phrases) in &phrase_tokens {
                for (phrase_index, needle) in phrases.iter().enumerate() {
                    let hits = count_occurrences(&tokens, needle);
                    if hits > 0 {
                        let entry = &mut per_principle[*principle_index];
                        entry.hit_count += hits;
                        entry.matched_phrases.insert(
                            lexicon.principles[*principle_index].1[phrase_index].clone(),
                        );
                        if entry.example_locations.len() < MAX_EXAMPLE_LOCATIONS {
                            entry.example_locations.push((message_index, line_index + 1));
                        }
                    }
                }
            }
        }
    }

    let total_hits = per_principle.iter().map(|p| p.hit_count).sum();
    CoverageReport { per_principle, total_hits }
}
