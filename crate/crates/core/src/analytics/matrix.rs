use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::segment::Ecu;
use super::AnalyticsError;

/// Binary ECU × term presence matrix over the retained vocabulary. Columns
/// are ordered by descending corpus frequency, then lexicographically, so
/// construction is deterministic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermMatrix {
    pub terms: Vec<String>,
    /// `presence[ecu][term]`, rows aligned with the input ECU order.
    pub presence: Vec<Vec<bool>>,
    /// Total corpus occurrences per term, aligned with `terms`.
    pub term_frequencies: Vec<u32>,
}

impl TermMatrix {
    pub fn ecu_count(&self) -> usize {
        self.presence.len()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Submatrix over the given rows (in the given order), keeping every
    /// column. Used by the recursive clustering to bisect a single class.
    pub fn restrict(&self, rows: &[usize]) -> TermMatrix {
        TermMatrix {
            terms: self.terms.clone(),
            presence: rows.iter().map(|&r| self.presence[r].clone()).collect(),
            term_frequencies: self.term_frequencies.clone(),
        }
    }

    /// Number of rows in `rows` where `term` is present.
    pub(crate) fn present_in(&self, rows: &[usize], term: usize) -> u64 {
        rows.iter().filter(|&&r| self.presence[r][term]).count() as u64
    }
}

/// Builds the presence matrix over terms with corpus frequency ≥ `min_freq`.
/// Stopwords were already removed at segmentation.
pub fn build_term_matrix(ecus: &[Ecu], min_freq: u32) -> Result<TermMatrix, AnalyticsError> {
    if ecus.is_empty() {
        return Err(AnalyticsError::EmptyCorpus("no ECUs".into()));
    }
    let min_freq = min_freq.max(1);

    let mut frequencies: BTreeMap<&str, u32> = BTreeMap::new();
    for ecu in ecus {
        for token in &ecu.tokens {
            *frequencies.entry(token.as_str()).or_insert(0) += 1;
        }
    }

    let mut retained: Vec<(&str, u32)> = frequencies
        .into_iter()
        .filter(|&(_, freq)| freq >= min_freq)
        .collect();
    if retained.is_empty() {
        return Err(AnalyticsError::EmptyCorpus(format!(
            "no term reaches min_freq {min_freq}"
        )));
    }
    retained.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let terms: Vec<String> = retained.iter().map(|(t, _)| t.to_string()).collect();
    let term_frequencies: Vec<u32> = retained.iter().map(|&(_, f)| f).collect();
    let index: BTreeMap<&str, usize> =
        terms.iter().enumerate().map(|(i, t)| (t.as_str(), i)).collect();

    let presence = ecus
        .iter()
        .map(|ecu| {
            let mut row = vec![false; terms.len()];
            for token in &ecu.tokens {
                if let Some(&column) = index.get(token.as_str()) {
                    row[column] = true;
                }
            }
            row
        })
        .collect();

    Ok(TermMatrix { terms, presence, term_frequencies })
}
