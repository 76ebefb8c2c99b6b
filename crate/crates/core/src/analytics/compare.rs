use serde::{Deserialize, Serialize};

use super::coverage::{ethics_coverage, EthicsLexicon};
use super::stats::{corpus_stats, CorpusStats};
use super::AnalyticsError;
use crate::assembly::fence::scan_fences;
use crate::protocol::{RunMode, Transcript};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictFlags {
    pub mas_has_code: bool,
    pub baseline_has_code: bool,
    /// False when the baseline produced zero lines, leaving the ratio
    /// undefined.
    pub line_ratio_defined: bool,
}

/// Debate-vs-baseline quantification: per-side corpus statistics, the
/// line-count ratio, and per-principle coverage deltas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub mas_stats: Vec<CorpusStats>,
    pub baseline_stats: CorpusStats,
    /// mean(MAS total_lines) / baseline total_lines, when defined.
    pub line_ratio: Option<f64>,
    /// Per principle: mean MAS hit count − baseline hit count.
    pub coverage_delta: Vec<(String, f64)>,
    pub flags: VerdictFlags,
}

fn has_code(transcript: &Transcript) -> bool {
    transcript
        .messages
        .iter()
        .any(|m| !scan_fences(&m.raw_text).is_empty())
}

/// Compares a set of debate transcripts against one baseline transcript.
pub fn compare_runs(
    mas: &[Transcript],
    baseline: &Transcript,
    lexicon: &EthicsLexicon,
) -> Result<ComparisonReport, AnalyticsError> {
    if mas.is_empty() {
        return Err(AnalyticsError::InvalidArgument(
            "at least one debate transcript is required".into(),
        ));
    }
    if baseline.mode != RunMode::Baseline {
        return Err(AnalyticsError::InvalidArgument(
            "comparison baseline must be a baseline-mode transcript".into(),
        ));
    }

    let mas_stats: Vec<CorpusStats> = mas.iter().map(corpus_stats).collect();
    let baseline_stats = corpus_stats(baseline);

    let mean_mas_lines =
        mas_stats.iter().map(|s| s.total_lines as f64).sum::<f64>() / mas.len() as f64;
    let line_ratio = (baseline_stats.total_lines > 0)
        .then(|| mean_mas_lines / baseline_stats.total_lines as f64);

    let mas_coverage: Vec<_> = mas.iter().map(|t| ethics_coverage(t, lexicon)).collect();
    let baseline_coverage = ethics_coverage(baseline, lexicon);
    let coverage_delta = lexicon
        .principles
        .iter()
        .map(|(name, _)| {
            let mean_mas = mas_coverage.iter().map(|c| c.hit_count(name) as f64).sum::<f64>()
                / mas.len() as f64;
            (name.clone(), mean_mas - baseline_coverage.hit_count(name) as f64)
        })
        .collect();

    Ok(ComparisonReport {
        flags: VerdictFlags {
            mas_has_code: mas.iter().any(has_code),
            baseline_has_code: has_code(baseline),
            line_ratio_defined: line_ratio.is_some(),
        },
        mas_stats,
        baseline_stats,
        line_ratio,
        coverage_delta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::{parse_agent_output, AgentSpec, ProjectDescription};

    fn agent() -> AgentSpec {
        AgentSpec {
            agent_id: "a1".into(),
            display_name: "A1".into(),
            role_title: "Dev".into(),
            system_prompt: "p".into(),
            position_index: 1,
        }
    }

    fn transcript_with_lines(lines: u64, mode: RunMode, label: &str) -> Transcript {
        let raw = "line\n".repeat(lines as usize);
        let a = agent();
        let mut m = parse_agent_output(&raw, &a, 1);
        m.run_id = format!("pd1:{label}");
        let mut team_agent = a;
        if mode == RunMode::Baseline {
            team_agent.system_prompt = String::new();
        }
        Transcript {
            run_id: format!("pd1:{label}"),
            run_label: label.into(),
            mode,
            project: ProjectDescription {
                pd_id: "pd1".into(),
                title: "t".into(),
                body: "b".into(),
                incident_ref: None,
            },
            team: vec![team_agent],
            round_count: 1,
            messages: vec![m],
            backend_fingerprint: "scripted:x".into(),
            created_at: "1970-01-01T00:00:00Z".into(),
            truncation: None,
        }
    }

    #[test]
    fn reference_scale_line_ratio() {
        let mas = vec![
            transcript_with_lines(1712, RunMode::Debate, "O1_1"),
            transcript_with_lines(1837, RunMode::Debate, "O1_2"),
            transcript_with_lines(1976, RunMode::Debate, "O1_3"),
        ];
        let baseline = transcript_with_lines(78, RunMode::Baseline, "AS_1");
        let report = compare_runs(&mas, &baseline, &EthicsLexicon::default()).unwrap();
        let ratio = report.line_ratio.unwrap();
        assert!((ratio - 23.6).abs() <= 0.1, "ratio {ratio}");
        assert!(!report.flags.baseline_has_code);
    }

    #[test]
    fn identical_sides_give_ratio_one_and_zero_deltas() {
        let mas = vec![transcript_with_lines(50, RunMode::Debate, "O1_1")];
        let baseline = transcript_with_lines(50, RunMode::Baseline, "AS_1");
        let report = compare_runs(&mas, &baseline, &EthicsLexicon::default()).unwrap();
        assert_eq!(report.line_ratio, Some(1.0));
        assert!(report.coverage_delta.iter().all(|(_, delta)| *delta == 0.0));
    }

    #[test]
    fn zero_line_baseline_leaves_ratio_undefined() {
        let mas = vec![transcript_with_lines(10, RunMode::Debate, "O1_1")];
        let baseline = transcript_with_lines(0, RunMode::Baseline, "AS_1");
        let report = compare_runs(&mas, &baseline, &EthicsLexicon::default()).unwrap();
        assert_eq!(report.line_ratio, None);
        assert!(!report.flags.line_ratio_defined);
    }

    #[test]
    fn code_flag_reflects_fences() {
        let mut mas = transcript_with_lines(2, RunMode::Debate, "O1_1");
        let a = agent();
        let mut coded = parse_agent_output("```python\nx = 1\n```\n", &a, 1);
        coded.run_id = mas.run_id.clone();
        mas.messages = vec![coded];
        let baseline = transcript_with_lines(5, RunMode::Baseline, "AS_1");
        let report =
            compare_runs(std::slice::from_ref(&mas), &baseline, &EthicsLexicon::default()).unwrap();
        assert!(report.flags.mas_has_code);
        assert!(!report.flags.baseline_has_code);
    }

    #[test]
    fn wrong_baseline_mode_is_rejected() {
        let mas = vec![transcript_with_lines(5, RunMode::Debate, "O1_1")];
        let fake_baseline = transcript_with_lines(5, RunMode::Debate, "O1_2");
        assert!(matches!(
            compare_runs(&mas, &fake_baseline, &EthicsLexicon::default()),
            Err(AnalyticsError::InvalidArgument(_))
        ));
    }
}
