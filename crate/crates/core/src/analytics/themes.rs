use serde::{Deserialize, Serialize};

use super::AnalyticsError;
use crate::assembly::fence::scan_fences;
use crate::backend::{ChatBackend, ChatParams, ChatRequest, ChatTurn, TurnRole};
use crate::protocol::Transcript;

/// One theme with its qualitative codes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Theme {
    pub name: String,
    pub codes: Vec<String>,
}

/// An LLM-produced thematic analysis: unique theme names, each carrying at
/// least one code, labeled with the runs it covers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThematicAnalysis {
    pub themes: Vec<Theme>,
    pub source_run_labels: Vec<String>,
}

#[derive(Debug, Deserialize, Serialize)]
struct ThemesDoc {
    themes: Vec<Theme>,
}

/// Parses the structured-output contract: the model must emit a fenced block
/// whose body is a JSON object `{"themes": [{"name", "codes"}]}`. Only
/// fenced blocks are considered; the last parseable one wins so models can
/// reason in prose before emitting it.
fn parse_structured_themes(response: &str) -> Result<Vec<Theme>, AnalyticsError> {
    let fences = scan_fences(response);
    let mut parsed = None;
    for fence in &fences {
        if let Ok(doc) = serde_json::from_str::<ThemesDoc>(fence.text.trim()) {
            parsed = Some(doc.themes);
        }
    }
    let Some(themes) = parsed else {
        return Err(AnalyticsError::UnparseableAnalysis(
            "no fenced JSON block with a 'themes' list found".into(),
        ));
    };
    if themes.is_empty() {
        return Err(AnalyticsError::UnparseableAnalysis("theme list is empty".into()));
    }
    let mut seen = std::collections::BTreeSet::new();
    for theme in &themes {
        if theme.name.trim().is_empty() {
            return Err(AnalyticsError::UnparseableAnalysis("theme with empty name".into()));
        }
        if !seen.insert(theme.name.clone()) {
            return Err(AnalyticsError::UnparseableAnalysis(format!(
                "duplicate theme name '{}'",
                theme.name
            )));
        }
        if theme.codes.is_empty() || theme.codes.iter().any(|c| c.trim().is_empty()) {
            return Err(AnalyticsError::UnparseableAnalysis(format!(
                "theme '{}' must carry at least one non-empty code",
                theme.name
            )));
        }
    }
    Ok(themes)
}

fn transcript_body(transcript: &Transcript) -> String {
    transcript
        .messages
        .iter()
        .map(|m| m.raw_text.as_str())
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Sends the analyst instruction plus header prompt plus the transcript's
/// raw text, and parses the structured theme/code response.
pub fn run_thematic_analysis(
    transcript: &Transcript,
    backend: &mut dyn ChatBackend,
    params: &ChatParams,
    analyst_instruction: &str,
    header_prompt: &str,
) -> Result<ThematicAnalysis, AnalyticsError> {
    if analyst_instruction.trim().is_empty() || header_prompt.trim().is_empty() {
        return Err(AnalyticsError::InvalidArgument(
            "analyst instruction and header prompt must be non-empty".into(),
        ));
    }
    let request = ChatRequest {
        system: analyst_instruction.to_string(),
        turns: vec![ChatTurn {
            speaker_tag: "analysis_input".to_string(),
            role: TurnRole::User,
            content: format!("{header_prompt}\n\n{}", transcript_body(transcript)),
        }],
        params: params.clone(),
    };
    let response = backend.complete(&request)?;
    let themes = parse_structured_themes(&response.text)?;
    Ok(ThematicAnalysis {
        themes,
        source_run_labels: vec![transcript.run_label.clone()],
    })
}

/// Merges partial analyses into one. A single partial is returned unchanged
/// with no backend call; otherwise the backend summarizes, and the result
/// carries the union of the source labels.
pub fn merge_thematic_analyses(
    partials: &[ThematicAnalysis],
    backend: &mut dyn ChatBackend,
    params: &ChatParams,
    analyst_instruction: &str,
    merge_prompt: &str,
) -> Result<ThematicAnalysis, AnalyticsError> {
    if partials.is_empty() {
        return Err(AnalyticsError::InvalidArgument(
            "at least one partial analysis is required".into(),
        ));
    }
    if partials.len() == 1 {
        return Ok(partials[0].clone());
    }

    let mut content = format!("{merge_prompt}\n");
    for partial in partials {
        let doc = ThemesDoc { themes: partial.themes.clone() };
        content.push_str(&format!(
            "\nAnalysis of {}:\n```json\n{}\n```\n",
            partial.source_run_labels.join(", "),
            serde_json::to_string_pretty(&doc).expect("themes serialize"),
        ));
    }
    let request = ChatRequest {
        system: analyst_instruction.to_string(),
        turns: vec![ChatTurn {
            speaker_tag: "merge_input".to_string(),
            role: TurnRole::User,
            content,
        }],
        params: params.clone(),
    };
    let response = backend.complete(&request)?;
    let themes = parse_structured_themes(&response.text)?;

    let mut source_run_labels = Vec::new();
    for partial in partials {
        for label in &partial.source_run_labels {
            if !source_run_labels.contains(label) {
                source_run_labels.push(label.clone());
            }
        }
    }
    Ok(ThematicAnalysis { themes, source_run_labels })
}

/// Theme | Codes table rendering.
pub fn render_thematic_table(analysis: &ThematicAnalysis) -> String {
    let mut out = String::from("Theme | Codes\n----- | -----\n");
    for theme in &analysis.themes {
        out.push_str(&format!("{} | {}\n", theme.name, theme.codes.join(", ")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{BackendError, ChatResponse, FinishReason, ScriptedBackend, TokenUsage};
    use crate::protocol::{parse_agent_output, AgentSpec, ProjectDescription, RunMode};

    fn transcript(label: &str) -> Transcript {
        let agent = AgentSpec {
            agent_id: "a1".into(),
            display_name: "A1".into(),
            role_title: "Dev".into(),
            system_prompt: "p".into(),
            position_index: 1,
        };
        let mut m = parse_agent_output("## Reply\ndiscussion text\n", &agent, 1);
        m.run_id = format!("pd1:{label}");
        Transcript {
            run_id: format!("pd1:{label}"),
            run_label: label.into(),
            mode: RunMode::Debate,
            project: ProjectDescription {
                pd_id: "pd1".into(),
                title: "t".into(),
                body: "b".into(),
                incident_ref: None,
            },
            team: vec![agent],
            round_count: 1,
            messages: vec![m],
            backend_fingerprint: "scripted:x".into(),
            created_at: "1970-01-01T00:00:00Z".into(),
            truncation: None,
        }
    }

    fn two_theme_response() -> String {
        r#"Here is the analysis.

```json
{"themes": [
  {"name": "Ethical and Regulatory AI Development",
   "codes": ["Compliance with the EU AI Act", "Bias elimination strategies"]},
  {"name": "Transparency in AI Processes",
   "codes": ["Documentation of AI processes"]}
]}
```
"#
        .to_string()
    }

    #[test]
    fn well_formed_response_parses_to_themes() {
        let mut backend = ScriptedBackend::new([two_theme_response()]);
        let analysis = run_thematic_analysis(
            &transcript("O1_1"),
            &mut backend,
            &ChatParams::default(),
            "You are a qualitative analyst.",
            "Perform a thematic analysis.",
        )
        .unwrap();
        assert_eq!(analysis.themes.len(), 2);
        assert_eq!(analysis.source_run_labels, vec!["O1_1"]);
    }

    #[test]
    fn free_prose_is_unparseable() {
        let mut backend = ScriptedBackend::new(["Here are some loose thoughts with no structure."]);
        let err = run_thematic_analysis(
            &transcript("O1_1"),
            &mut backend,
            &ChatParams::default(),
            "analyst",
            "header",
        )
        .unwrap_err();
        assert!(matches!(err, AnalyticsError::UnparseableAnalysis(_)));
    }

    #[test]
    fn empty_prompts_are_rejected() {
        let mut backend = ScriptedBackend::new([two_theme_response()]);
        let err = run_thematic_analysis(
            &transcript("O1_1"),
            &mut backend,
            &ChatParams::default(),
            " ",
            "header",
        )
        .unwrap_err();
        assert!(matches!(err, AnalyticsError::InvalidArgument(_)));
    }

    #[test]
    fn merging_single_partial_is_identity_with_no_call() {
        /// Fails loudly if any request arrives.
        struct NoCallBackend;
        impl ChatBackend for NoCallBackend {
            fn complete(&mut self, _: &ChatRequest) -> Result<ChatResponse, BackendError> {
                panic!("merge of a single partial must not call the backend");
            }
        }
        let partial = ThematicAnalysis {
            themes: vec![Theme { name: "T".into(), codes: vec!["c".into()] }],
            source_run_labels: vec!["B2_1".into()],
        };
        let merged = merge_thematic_analyses(
            std::slice::from_ref(&partial),
            &mut NoCallBackend,
            &ChatParams::default(),
            "analyst",
            "merge",
        )
        .unwrap();
        assert_eq!(merged, partial);
        let _ = ChatResponse {
            text: String::new(),
            usage: TokenUsage::default(),
            finish_reason: FinishReason::Stop,
        };
    }

    #[test]
    fn merging_three_partials_unions_labels() {
        let partials: Vec<ThematicAnalysis> = ["B2_1", "B2_2", "B2_3"]
            .iter()
            .map(|label| ThematicAnalysis {
                themes: vec![Theme { name: format!("T {label}"), codes: vec!["c".into()] }],
                source_run_labels: vec![label.to_string()],
            })
            .collect();
        let mut backend = ScriptedBackend::new([two_theme_response()]);
        let merged = merge_thematic_analyses(
            &partials,
            &mut backend,
            &ChatParams::default(),
            "analyst",
            "merge these",
        )
        .unwrap();
        assert_eq!(merged.source_run_labels, vec!["B2_1", "B2_2", "B2_3"]);
        assert_eq!(merged.themes.len(), 2);
    }

    #[test]
    fn empty_partial_list_is_a_precondition_error() {
        let mut backend = ScriptedBackend::new(Vec::<String>::new());
        let err = merge_thematic_analyses(
            &[],
            &mut backend,
            &ChatParams::default(),
            "analyst",
            "merge",
        )
        .unwrap_err();
        assert!(matches!(err, AnalyticsError::InvalidArgument(_)));
    }

    #[test]
    fn duplicate_theme_names_are_rejected() {
        let response = "```json\n{\"themes\": [{\"name\": \"X\", \"codes\": [\"a\"]}, {\"name\": \"X\", \"codes\": [\"b\"]}]}\n```";
        assert!(matches!(
            parse_structured_themes(response),
            Err(AnalyticsError::UnparseableAnalysis(_))
        ));
    }

    #[test]
    fn table_rendering_matches_theme_codes_layout() {
        let analysis = ThematicAnalysis {
            themes: vec![Theme {
                name: "Security and Collaboration".into(),
                codes: vec!["User Authentication".into(), "Role Management".into()],
            }],
            source_run_labels: vec!["TA".into()],
        };
        let table = render_thematic_table(&analysis);
        assert!(table.starts_with("Theme | Codes\n"));
        assert!(table.contains("Security and Collaboration | User Authentication, Role Management"));
    }
}
