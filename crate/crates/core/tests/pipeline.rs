//! End-to-end flow over a scripted backend: replicated debates, persistence,
//! code assembly, dependency handling, execution check, clustering, thematic
//! analysis, and the baseline comparison — everything the evaluation needs,
//! fully offline.

use std::time::Duration;

use ethosforge_core::{
    assemble_project, build_term_matrix, compare_runs, dhc_cluster, diagnose_missing_dependencies,
    ethics_coverage, exec_check, extract_code_blocks, infer_all_paths, load_transcript,
    merge_thematic_analyses, normalize_dependencies, render_cluster_text, run_baseline,
    run_replications, run_thematic_analysis, scan_dependencies, segment_transcripts,
    validate_transcript, write_project, AgentSpec, ChatParams, DependencyClass, EthicsLexicon,
    ExecStatus, MergeStrategy, NormalizationTable, ProjectDescription, RunLabel, RunSession,
    SandboxConfig, ScriptedBackend, SegmentOptions, TeamConfig,
};

fn pd() -> ProjectDescription {
    ProjectDescription {
        pd_id: "pd2".into(),
        title: "Deepfake content authentication".into(),
        body: "Create a deepfake content authentication system that uses AI to verify the \
               authenticity of video, image and audio content."
            .into(),
        incident_ref: None,
    }
}

fn team() -> TeamConfig {
    let mut config = TeamConfig::new(vec![
        AgentSpec {
            agent_id: "dev1".into(),
            display_name: "Developer One".into(),
            role_title: "Senior Python Developer".into(),
            system_prompt: "Senior Python developer.".into(),
            position_index: 1,
        },
        AgentSpec {
            agent_id: "dev2".into(),
            display_name: "Developer Two".into(),
            role_title: "Senior Python Developer".into(),
            system_prompt: "Second senior Python developer.".into(),
            position_index: 2,
        },
        AgentSpec {
            agent_id: "ethicist".into(),
            display_name: "Ethicist".into(),
            role_title: "AI Ethicist".into(),
            system_prompt: "AI ethicist.".into(),
            position_index: 3,
        },
    ]);
    config.round_count = 2;
    config.replication_count = 3;
    config
}

/// Six turns of debate: ethics discussion, code that spreads across rounds,
/// a deprecated package, and a phantom module import.
fn debate_script() -> Vec<String> {
    vec![
        "## Reply\nWe should discuss bias detection and transparency early.\n\
         ## Reflection\nFairness evaluation requires user consent handling and GDPR compliance.\n\
         ## Code\n```python\n# file: main.py\nimport sklearn\nfrom authenticators import VideoAuthenticator\n\nprint('v1')\n```\n\
         ## Critique\nNeeds error handling.\n"
            .to_string(),
        "## Reply\nAdding the authenticator module for accountability.\n\
         ## Code\n```python\n# file: authenticators.py\nclass VideoAuthenticator:\n    def check(self, media):\n        return evaluate_bias(media)\n\n\ndef evaluate_bias(media):\n    return 0.0\n```\n\
         ## Critique\nDocument the bias_score scale.\n"
            .to_string(),
        "## Reply\nEthics review: the EU AI Act requires transparency and accountability.\n\
         ## Reflection\nPrivacy and data security must be auditable.\n\
         ## Critique\nAdd fairness evaluation tests before release.\n"
            .to_string(),
        "## Reply\nRefining main per critique.\n\
         ## Code\n```python\n# file: main.py\nimport sklearn\nfrom authenticators import VideoAuthenticator\nfrom your_module import AudioAuthenticator\n\nprint('v2 refined')\n```\n\
         ## Critique\nStill missing the audio path.\n"
            .to_string(),
        "## Reply\nTransparency report generation added.\n\
         ## Code\n```python\n# file: report.py\ndef bias_score(results):\n    return sum(results) / max(len(results), 1)\n```\n\
         ## Critique\nLooks good.\n"
            .to_string(),
        "## Reply\nFinal ethics pass: user consent flows are documented.\n\
         ## Reflection\nResponsibility assignments are clear.\n\
         ## Critique\nShip it.\n"
            .to_string(),
    ]
}

fn analysis_response() -> String {
    r#"Thematic summary below.

```json
{"themes": [
  {"name": "Ethical Compliance and AI Responsibility",
   "codes": ["AI Ethics and Bias Detection", "Transparency and Accountability", "User Consent and GDPR Compliance"]},
  {"name": "System Architecture and Design",
   "codes": ["Modularity and Scalability", "AI Integration and Media Processing"]}
]}
```
"#
    .to_string()
}

#[test]
fn full_offline_pipeline() {
    let out_root = tempfile::tempdir().unwrap();

    // Replicated debates with round-boundary persistence.
    let result = run_replications(&pd(), &team(), 2, |replication| {
        let mut session = RunSession::scripted(ScriptedBackend::new(debate_script()));
        let dir = out_root.path().join(format!("O2_{replication}"));
        std::fs::create_dir_all(&dir).unwrap();
        session.persist_root = Some(dir);
        Ok(session)
    })
    .unwrap();
    assert_eq!(result.transcripts.len(), 3);
    assert!(result.failures.is_empty());
    let labels: Vec<&str> = result.transcripts.iter().map(|t| t.run_label.as_str()).collect();
    assert_eq!(labels, ["O2_1", "O2_2", "O2_3"]);

    // Everything validates and the persisted copies round-trip.
    for transcript in &result.transcripts {
        let report = validate_transcript(transcript);
        assert!(report.ok, "violations: {:?}", report.violations);
        let path = out_root
            .path()
            .join(&transcript.run_label)
            .join(format!("{}.transcript.json", transcript.run_label));
        assert_eq!(&load_transcript(&path).unwrap(), transcript);
    }

    // Assemble the first replication: last-wins merge across rounds.
    let transcript = &result.transcripts[0];
    let blocks = infer_all_paths(&extract_code_blocks(transcript));
    let tree = assemble_project(&blocks, MergeStrategy::LastWins).unwrap();
    assert!(tree.files["main.py"].contains("v2 refined"), "round 2 must win");
    assert!(tree.files.contains_key("authenticators.py"));
    assert!(tree.files.contains_key("report.py"));
    assert_eq!(tree.unresolved_refs, vec!["your_module"]);

    let manifest = normalize_dependencies(&scan_dependencies(&tree), &NormalizationTable::default());
    let external: Vec<&str> = manifest.external.iter().map(|d| d.name.as_str()).collect();
    assert_eq!(external, ["scikit-learn"]);
    assert_eq!(manifest.internal_unresolved, vec!["your_module"]);

    let project_dir = out_root.path().join("O2_1").join("project");
    write_project(&tree, &manifest, &project_dir).unwrap();
    assert_eq!(
        std::fs::read_to_string(project_dir.join("requirements.txt")).unwrap(),
        "scikit-learn\n"
    );

    // Runnability check: the phantom import must surface as a diagnosis.
    let report = exec_check(
        &project_dir,
        "main.py",
        &SandboxConfig {
            command_template: "python3 {entrypoint}".into(),
            timeout: Duration::from_secs(30),
            ..SandboxConfig::default()
        },
    )
    .unwrap();
    assert_eq!(report.status, ExecStatus::NonzeroExit);
    let diagnosed = diagnose_missing_dependencies(&report, &manifest);
    assert!(!diagnosed.missing_dependencies.is_empty(), "stderr: {:?}", report.stderr_tail);
    // Which import trips first depends on the interpreter's environment:
    // sklearn (external-known) or your_module (internal-unresolved).
    for dep in &diagnosed.missing_dependencies {
        assert_ne!(dep.class, DependencyClass::Unknown, "{dep:?}");
    }

    // Clustering over the appended replications.
    let refs: Vec<&ethosforge_core::Transcript> = result.transcripts.iter().collect();
    let ecus = segment_transcripts(&refs, 20, &SegmentOptions::default());
    assert!(!ecus.is_empty());
    let matrix = build_term_matrix(&ecus, 2).unwrap();
    let cluster_tree = dhc_cluster(&matrix, 5, 1, 42).unwrap();
    assert!(cluster_tree.leaf_count() <= 5);
    let rendering = render_cluster_text(&cluster_tree);
    assert!(rendering.contains("[n="));

    // Thematic analysis per replication, then a merge.
    let params = ChatParams::default();
    let partials: Vec<_> = result
        .transcripts
        .iter()
        .map(|t| {
            let mut backend = ScriptedBackend::new([analysis_response()]);
            run_thematic_analysis(t, &mut backend, &params, "You are a qualitative analyst.", "Perform a thematic analysis.")
                .unwrap()
        })
        .collect();
    let mut merge_backend = ScriptedBackend::new([analysis_response()]);
    let merged = merge_thematic_analyses(
        &partials,
        &mut merge_backend,
        &params,
        "You are a qualitative analyst.",
        "Merge these analyses.",
    )
    .unwrap();
    assert_eq!(merged.source_run_labels, vec!["O2_1", "O2_2", "O2_3"]);

    // Baseline comparison: short, code-free baseline against the debates.
    let mut baseline_session = RunSession::scripted(ScriptedBackend::new([
        "A short high-level plan with no code.\nJust a few lines.\n".to_string(),
    ]));
    let baseline = run_baseline(&pd(), &mut baseline_session, &RunLabel::baseline(2)).unwrap();
    assert!(validate_transcript(&baseline).ok);

    let comparison = compare_runs(&result.transcripts, &baseline, &EthicsLexicon::default()).unwrap();
    assert!(comparison.flags.mas_has_code);
    assert!(!comparison.flags.baseline_has_code);
    assert!(comparison.line_ratio.unwrap() > 1.0);

    // The debate side must out-cover the baseline on the principles its
    // script actually discusses.
    let coverage = ethics_coverage(transcript, &EthicsLexicon::default());
    for principle in ["Transparency", "Justice and Fairness", "Privacy", "EU AI Act Compliance"] {
        assert!(coverage.hit_count(principle) >= 1, "missing {principle}");
    }
}

#[test]
fn truncated_replication_is_kept_and_flagged() {
    let out_root = tempfile::tempdir().unwrap();
    // Second replication's script is too short: fails mid-round 1.
    let mut call = 0;
    let result = run_replications(&pd(), &team(), 2, |replication| {
        call += 1;
        let script = if call == 2 {
            debate_script().into_iter().take(1).collect::<Vec<_>>()
        } else {
            debate_script()
        };
        let mut session = RunSession::scripted(ScriptedBackend::new(script));
        let dir = out_root.path().join(format!("O2_{replication}"));
        std::fs::create_dir_all(&dir).unwrap();
        session.persist_root = Some(dir);
        Ok(session)
    })
    .unwrap();

    assert_eq!(result.transcripts.len(), 2);
    assert_eq!(result.failures.len(), 1);
    assert_eq!(result.failures[0].replication_index, 2);

    // The truncated transcript is on disk, flagged, and still validates.
    let truncated =
        load_transcript(&out_root.path().join("O2_2").join("O2_2.transcript.json")).unwrap();
    assert_eq!(truncated.messages.len(), 1);
    let marker = truncated.truncation.as_ref().expect("truncation marker");
    assert_eq!(marker.round, 1);
    assert!(validate_transcript(&truncated).ok);
    assert!(!truncated.is_complete());
}
