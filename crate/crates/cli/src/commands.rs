use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{anyhow, Context};
use serde::Deserialize;

use ethosforge_core::{
    assemble_project, build_term_matrix, compare_runs, dhc_cluster, diagnose_missing_dependencies,
    ethics_coverage, exec_check, extract_code_blocks, infer_all_paths, load_transcript,
    merge_thematic_analyses, normalize_dependencies, render_cluster_text, render_thematic_table,
    resume_debate, run_baseline, run_debate, run_replications, run_replications_parallel,
    run_thematic_analysis, save_transcript, scan_dependencies, segment_transcripts,
    validate_transcript, write_exec_report, write_project, ChatBackend, DebateError,
    DependencyManifest, EthicsLexicon, FixedClock, MergeStrategy, NormalizationTable,
    RemoteBackend, RemoteConfig, RunLabel, RunSession, SandboxConfig, ScriptedBackend,
    SegmentOptions, SystemClock, ThematicAnalysis, Transcript,
};

use crate::config::{BackendChoice, CliConfig};
use crate::{CliError, Command};

fn make_backend(config: &CliConfig) -> Result<Box<dyn ChatBackend>, CliError> {
    match &config.backend {
        BackendChoice::Remote => {
            config.require_credential()?;
            Ok(Box::new(RemoteBackend::new(RemoteConfig {
                endpoint_url: config.endpoint_url.clone(),
                api_key: std::env::var(ethosforge_core::API_KEY_ENV).ok(),
                timeout: config.timeout(),
            })))
        }
        BackendChoice::Scripted(path) => {
            let script = std::fs::read_to_string(path)
                .with_context(|| format!("reading script file {}", path.display()))?;
            Ok(Box::new(ScriptedBackend::from_script(&script)))
        }
    }
}

fn make_session(config: &CliConfig, persist_root: Option<PathBuf>) -> Result<RunSession, CliError> {
    let backend = make_backend(config)?;
    let clock: Box<dyn ethosforge_core::Clock> = match config.backend {
        // Fixed timestamps keep scripted runs byte-reproducible.
        BackendChoice::Scripted(_) => Box::new(FixedClock::default()),
        BackendChoice::Remote => Box::new(SystemClock),
    };
    Ok(RunSession {
        backend,
        params: config.chat_params(),
        clock,
        persist_root,
        pacing: Duration::from_millis(config.pacing_ms),
    })
}

fn run_dir(config: &CliConfig, pd_id: &str, label: &RunLabel) -> Result<PathBuf, CliError> {
    let dir = config.output_root.join(pd_id).join(label.render());
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    config.write_lock(&dir).context("writing config.lock")?;
    Ok(dir)
}

fn write_json<T: serde::Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("creating {}", parent.display()))?;
    }
    let mut body = serde_json::to_string_pretty(value).context("serializing artifact")?;
    body.push('\n');
    std::fs::write(path, body).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Every artifact directory carries a config.lock for provenance.
fn write_artifact<T: serde::Serialize>(
    value: &T,
    path: &Path,
    config: &CliConfig,
) -> Result<(), CliError> {
    write_json(value, path)?;
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    config.write_lock(dir).context("writing config.lock")?;
    Ok(())
}

fn load_transcripts(paths: &[PathBuf]) -> Result<Vec<Transcript>, CliError> {
    paths
        .iter()
        .map(|path| {
            load_transcript(path)
                .map_err(|e| CliError::Operational(anyhow!("{e}")))
        })
        .collect()
}

fn artifact_dir(out: &Option<PathBuf>, first_input: &Path) -> PathBuf {
    out.clone().unwrap_or_else(|| {
        first_input.parent().map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("."))
    })
}

fn parse_strategy(text: &str) -> Result<MergeStrategy, CliError> {
    match text {
        "last-wins" => Ok(MergeStrategy::LastWins),
        "first-wins" => Ok(MergeStrategy::FirstWins),
        "error-on-conflict" => Ok(MergeStrategy::ErrorOnConflict),
        other => Err(CliError::Usage(format!(
            "unknown merge strategy '{other}'; use last-wins, first-wins, or error-on-conflict"
        ))),
    }
}

fn load_lexicon(path: &Option<PathBuf>) -> Result<EthicsLexicon, CliError> {
    match path {
        Some(path) => {
            EthicsLexicon::load(path).map_err(|e| CliError::Usage(e.to_string()))
        }
        None => Ok(EthicsLexicon::default()),
    }
}

fn operational(error: DebateError) -> CliError {
    CliError::Operational(anyhow!("{error}"))
}

pub fn dispatch(command: Command, config: CliConfig) -> Result<(), CliError> {
    match command {
        Command::Run { pd, team, rounds: _, pd_index, replication } => {
            let project = crate::config::load_project(&pd)?;
            let team_config = crate::config::load_team(&team, &config)?;
            let label = RunLabel::debate(pd_index, replication);
            let dir = run_dir(&config, &project.pd_id, &label)?;
            let mut session = make_session(&config, Some(dir.clone()))?;
            let transcript =
                run_debate(&project, &team_config, &mut session, &label).map_err(operational)?;
            let report = validate_transcript(&transcript);
            if !report.ok {
                return Err(CliError::Operational(anyhow!(
                    "transcript failed validation: {:?}",
                    report.violations
                )));
            }
            println!(
                "{}: {} messages -> {}",
                label.render(),
                transcript.messages.len(),
                dir.join(format!("{}.transcript.json", label.render())).display()
            );
            Ok(())
        }

        Command::Baseline { pd, pd_index } => {
            let project = crate::config::load_project(&pd)?;
            let label = RunLabel::baseline(pd_index);
            let dir = run_dir(&config, &project.pd_id, &label)?;
            let mut session = make_session(&config, Some(dir.clone()))?;
            let transcript = run_baseline(&project, &mut session, &label).map_err(operational)?;
            println!(
                "{}: {} message -> {}",
                label.render(),
                transcript.messages.len(),
                dir.join(format!("{}.transcript.json", label.render())).display()
            );
            Ok(())
        }

        Command::Replicate { pd, team, replications: _, rounds: _, pd_index, parallel } => {
            let project = crate::config::load_project(&pd)?;
            let team_config = crate::config::load_team(&team, &config)?;
            let factory = |replication: u32| -> Result<RunSession, DebateError> {
                let label = RunLabel::debate(pd_index, replication);
                let dir = run_dir(&config, &project.pd_id, &label)
                    .map_err(|_| DebateError::InvalidArgument("run dir not creatable".into()))?;
                make_session(&config, Some(dir)).map_err(|e| {
                    DebateError::InvalidArgument(match e {
                        CliError::Usage(message) => message,
                        CliError::Operational(error) => error.to_string(),
                    })
                })
            };
            let result = if parallel {
                run_replications_parallel(&project, &team_config, pd_index, factory)
            } else {
                run_replications(&project, &team_config, pd_index, factory)
            }
            .map_err(operational)?;

            for transcript in &result.transcripts {
                println!("{}: {} messages", transcript.run_label, transcript.messages.len());
            }
            for failure in &result.failures {
                eprintln!(
                    "replication {} failed: {}",
                    failure.replication_index, failure.error
                );
            }
            Ok(())
        }

        Command::Resume { transcript, rounds } => {
            let loaded =
                load_transcript(&transcript).map_err(|e| CliError::Operational(anyhow!("{e}")))?;
            let dir = transcript
                .parent()
                .map(Path::to_path_buf)
                .unwrap_or_else(|| PathBuf::from("."));
            let mut session = make_session(&config, Some(dir.clone()))?;
            let resumed = resume_debate(&loaded, rounds, &mut session).map_err(operational)?;
            let path = save_transcript(&resumed, &dir)
                .map_err(|e| CliError::Operational(anyhow!("{e}")))?;
            println!(
                "{}: now {} rounds, {} messages -> {}",
                resumed.run_label,
                resumed.round_count,
                resumed.messages.len(),
                path.display()
            );
            Ok(())
        }

        Command::Extract { transcript, out, strategy, normalize } => {
            let strategy = parse_strategy(&strategy)?;
            let transcripts = load_transcripts(&transcript)?;
            let mut blocks = Vec::new();
            for item in &transcripts {
                blocks.extend(extract_code_blocks(item));
            }
            let blocks = infer_all_paths(&blocks);
            let tree =
                assemble_project(&blocks, strategy).map_err(|e| CliError::Operational(anyhow!("{e}")))?;
            let table = match normalize {
                Some(path) => NormalizationTable::load(&path)
                    .map_err(|e| CliError::Usage(e.to_string()))?,
                None => NormalizationTable::default(),
            };
            let manifest = normalize_dependencies(&scan_dependencies(&tree), &table);
            let out_dir =
                out.unwrap_or_else(|| artifact_dir(&None, &transcript[0]).join("project"));
            let summary = write_project(&tree, &manifest, &out_dir)
                .map_err(|e| CliError::Operational(anyhow!("{e}")))?;
            config.write_lock(&out_dir).context("writing config.lock")?;
            println!(
                "{} files, {} external deps, {} unresolved internal -> {}",
                summary.files_written.len(),
                manifest.external.len(),
                manifest.internal_unresolved.len(),
                out_dir.display()
            );
            for name in &tree.unresolved_refs {
                eprintln!("unresolved internal module: {name}");
            }
            Ok(())
        }

        Command::Analyze { transcript, out } => {
            let transcripts = load_transcripts(&transcript)?;
            let per_run: Vec<serde_json::Value> = transcripts
                .iter()
                .map(|t| {
                    let stats = ethosforge_core::corpus_stats(t);
                    serde_json::json!({"run_label": t.run_label, "stats": stats})
                })
                .collect();
            let doc = serde_json::json!({"transcripts": per_run});
            let dir = artifact_dir(&out, &transcript[0]);
            let path = if out.as_deref().is_some_and(|p| p.extension().is_some()) {
                out.clone().unwrap()
            } else {
                dir.join("corpus_stats.json")
            };
            write_artifact(&doc, &path, &config)?;
            println!("{}", serde_json::to_string_pretty(&doc).unwrap());
            Ok(())
        }

        Command::Coverage { transcript, lexicon, out } => {
            let lexicon = load_lexicon(&lexicon)?;
            let transcripts = load_transcripts(&transcript)?;
            let per_run: Vec<serde_json::Value> = transcripts
                .iter()
                .map(|t| {
                    let report = ethics_coverage(t, &lexicon);
                    serde_json::json!({"run_label": t.run_label, "coverage": report})
                })
                .collect();
            let doc = serde_json::json!({"transcripts": per_run});
            let dir = artifact_dir(&out, &transcript[0]);
            let path = if out.as_deref().is_some_and(|p| p.extension().is_some()) {
                out.clone().unwrap()
            } else {
                dir.join("coverage.json")
            };
            write_artifact(&doc, &path, &config)?;
            println!("coverage -> {}", path.display());
            Ok(())
        }

        Command::Cluster {
            transcript,
            segment_size,
            min_freq,
            max_classes,
            min_class_size,
            stopwords,
            out,
        } => {
            let transcripts = load_transcripts(&transcript)?;
            let refs: Vec<&Transcript> = transcripts.iter().collect();
            let options = match stopwords {
                Some(path) => SegmentOptions::with_stopword_file(&path)
                    .map_err(|e| CliError::Usage(e.to_string()))?,
                None => SegmentOptions::default(),
            };
            let ecus = segment_transcripts(
                &refs,
                segment_size.unwrap_or(config.segment_size),
                &options,
            );
            let matrix = build_term_matrix(&ecus, min_freq.unwrap_or(config.min_freq))
                .map_err(|e| CliError::Operational(anyhow!("{e}")))?;
            let tree = dhc_cluster(
                &matrix,
                max_classes.unwrap_or(config.max_classes),
                min_class_size.unwrap_or(config.min_class_size),
                config.seed,
            )
            .map_err(|e| CliError::Operational(anyhow!("{e}")))?;

            let dir = artifact_dir(&out, &transcript[0]);
            std::fs::create_dir_all(&dir)
                .with_context(|| format!("creating {}", dir.display()))?;
            write_json(&tree, &dir.join("cluster.json"))?;
            let text = render_cluster_text(&tree);
            std::fs::write(dir.join("cluster.txt"), &text)
                .with_context(|| format!("writing {}", dir.join("cluster.txt").display()))?;
            config.write_lock(&dir).context("writing config.lock")?;
            println!("{} classes over {} ECUs -> {}", tree.leaf_count(), ecus.len(), dir.display());
            print!("{text}");
            Ok(())
        }

        Command::Themes { transcript, instruction, header, out } => {
            let loaded =
                load_transcript(&transcript).map_err(|e| CliError::Operational(anyhow!("{e}")))?;
            let instruction = std::fs::read_to_string(&instruction)
                .with_context(|| format!("reading {}", instruction.display()))?;
            let header = std::fs::read_to_string(&header)
                .with_context(|| format!("reading {}", header.display()))?;
            let mut backend = make_backend(&config)?;
            let analysis = run_thematic_analysis(
                &loaded,
                backend.as_mut(),
                &config.chat_params(),
                &instruction,
                &header,
            )
            .map_err(|e| CliError::Operational(anyhow!("{e}")))?;
            let dir = artifact_dir(&out, &transcript);
            let path = dir.join(format!("{}.themes.json", loaded.run_label));
            write_artifact(&analysis, &path, &config)?;
            let table = render_thematic_table(&analysis);
            std::fs::write(dir.join(format!("{}.themes.txt", loaded.run_label)), &table)
                .with_context(|| format!("writing themes table into {}", dir.display()))?;
            println!("{table}");
            println!("themes -> {}", path.display());
            Ok(())
        }

        Command::MergeThemes { analysis, instruction, merge_prompt, out } => {
            let partials: Vec<ThematicAnalysis> = analysis
                .iter()
                .map(|path| -> Result<ThematicAnalysis, CliError> {
                    let body = std::fs::read_to_string(path)
                        .with_context(|| format!("reading {}", path.display()))?;
                    serde_json::from_str(&body)
                        .with_context(|| format!("parsing {}", path.display()))
                        .map_err(CliError::from)
                })
                .collect::<Result<_, _>>()?;
            let instruction = std::fs::read_to_string(&instruction)
                .with_context(|| format!("reading {}", instruction.display()))?;
            let merge_prompt = std::fs::read_to_string(&merge_prompt)
                .with_context(|| format!("reading {}", merge_prompt.display()))?;
            let mut backend = make_backend(&config)?;
            let merged = merge_thematic_analyses(
                &partials,
                backend.as_mut(),
                &config.chat_params(),
                &instruction,
                &merge_prompt,
            )
            .map_err(|e| CliError::Operational(anyhow!("{e}")))?;
            let dir = artifact_dir(&out, &analysis[0]);
            let path = dir.join("merged.themes.json");
            write_artifact(&merged, &path, &config)?;
            let table = render_thematic_table(&merged);
            std::fs::write(dir.join("merged.themes.txt"), &table)
                .with_context(|| format!("writing themes table into {}", dir.display()))?;
            println!("{table}");
            println!("merged themes ({}) -> {}", merged.source_run_labels.join(", "), path.display());
            Ok(())
        }

        Command::Compare { mas, baseline, lexicon, out } => {
            let lexicon = load_lexicon(&lexicon)?;
            let mas_transcripts = load_transcripts(&mas)?;
            let baseline_transcript =
                load_transcript(&baseline).map_err(|e| CliError::Operational(anyhow!("{e}")))?;
            let report = compare_runs(&mas_transcripts, &baseline_transcript, &lexicon)
                .map_err(|e| CliError::Operational(anyhow!("{e}")))?;
            let dir = artifact_dir(&out, &mas[0]);
            let path = if out.as_deref().is_some_and(|p| p.extension().is_some()) {
                out.clone().unwrap()
            } else {
                dir.join("comparison.json")
            };
            write_artifact(&report, &path, &config)?;
            match report.line_ratio {
                Some(ratio) => println!(
                    "line ratio {ratio:.2} (debate mean / baseline); baseline code: {}",
                    report.flags.baseline_has_code
                ),
                None => println!("line ratio undefined (baseline has zero lines)"),
            }
            println!("comparison -> {}", path.display());
            Ok(())
        }

        Command::ExecCheck { dir, entrypoint, template, timeout_secs, allow_env, network } => {
            let entrypoint = match entrypoint {
                Some(name) => name,
                None => pick_entrypoint(&dir)?,
            };
            let sandbox = SandboxConfig {
                command_template: template,
                workdir: None,
                timeout: Duration::from_secs(timeout_secs),
                env_allowlist: allow_env,
                network_allowed: network,
            };
            let report = exec_check(&dir, &entrypoint, &sandbox)
                .map_err(|e| CliError::Usage(e.to_string()))?;
            let manifest = load_manifest_from_provenance(&dir);
            let report = diagnose_missing_dependencies(&report, &manifest);
            let path = write_exec_report(&report, &dir)
                .map_err(|e| CliError::Operational(anyhow!("{e}")))?;
            println!(
                "status: {:?}, exit code: {:?}, duration: {:?}",
                report.status, report.exit_code, report.duration
            );
            for dep in &report.missing_dependencies {
                println!("missing dependency {} ({:?}): {}", dep.name, dep.class, dep.note);
            }
            println!("report -> {}", path.display());
            Ok(())
        }
    }
}

/// Default entrypoint: a `main.<ext>` file when present, else the single
/// candidate file; anything else needs an explicit flag.
fn pick_entrypoint(dir: &Path) -> Result<String, CliError> {
    let reserved = ["requirements.txt", "PROVENANCE.json", "EXEC_REPORT.json", "config.lock"];
    let mut candidates = Vec::new();
    let entries = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?;
    for entry in entries {
        let entry = entry.context("reading directory entry")?;
        let name = entry.file_name().to_string_lossy().to_string();
        if entry.file_type().map(|t| t.is_file()).unwrap_or(false)
            && !reserved.contains(&name.as_str())
        {
            candidates.push(name);
        }
    }
    candidates.sort();
    if let Some(main) = candidates
        .iter()
        .find(|name| Path::new(name).file_stem().is_some_and(|stem| stem == "main"))
    {
        return Ok(main.clone());
    }
    match candidates.len() {
        1 => Ok(candidates.remove(0)),
        0 => Err(CliError::Usage(format!("no files to run in {}", dir.display()))),
        _ => Err(CliError::Usage(format!(
            "multiple candidate files in {}; pass --entrypoint",
            dir.display()
        ))),
    }
}

#[derive(Deserialize)]
struct ProvenanceManifest {
    manifest: DependencyManifest,
}

/// The project's manifest travels inside PROVENANCE.json; exec-check uses it
/// to classify missing imports. Absent or unreadable provenance degrades to
/// an empty manifest (all misses classify as unknown).
fn load_manifest_from_provenance(dir: &Path) -> DependencyManifest {
    std::fs::read_to_string(dir.join("PROVENANCE.json"))
        .ok()
        .and_then(|body| serde_json::from_str::<ProvenanceManifest>(&body).ok())
        .map(|doc| doc.manifest)
        .unwrap_or_default()
}
