//! EthosForge: a multi-agent LLM debate engine with an evaluation pipeline.
//!
//! Role-specialized agents discuss a project description over a fixed number
//! of sequential rounds, each agent seeing the entire conversation history and
//! answering in a structured reply/reflection/code/critique format. The rest
//! of the crate turns those transcripts into artifacts and measurements:
//!
//! * [`protocol`] — the structured-message data model, section parser,
//!   context rendering, and transcript persistence.
//! * [`backend`] — a chat-completion boundary with a remote OpenAI-compatible
//!   adapter and a deterministic scripted backend for offline runs, plus
//!   retry/backoff.
//! * [`orchestrator`] — the sequential debate schedule, single-prompt
//!   baseline mode, and N-fold replication.
//! * [`assembly`] — fenced code-block extraction, file-path inference,
//!   project assembly, and dependency scanning/normalization.
//! * [`analytics`] — corpus statistics, ethics-principle coverage,
//!   chi-square-driven descending hierarchical classification, LLM-backed
//!   thematic analysis, and debate-vs-baseline comparison.
//! * [`exec`] — sandboxed execution of assembled code with
//!   missing-dependency diagnosis.

pub mod analytics;
pub mod assembly;
pub mod backend;
pub mod exec;
pub mod orchestrator;
pub mod protocol;

pub use analytics::{
    bisect_partition, build_term_matrix, chi_square_2x2, compare_runs, corpus_stats, dhc_cluster,
    partition_phi,
    ethics_coverage, merge_thematic_analyses, render_cluster_text, render_thematic_table,
    run_thematic_analysis, segment_corpus, segment_transcripts, AnalyticsError, ClusterNode,
    ClusterTree, ComparisonReport, CorpusStats, CoverageReport, Ecu, EcuSpan, EthicsLexicon,
    PrincipleCoverage, SegmentOptions, TermMatrix, Theme, ThematicAnalysis, VerdictFlags,
};
pub use assembly::{
    assemble_project, extract_code_blocks, infer_all_paths, infer_file_path,
    normalize_dependencies, scan_dependencies, write_project, AssemblyError, BlockOrigin,
    CodeBlock, DependencyManifest, ExternalDependency, MergeStrategy, NormalizationRecord,
    NormalizationTable, PathConfidence, ProjectTree, ScanConfig, WriteSummary,
};
pub use backend::{
    complete_with_retry, fingerprint_params, BackendError, ChatBackend, ChatParams, ChatRequest,
    ChatResponse, ChatTurn, FinishReason, RemoteBackend, RemoteConfig, RetryCondition,
    RetryPolicy, ScriptedBackend, TokenUsage, TurnRole, API_KEY_ENV,
};
pub use exec::{
    diagnose_missing_dependencies, exec_check, write_exec_report, DependencyClass, ExecReport,
    ExecStatus, HarnessError, MissingDependency, SandboxConfig,
};
pub use orchestrator::{
    resume_debate, run_baseline, run_debate, run_replications, run_replications_parallel, Clock,
    DebateError, DebateResult, FixedClock, LabelKind, ReplicationFailure, RunLabel, RunSession,
    SystemClock, TeamConfig,
};
pub use protocol::{
    load_transcript, parse_agent_output, render_context, save_transcript, validate_transcript,
    AgentSpec, ContextBudget, ContextError, OverflowPolicy, PersistError, ProjectDescription,
    PromptContext, PromptTurn, RunMode, Section, SectionKind, SectionMarkers, StructuredMessage,
    Transcript, TruncationMarker, ValidationReport, Violation,
};
