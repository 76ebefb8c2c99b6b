//! The structured-communication data model: roles, sections, messages, and
//! transcripts, plus parsing, context rendering, validation, and persistence.

mod context;
mod parse;
mod persist;
mod types;
mod validate;

pub use context::{estimate_tokens, render_context, ContextBudget, ContextError, OverflowPolicy,
    PromptContext, PromptTurn};
pub use parse::{parse_agent_output, SectionMarkers};
pub use persist::{load_transcript, save_transcript, transcript_file_name, PersistError,
    TRANSCRIPT_SCHEMA_VERSION};
pub use types::{AgentSpec, ProjectDescription, RunMode, Section, SectionKind, StructuredMessage,
    Transcript, TruncationMarker};
pub use validate::{validate_transcript, ValidationReport, Violation};
