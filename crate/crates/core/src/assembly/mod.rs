//! Turns code spread across debate rounds into a runnable project tree:
//! fence extraction, file-path inference, last-wins assembly, and dependency
//! scanning/normalization.

mod assemble;
mod block;
mod deps;
mod extract;
pub(crate) mod fence;
mod paths;
mod write;

pub use assemble::{assemble_project, AssemblyError, MergeStrategy, ProjectTree};
pub use block::{BlockOrigin, CodeBlock, PathConfidence};
pub use deps::{
    normalize_dependencies, scan_dependencies, scan_dependencies_with, DependencyManifest,
    ExternalDependency, NormalizationRecord, NormalizationTable, ScanConfig,
};
pub use extract::extract_code_blocks;
pub use paths::{infer_all_paths, infer_file_path};
pub use write::{write_project, WriteSummary, PROVENANCE_FILE, REQUIREMENTS_FILE};
