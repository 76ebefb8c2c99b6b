use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::assemble::{normalize_path, AssemblyError, ProjectTree};
use super::deps::DependencyManifest;

pub const REQUIREMENTS_FILE: &str = "requirements.txt";
pub const PROVENANCE_FILE: &str = "PROVENANCE.json";

/// What [`write_project`] put on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WriteSummary {
    pub files_written: Vec<PathBuf>,
    pub requirements_path: PathBuf,
    pub provenance_path: PathBuf,
}

#[derive(Serialize)]
struct ProvenanceDoc<'a> {
    strategy: super::MergeStrategy,
    files: &'a std::collections::BTreeMap<String, Vec<super::BlockOrigin>>,
    unresolved_internal: &'a [String],
    manifest: &'a DependencyManifest,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), AssemblyError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)
            .map_err(|source| AssemblyError::Io { path: parent.to_path_buf(), source })?;
    }
    fs::write(path, bytes).map_err(|source| AssemblyError::Io { path: path.to_path_buf(), source })
}

/// Materializes the tree under `out_dir`: every file, a requirements file
/// listing the manifest's external dependencies (one per line), and a
/// provenance report. Paths that would escape `out_dir` are refused; output
/// is deterministic, so a rerun produces identical bytes.
pub fn write_project(
    tree: &ProjectTree,
    manifest: &DependencyManifest,
    out_dir: &Path,
) -> Result<WriteSummary, AssemblyError> {
    fs::create_dir_all(out_dir)
        .map_err(|source| AssemblyError::Io { path: out_dir.to_path_buf(), source })?;

    let mut files_written = Vec::new();
    for (raw_path, content) in &tree.files {
        // Trees are normalized at assembly, but guard again here: hand-built
        // trees go through the same gate.
        let safe = normalize_path(raw_path)?;
        let path = out_dir.join(&safe);
        write_file(&path, content.as_bytes())?;
        files_written.push(path);
    }

    let mut requirements = String::new();
    for dep in &manifest.external {
        requirements.push_str(&dep.name);
        requirements.push('\n');
    }
    let requirements_path = out_dir.join(REQUIREMENTS_FILE);
    write_file(&requirements_path, requirements.as_bytes())?;

    let doc = ProvenanceDoc {
        strategy: tree.strategy,
        files: &tree.provenance,
        unresolved_internal: &tree.unresolved_refs,
        manifest,
    };
    let mut body = serde_json::to_string_pretty(&doc).expect("provenance serializes");
    body.push('\n');
    let provenance_path = out_dir.join(PROVENANCE_FILE);
    write_file(&provenance_path, body.as_bytes())?;

    Ok(WriteSummary { files_written, requirements_path, provenance_path })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{
        assemble_project, normalize_dependencies, scan_dependencies, BlockOrigin, CodeBlock,
        MergeStrategy, NormalizationTable,
    };
    use std::collections::BTreeMap;

    fn tree_with(files: &[(&str, &str)]) -> ProjectTree {
        let blocks: Vec<CodeBlock> = files
            .iter()
            .map(|(path, text)| CodeBlock {
                language_hint: Some("python".into()),
                text: text.to_string(),
                origin: BlockOrigin {
                    round: 1,
                    agent_id: "a1".into(),
                    position_index: Some(1),
                    section_kind: None,
                },
                inferred_path: Some(path.to_string()),
                path_confidence: None,
                unterminated: false,
            })
            .collect();
        assemble_project(&blocks, MergeStrategy::LastWins).unwrap()
    }

    #[test]
    fn writes_files_requirements_and_provenance() {
        let dir = tempfile::tempdir().unwrap();
        let tree = tree_with(&[("main.py", "import sklearn\n")]);
        let manifest =
            normalize_dependencies(&scan_dependencies(&tree), &NormalizationTable::default());
        let summary = write_project(&tree, &manifest, dir.path()).unwrap();

        assert_eq!(summary.files_written.len(), 1);
        assert_eq!(
            std::fs::read_to_string(dir.path().join("main.py")).unwrap(),
            "import sklearn\n"
        );
        assert_eq!(
            std::fs::read_to_string(dir.path().join(REQUIREMENTS_FILE)).unwrap(),
            "scikit-learn\n"
        );
        let provenance =
            std::fs::read_to_string(dir.path().join(PROVENANCE_FILE)).unwrap();
        assert!(provenance.contains("\"sklearn\""));
        assert!(provenance.contains("\"scikit-learn\""));
    }

    #[test]
    fn rerun_is_byte_identical() {
        let dir = tempfile::tempdir().unwrap();
        let tree = tree_with(&[("a.py", "x = 1\n"), ("b/c.py", "y = 2\n")]);
        let manifest = scan_dependencies(&tree);
        write_project(&tree, &manifest, dir.path()).unwrap();
        let first = std::fs::read(dir.path().join(PROVENANCE_FILE)).unwrap();
        write_project(&tree, &manifest, dir.path()).unwrap();
        let second = std::fs::read(dir.path().join(PROVENANCE_FILE)).unwrap();
        assert_eq!(first, second);
    }

    #[test]
    fn traversal_path_in_hand_built_tree_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let mut files = BTreeMap::new();
        files.insert("../evil.py".to_string(), "x\n".to_string());
        let tree = ProjectTree {
            files,
            provenance: BTreeMap::new(),
            unresolved_refs: Vec::new(),
            strategy: MergeStrategy::LastWins,
        };
        let err = write_project(&tree, &DependencyManifest::default(), dir.path()).unwrap_err();
        assert!(matches!(err, AssemblyError::UnsafePath(_)));
        assert!(!dir.path().parent().unwrap().join("evil.py").exists());
    }

    #[test]
    fn nested_paths_are_created() {
        let dir = tempfile::tempdir().unwrap();
        let tree = tree_with(&[("pkg/mod/util.py", "z = 3\n")]);
        write_project(&tree, &DependencyManifest::default(), dir.path()).unwrap();
        assert!(dir.path().join("pkg/mod/util.py").exists());
    }
}
