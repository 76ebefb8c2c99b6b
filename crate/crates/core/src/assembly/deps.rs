use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::assemble::{AssemblyError, ProjectTree};

fn plain_import_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*import\s+(.+)$").unwrap())
}

fn from_import_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*from\s+([A-Za-z_.][\w.]*)\s+import\s+(.+)$").unwrap())
}

fn definition_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*(?:class|def)\s+([A-Za-z_]\w*)").unwrap())
}

/// Python standard-library modules excluded from the external manifest; the
/// requirements file should list only installable packages. The scan stays
/// regex-grade by design — false positives are acceptable and flagged in the
/// manifest rather than hidden.
const DEFAULT_STDLIB: &[&str] = &[
    "abc", "argparse", "asyncio", "base64", "collections", "contextlib", "copy", "csv",
    "dataclasses", "datetime", "enum", "functools", "glob", "hashlib", "io", "itertools", "json",
    "logging", "math", "os", "pathlib", "pickle", "random", "re", "shutil", "socket", "sqlite3",
    "string", "struct", "subprocess", "sys", "tempfile", "threading", "time", "traceback",
    "typing", "unittest", "urllib", "uuid", "warnings", "xml",
];

/// Placeholder module names LLMs emit for "your code goes here" modules; the
/// shipped list carries only the attested `your_module`.
const DEFAULT_PLACEHOLDERS: &[&str] = &["your_module"];

/// Configuration for the import scan: which names count as standard library,
/// which are known placeholder (internal) names, and any extra line patterns
/// whose first capture group is a module name.
#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub stdlib_modules: BTreeSet<String>,
    pub placeholder_modules: BTreeSet<String>,
    pub extra_patterns: Vec<Regex>,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            stdlib_modules: DEFAULT_STDLIB.iter().map(|s| s.to_string()).collect(),
            placeholder_modules: DEFAULT_PLACEHOLDERS.iter().map(|s| s.to_string()).collect(),
            extra_patterns: Vec::new(),
        }
    }
}

/// One import found in the tree.
#[derive(Debug, Clone)]
struct FoundImport {
    module: String,
    /// Symbols named in a `from M import a, b` form, if any.
    symbols: Vec<String>,
    path: String,
    relative: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalDependency {
    pub name: String,
    pub first_seen_path: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalizationRecord {
    pub from: String,
    pub to: String,
}

/// External and unresolved-internal dependencies of an assembled tree.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DependencyManifest {
    pub external: Vec<ExternalDependency>,
    pub internal_unresolved: Vec<String>,
    pub normalizations_applied: Vec<NormalizationRecord>,
}

/// Deprecated-name → replacement-name table. The shipped seed carries the
/// single attested entry `sklearn → scikit-learn`; users extend it via a
/// `key=value` config file. Applying the table reaches a fixpoint in one
/// pass: no replacement name may itself be a key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NormalizationTable {
    map: BTreeMap<String, String>,
}

impl Default for NormalizationTable {
    fn default() -> Self {
        let mut map = BTreeMap::new();
        map.insert("sklearn".to_string(), "scikit-learn".to_string());
        NormalizationTable { map }
    }
}

impl NormalizationTable {
    pub fn empty() -> Self {
        NormalizationTable { map: BTreeMap::new() }
    }

    pub fn insert(&mut self, from: &str, to: &str) -> Result<(), AssemblyError> {
        self.map.insert(from.to_string(), to.to_string());
        self.validate()
    }

    pub fn lookup(&self, name: &str) -> Option<&str> {
        self.map.get(name).map(String::as_str)
    }

    /// Parses `key=value` lines; `#` starts a comment. Entries add to the
    /// default seed.
    pub fn load(path: &Path) -> Result<Self, AssemblyError> {
        let body = std::fs::read_to_string(path)
            .map_err(|source| AssemblyError::Io { path: path.to_path_buf(), source })?;
        let mut table = NormalizationTable::default();
        for (number, line) in body.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((from, to)) = line.split_once('=') else {
                return Err(AssemblyError::InvalidNormalizationTable(format!(
                    "line {}: expected key=value, got '{line}'",
                    number + 1
                )));
            };
            table.map.insert(from.trim().to_string(), to.trim().to_string());
        }
        table.validate()?;
        Ok(table)
    }

    /// No replacement may itself be a deprecated key (cycles and chains would
    /// break the one-pass fixpoint guarantee).
    fn validate(&self) -> Result<(), AssemblyError> {
        for (from, to) in &self.map {
            if self.map.contains_key(to) {
                return Err(AssemblyError::InvalidNormalizationTable(format!(
                    "'{from}' maps to '{to}', which is itself a deprecated key"
                )));
            }
        }
        Ok(())
    }
}

impl ScanConfig {
    fn find_imports(&self, files: &BTreeMap<String, String>) -> Vec<FoundImport> {
        let mut found = Vec::new();
        for (path, content) in files {
            for line in content.lines() {
                if let Some(captures) = from_import_re().captures(line) {
                    let raw_module = captures[1].to_string();
                    let relative = raw_module.starts_with('.');
                    let module = top_level(&raw_module);
                    if module.is_empty() {
                        continue;
                    }
                    let symbols = captures[2]
                        .split(',')
                        .filter_map(|s| s.split_whitespace().next())
                        .filter(|s| !s.is_empty() && *s != "*")
                        .map(str::to_string)
                        .collect();
                    found.push(FoundImport { module, symbols, path: path.clone(), relative });
                } else if let Some(captures) = plain_import_re().captures(line) {
                    for item in captures[1].split(',') {
                        let name = item.split_whitespace().next().unwrap_or("");
                        let module = top_level(name);
                        if module.is_empty() {
                            continue;
                        }
                        found.push(FoundImport {
                            module,
                            symbols: Vec::new(),
                            path: path.clone(),
                            relative: false,
                        });
                    }
                } else {
                    for pattern in &self.extra_patterns {
                        if let Some(captures) = pattern.captures(line) {
                            if let Some(m) = captures.get(1) {
                                found.push(FoundImport {
                                    module: top_level(m.as_str()),
                                    symbols: Vec::new(),
                                    path: path.clone(),
                                    relative: false,
                                });
                            }
                        }
                    }
                }
            }
        }
        found
    }

    /// Internal module names the tree references but no file provides:
    /// placeholder names, plus modules whose from-imported symbols are
    /// defined elsewhere in the tree (the code exists, the module file does
    /// not).
    pub fn unresolved_internal_refs(&self, files: &BTreeMap<String, String>) -> Vec<String> {
        let defined = defined_symbols(files);
        let mut unresolved = BTreeSet::new();
        for import in self.find_imports(files) {
            if module_in_tree(&import.module, files) {
                continue;
            }
            let placeholder = self.placeholder_modules.contains(&import.module);
            let symbols_defined_here =
                !import.symbols.is_empty() && import.symbols.iter().any(|s| defined.contains(s));
            if import.relative || placeholder || symbols_defined_here {
                unresolved.insert(import.module);
            }
        }
        unresolved.into_iter().collect()
    }
}

fn top_level(module: &str) -> String {
    module.trim_start_matches('.').split('.').next().unwrap_or("").to_string()
}

fn module_in_tree(module: &str, files: &BTreeMap<String, String>) -> bool {
    files.keys().any(|path| {
        path == &format!("{module}.py")
            || path == &format!("{module}/__init__.py")
            || path.starts_with(&format!("{module}/"))
            || Path::new(path).file_stem().is_some_and(|stem| stem == module)
    })
}

fn defined_symbols(files: &BTreeMap<String, String>) -> BTreeSet<String> {
    let mut symbols = BTreeSet::new();
    for content in files.values() {
        for line in content.lines() {
            if let Some(captures) = definition_re().captures(line) {
                symbols.insert(captures[1].to_string());
            }
        }
    }
    symbols
}

/// Line-scans the tree for import statements and classifies each module as
/// internal (a tree path provides it), internal-unresolved, standard library
/// (skipped), or external. Output order is deterministic: sorted by name.
pub fn scan_dependencies(tree: &ProjectTree) -> DependencyManifest {
    scan_dependencies_with(tree, &ScanConfig::default())
}

pub fn scan_dependencies_with(tree: &ProjectTree, config: &ScanConfig) -> DependencyManifest {
    let defined = defined_symbols(&tree.files);
    let mut external: BTreeMap<String, String> = BTreeMap::new();
    let mut internal_unresolved: BTreeSet<String> = BTreeSet::new();

    for import in config.find_imports(&tree.files) {
        if module_in_tree(&import.module, &tree.files) {
            continue;
        }
        let placeholder = config.placeholder_modules.contains(&import.module);
        let symbols_defined_here =
            !import.symbols.is_empty() && import.symbols.iter().any(|s| defined.contains(s));
        if import.relative || placeholder || symbols_defined_here {
            internal_unresolved.insert(import.module);
        } else if !config.stdlib_modules.contains(&import.module) {
            external.entry(import.module).or_insert(import.path);
        }
    }

    DependencyManifest {
        external: external
            .into_iter()
            .map(|(name, first_seen_path)| ExternalDependency { name, first_seen_path })
            .collect(),
        internal_unresolved: internal_unresolved.into_iter().collect(),
        normalizations_applied: Vec::new(),
    }
}

/// Replaces deprecated package names per the table, recording every
/// substitution. Idempotent: normalized names are never themselves keys.
pub fn normalize_dependencies(
    manifest: &DependencyManifest,
    table: &NormalizationTable,
) -> DependencyManifest {
    let mut external: BTreeMap<String, String> = BTreeMap::new();
    let mut normalizations = manifest.normalizations_applied.clone();

    for dep in &manifest.external {
        match table.lookup(&dep.name) {
            Some(replacement) => {
                let record =
                    NormalizationRecord { from: dep.name.clone(), to: replacement.to_string() };
                if !normalizations.contains(&record) {
                    normalizations.push(record);
                }
                external
                    .entry(replacement.to_string())
                    .or_insert_with(|| dep.first_seen_path.clone());
            }
            None => {
                external.entry(dep.name.clone()).or_insert_with(|| dep.first_seen_path.clone());
            }
        }
    }

    DependencyManifest {
        external: external
            .into_iter()
            .map(|(name, first_seen_path)| ExternalDependency { name, first_seen_path })
            .collect(),
        internal_unresolved: manifest.internal_unresolved.clone(),
        normalizations_applied: normalizations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_project, BlockOrigin, CodeBlock, MergeStrategy};

    fn tree_of(files: &[(&str, &str)]) -> ProjectTree {
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
    fn plain_import_is_external() {
        let tree = tree_of(&[("main.py", "import sklearn\nimport os\n")]);
        let manifest = scan_dependencies(&tree);
        let names: Vec<&str> = manifest.external.iter().map(|d| d.name.as_str()).collect();
        assert_eq!(names, ["sklearn"]);
        assert_eq!(manifest.external[0].first_seen_path, "main.py");
    }

    #[test]
    fn in_tree_module_is_internal_not_external() {
        let tree = tree_of(&[
            ("main.py", "from your_module import VideoAuthenticator\n"),
            ("your_module.py", "class VideoAuthenticator:\n    pass\n"),
        ]);
        let manifest = scan_dependencies(&tree);
        assert!(manifest.external.is_empty());
        assert!(manifest.internal_unresolved.is_empty());
    }

    #[test]
    fn placeholder_module_is_internal_unresolved() {
        let tree = tree_of(&[("main.py", "from your_module import VideoAuthenticator\n")]);
        let manifest = scan_dependencies(&tree);
        assert!(manifest.external.is_empty());
        assert_eq!(manifest.internal_unresolved, vec!["your_module"]);
    }

    #[test]
    fn symbol_evidence_marks_module_internal() {
        // `media_tools` is no placeholder, but the symbol it supposedly
        // provides is defined right here in the tree.
        let tree = tree_of(&[
            ("main.py", "from media_tools import AudioCheck\n"),
            ("impl.py", "class AudioCheck:\n    pass\n"),
        ]);
        let manifest = scan_dependencies(&tree);
        assert_eq!(manifest.internal_unresolved, vec!["media_tools"]);
        assert!(manifest.external.is_empty());
    }

    #[test]
    fn empty_tree_gives_empty_manifest() {
        let tree = ProjectTree {
            files: BTreeMap::new(),
            provenance: BTreeMap::new(),
            unresolved_refs: Vec::new(),
            strategy: MergeStrategy::LastWins,
        };
        assert_eq!(scan_dependencies(&tree), DependencyManifest::default());
    }

    #[test]
    fn normalization_replaces_and_records() {
        let tree = tree_of(&[("main.py", "import sklearn\n")]);
        let manifest = scan_dependencies(&tree);
        let normalized = normalize_dependencies(&manifest, &NormalizationTable::default());
        let names: Vec<&str> = normalized.external.iter().map(|d| d.name.as_str()).collect();
        assert_eq!(names, ["scikit-learn"]);
        assert_eq!(
            normalized.normalizations_applied,
            vec![NormalizationRecord { from: "sklearn".into(), to: "scikit-learn".into() }]
        );
    }

    #[test]
    fn normalization_is_a_fixpoint_on_clean_names() {
        let tree = tree_of(&[("main.py", "import numpy\n")]);
        let manifest = scan_dependencies(&tree);
        let normalized = normalize_dependencies(&manifest, &NormalizationTable::default());
        assert_eq!(normalized, manifest);
    }

    #[test]
    fn normalization_is_idempotent() {
        let tree = tree_of(&[("main.py", "import sklearn\nimport numpy\n")]);
        let manifest = scan_dependencies(&tree);
        let table = NormalizationTable::default();
        let once = normalize_dependencies(&manifest, &table);
        let twice = normalize_dependencies(&once, &table);
        assert_eq!(once, twice);
    }

    #[test]
    fn chained_table_entries_are_rejected() {
        let mut table = NormalizationTable::empty();
        table.insert("a", "b").unwrap();
        assert!(table.insert("b", "c").is_err());
    }

    #[test]
    fn table_loads_key_value_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("normalize.conf");
        std::fs::write(&path, "# deprecations\nsklearn=scikit-learn\nPIL = Pillow\n").unwrap();
        let table = NormalizationTable::load(&path).unwrap();
        assert_eq!(table.lookup("PIL"), Some("Pillow"));
        assert_eq!(table.lookup("sklearn"), Some("scikit-learn"));
    }

    #[test]
    fn import_with_alias_and_multiple_names() {
        let tree = tree_of(&[("main.py", "import numpy as np, pandas\n")]);
        let manifest = scan_dependencies(&tree);
        let names: Vec<&str> = manifest.external.iter().map(|d| d.name.as_str()).collect();
        assert_eq!(names, ["numpy", "pandas"]);
    }

    #[test]
    fn dotted_import_reports_top_level_name() {
        let tree = tree_of(&[("main.py", "from sklearn.linear_model import LogisticRegression\n")]);
        let manifest = scan_dependencies(&tree);
        let names: Vec<&str> = manifest.external.iter().map(|d| d.name.as_str()).collect();
        assert_eq!(names, ["sklearn"]);
    }
}
