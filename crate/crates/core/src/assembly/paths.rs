use std::collections::BTreeMap;
use std::sync::OnceLock;

use regex::Regex;

use super::block::{CodeBlock, PathConfidence};

fn file_marker_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"(?i)^\s*(?:#|//)\s*file\s*:\s*(\S+)").unwrap())
}

fn from_import_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*from\s+([A-Za-z_][\w.]*)\s+import\s+(.+)$").unwrap())
}

fn definition_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^\s*(?:class|def)\s+([A-Za-z_]\w*)").unwrap())
}

/// File extension for a fence info string; generated code defaults to Python
/// when the hint is missing only in the import-heuristic rule, and to plain
/// text in the ordinal fallback.
fn extension_for(hint: Option<&str>) -> Option<&'static str> {
    match hint? {
        "python" | "py" | "python3" => Some("py"),
        "rust" | "rs" => Some("rs"),
        "javascript" | "js" => Some("js"),
        "typescript" | "ts" => Some("ts"),
        "java" => Some("java"),
        "c" => Some("c"),
        "cpp" | "c++" => Some("cpp"),
        "go" => Some("go"),
        "ruby" | "rb" => Some("rb"),
        "shell" | "bash" | "sh" => Some("sh"),
        "html" => Some("html"),
        "css" => Some("css"),
        "json" => Some("json"),
        "yaml" | "yml" => Some("yaml"),
        "toml" => Some("toml"),
        "sql" => Some("sql"),
        "markdown" | "md" => Some("md"),
        "text" | "txt" => Some("txt"),
        _ => None,
    }
}

/// Symbols this block defines at top level (`class X` / `def x`).
fn defined_symbols(block: &CodeBlock) -> Vec<String> {
    block
        .text
        .lines()
        .filter_map(|line| definition_re().captures(line))
        .map(|c| c[1].to_string())
        .collect()
}

/// Map of symbol → module from `from M import a, b as c` lines across blocks.
fn imported_symbols(blocks: &[CodeBlock]) -> BTreeMap<String, String> {
    let mut map = BTreeMap::new();
    for block in blocks {
        for line in block.text.lines() {
            if let Some(captures) = from_import_re().captures(line) {
                let module = captures[1].to_string();
                for name in captures[2].split(',') {
                    let name = name.trim();
                    let name = name.split_whitespace().next().unwrap_or(name);
                    if !name.is_empty() && name != "*" {
                        map.entry(name.to_string()).or_insert_with(|| module.clone());
                    }
                }
            }
        }
    }
    map
}

/// Fills in `inferred_path` by the three-rule chain:
///
/// 1. an explicit `# file: X` / `// file: X` marker in the first lines;
/// 2. this block defines a symbol some other block imports from a module
///    (`from your_module import VideoAuthenticator`) — path `<module>.<ext>`;
/// 3. ordinal fallback `snippet_<ordinal>.<ext>`.
///
/// `ordinal` is the block's 1-based position among all extracted blocks.
pub fn infer_file_path(block: &CodeBlock, others: &[CodeBlock], ordinal: usize) -> CodeBlock {
    let mut out = block.clone();

    for line in block.text.lines().take(3) {
        if let Some(captures) = file_marker_re().captures(line) {
            out.inferred_path = Some(captures[1].to_string());
            out.path_confidence = Some(PathConfidence::Explicit);
            return out;
        }
    }

    let imports = imported_symbols(others);
    for symbol in defined_symbols(block) {
        if let Some(module) = imports.get(&symbol) {
            // Dotted modules become nested paths: pkg.mod -> pkg/mod.py
            let ext = extension_for(block.language_hint.as_deref()).unwrap_or("py");
            out.inferred_path = Some(format!("{}.{ext}", module.replace('.', "/")));
            out.path_confidence = Some(PathConfidence::Heuristic);
            return out;
        }
    }

    let ext = extension_for(block.language_hint.as_deref()).unwrap_or("txt");
    out.inferred_path = Some(format!("snippet_{ordinal}.{ext}"));
    out.path_confidence = Some(PathConfidence::Fallback);
    out
}

/// Runs [`infer_file_path`] over every block, each seeing all the others.
pub fn infer_all_paths(blocks: &[CodeBlock]) -> Vec<CodeBlock> {
    blocks
        .iter()
        .enumerate()
        .map(|(index, block)| {
            let mut others: Vec<CodeBlock> = Vec::with_capacity(blocks.len() - 1);
            others.extend_from_slice(&blocks[..index]);
            others.extend_from_slice(&blocks[index + 1..]);
            infer_file_path(block, &others, index + 1)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::BlockOrigin;

    fn block(text: &str, hint: Option<&str>) -> CodeBlock {
        CodeBlock {
            language_hint: hint.map(str::to_string),
            text: text.to_string(),
            origin: BlockOrigin {
                round: 1,
                agent_id: "a1".into(),
                position_index: Some(1),
                section_kind: None,
            },
            inferred_path: None,
            path_confidence: None,
            unterminated: false,
        }
    }

    #[test]
    fn explicit_marker_wins() {
        let b = block("# file: main.py\nprint('x')\n", Some("python"));
        let inferred = infer_file_path(&b, &[], 1);
        assert_eq!(inferred.inferred_path.as_deref(), Some("main.py"));
        assert_eq!(inferred.path_confidence, Some(PathConfidence::Explicit));
    }

    #[test]
    fn slash_comment_marker_also_matches() {
        let b = block("// file: app.js\nconsole.log(1)\n", Some("js"));
        let inferred = infer_file_path(&b, &[], 1);
        assert_eq!(inferred.inferred_path.as_deref(), Some("app.js"));
    }

    #[test]
    fn cross_block_import_names_the_module() {
        let defining = block(
            "class VideoAuthenticator:\n    def check(self):\n        pass\n",
            Some("python"),
        );
        let importing = block(
            "from your_module import VideoAuthenticator\nva = VideoAuthenticator()\n",
            Some("python"),
        );
        let inferred = infer_file_path(&defining, std::slice::from_ref(&importing), 1);
        assert_eq!(inferred.inferred_path.as_deref(), Some("your_module.py"));
        assert_eq!(inferred.path_confidence, Some(PathConfidence::Heuristic));
    }

    #[test]
    fn anonymous_block_gets_ordinal_fallback() {
        let b = block("x = 1\n", Some("python"));
        let inferred = infer_file_path(&b, &[], 3);
        assert_eq!(inferred.inferred_path.as_deref(), Some("snippet_3.py"));
        assert_eq!(inferred.path_confidence, Some(PathConfidence::Fallback));
    }

    #[test]
    fn unknown_hint_falls_back_to_txt() {
        let b = block("whatever\n", None);
        let inferred = infer_file_path(&b, &[], 2);
        assert_eq!(inferred.inferred_path.as_deref(), Some("snippet_2.txt"));
    }

    #[test]
    fn infer_all_assigns_every_block() {
        let blocks = vec![
            block("# file: main.py\nimport x\n", Some("python")),
            block("def helper():\n    pass\n", Some("python")),
        ];
        let inferred = infer_all_paths(&blocks);
        assert!(inferred.iter().all(|b| b.inferred_path.is_some()));
        assert_eq!(inferred[1].inferred_path.as_deref(), Some("snippet_2.py"));
    }

    #[test]
    fn import_with_alias_still_binds_symbol() {
        let defining = block("class AudioAuthenticator:\n    pass\n", Some("python"));
        let importing = block(
            "from media_tools import AudioAuthenticator as AA\n",
            Some("python"),
        );
        let inferred = infer_file_path(&defining, std::slice::from_ref(&importing), 1);
        assert_eq!(inferred.inferred_path.as_deref(), Some("media_tools.py"));
    }
}
