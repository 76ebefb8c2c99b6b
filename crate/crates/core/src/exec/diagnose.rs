use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::assembly::DependencyManifest;

use super::sandbox::ExecReport;

/// How a module name that failed to import relates to the dependency
/// manifest.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DependencyClass {
    /// Listed in the manifest's external dependencies (possibly under a
    /// normalized name) — install it.
    ExternalKnown,
    /// A module the generated code references but never produced.
    InternalUnresolved,
    Unknown,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MissingDependency {
    pub name: String,
    pub class: DependencyClass,
    pub note: String,
}

fn module_not_found_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"(?:ModuleNotFoundError|ImportError):\s*No module named '?([A-Za-z_][\w.]*)'?")
            .unwrap()
    })
}

fn import_error_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"ImportError: cannot import name .* from '([A-Za-z_][\w.]*)'").unwrap()
    })
}

fn classify(name: &str, manifest: &DependencyManifest) -> MissingDependency {
    let top = name.split('.').next().unwrap_or(name);

    if manifest.internal_unresolved.iter().any(|m| m == top) {
        return MissingDependency {
            name: top.to_string(),
            class: DependencyClass::InternalUnresolved,
            note: "module referenced by the generated code but never produced; \
                   no file to install"
                .to_string(),
        };
    }
    if let Some(record) = manifest.normalizations_applied.iter().find(|r| r.from == top) {
        return MissingDependency {
            name: top.to_string(),
            class: DependencyClass::ExternalKnown,
            note: format!("deprecated name; normalized form {} in requirements", record.to),
        };
    }
    if manifest.external.iter().any(|d| d.name == top) {
        return MissingDependency {
            name: top.to_string(),
            class: DependencyClass::ExternalKnown,
            note: "listed in requirements; install it".to_string(),
        };
    }
    MissingDependency {
        name: top.to_string(),
        class: DependencyClass::Unknown,
        note: "not found in the dependency manifest".to_string(),
    }
}

/// Scans the stderr tail for module-not-found patterns and cross-references
/// each missing name against the manifest. Returns the report with
/// `missing_dependencies` filled in; everything else is untouched.
pub fn diagnose_missing_dependencies(
    report: &ExecReport,
    manifest: &DependencyManifest,
) -> ExecReport {
    let mut missing: Vec<MissingDependency> = Vec::new();
    for line in &report.stderr_tail {
        for captures in module_not_found_re()
            .captures_iter(line)
            .chain(import_error_re().captures_iter(line))
        {
            let found = classify(&captures[1], manifest);
            if !missing.iter().any(|m| m.name == found.name) {
                missing.push(found);
            }
        }
    }
    ExecReport { missing_dependencies: missing, ..report.clone() }
}
