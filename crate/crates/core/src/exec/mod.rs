//! Runs assembled code just far enough to report whether it runs: sandboxed
//! subprocess execution with timeout, output capture, and
//! missing-dependency diagnosis. Never a correctness or ethics judgment.

mod diagnose;
mod sandbox;

pub use diagnose::{diagnose_missing_dependencies, DependencyClass, MissingDependency};
pub use sandbox::{
    exec_check, write_exec_report, ExecReport, ExecStatus, HarnessError, SandboxConfig,
    EXEC_REPORT_FILE,
};
