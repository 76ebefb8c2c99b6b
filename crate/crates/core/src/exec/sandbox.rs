use std::collections::BTreeMap;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use wait_timeout::ChildExt;

use super::diagnose::MissingDependency;

pub const EXEC_REPORT_FILE: &str = "EXEC_REPORT.json";
const OUTPUT_TAIL_LINES: usize = 50;

/// How generated code gets run. The command template must contain
/// `{entrypoint}`; `{workdir}` expands to the absolute working directory.
/// Environment passthrough is default-deny: only allowlisted variables reach
/// the child. `network_allowed` is an advisory flag recorded in the report —
/// LLM-generated code is untrusted by default.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SandboxConfig {
    pub command_template: String,
    /// Working directory override; defaults to the tree directory.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workdir: Option<PathBuf>,
    pub timeout: Duration,
    pub env_allowlist: Vec<String>,
    pub network_allowed: bool,
}

impl Default for SandboxConfig {
    fn default() -> Self {
        SandboxConfig {
            command_template: "python3 {entrypoint}".to_string(),
            workdir: None,
            timeout: Duration::from_secs(60),
            env_allowlist: Vec::new(),
            network_allowed: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExecStatus {
    Ok,
    NonzeroExit,
    Timeout,
    SpawnError,
}

/// What happened when the entrypoint ran. `exit_code` is present exactly for
/// `ok` and `nonzero_exit`; signal deaths map to `128 + signal`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExecReport {
    pub status: ExecStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exit_code: Option<i32>,
    pub stdout_tail: Vec<String>,
    pub stderr_tail: Vec<String>,
    pub missing_dependencies: Vec<MissingDependency>,
    pub duration: Duration,
    /// The argv actually spawned, recorded for comparability across runs.
    pub command: Vec<String>,
    pub entrypoint: String,
    pub network_allowed: bool,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("entrypoint '{0}' does not exist inside the tree directory")]
    MissingEntrypoint(String),
    #[error("command template must contain {{entrypoint}}")]
    BadTemplate,
    #[error("io failure: {0}")]
    Io(#[from] std::io::Error),
}

fn tail(lines: Vec<String>) -> Vec<String> {
    if lines.len() > OUTPUT_TAIL_LINES {
        lines[lines.len() - OUTPUT_TAIL_LINES..].to_vec()
    } else {
        lines
    }
}

fn reader_thread<R: Read + Send + 'static>(
    source: R,
) -> std::thread::JoinHandle<Vec<String>> {
    std::thread::spawn(move || {
        let mut buffer = String::new();
        let mut source = source;
        // Read errors just end capture; a killed child closes the pipe.
        let _ = source.read_to_string(&mut buffer);
        buffer.lines().map(str::to_string).collect()
    })
}

/// Spawns the templated command on `entrypoint` inside `tree_dir`, with a
/// filtered environment and a hard wall-clock timeout. Spawn problems are
/// reported in-band as `spawn_error`, not raised; only precondition
/// violations (missing entrypoint, bad template) are errors.
pub fn exec_check(
    tree_dir: &Path,
    entrypoint: &str,
    config: &SandboxConfig,
) -> Result<ExecReport, HarnessError> {
    if !config.command_template.contains("{entrypoint}") {
        return Err(HarnessError::BadTemplate);
    }
    if !tree_dir.join(entrypoint).is_file() {
        return Err(HarnessError::MissingEntrypoint(entrypoint.to_string()));
    }

    let workdir = config.workdir.clone().unwrap_or_else(|| tree_dir.to_path_buf());
    let workdir_text = workdir.to_string_lossy().to_string();
    let argv: Vec<String> = config
        .command_template
        .split_whitespace()
        .map(|token| {
            token
                .replace("{entrypoint}", entrypoint)
                .replace("{workdir}", &workdir_text)
        })
        .collect();

    let env: BTreeMap<String, String> = config
        .env_allowlist
        .iter()
        .filter_map(|name| std::env::var(name).ok().map(|value| (name.clone(), value)))
        .collect();

    let started = Instant::now();
    let mut command = Command::new(&argv[0]);
    command
        .args(&argv[1..])
        .current_dir(&workdir)
        .env_clear()
        .envs(&env)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped());
    // Own process group, so a timeout kill reaches grandchildren that would
    // otherwise keep the output pipes open past the deadline.
    #[cfg(unix)]
    {
        use std::os::unix::process::CommandExt;
        command.process_group(0);
    }
    let spawned = command.spawn();

    let mut child = match spawned {
        Ok(child) => child,
        Err(error) => {
            return Ok(ExecReport {
                status: ExecStatus::SpawnError,
                exit_code: None,
                stdout_tail: Vec::new(),
                stderr_tail: vec![error.to_string()],
                missing_dependencies: Vec::new(),
                duration: started.elapsed(),
                command: argv,
                entrypoint: entrypoint.to_string(),
                network_allowed: config.network_allowed,
            });
        }
    };

    let stdout_handle = reader_thread(child.stdout.take().expect("stdout piped"));
    let stderr_handle = reader_thread(child.stderr.take().expect("stderr piped"));

    let (status, exit_code) = match child.wait_timeout(config.timeout)? {
        Some(exit) => {
            let code = exit.code().or_else(|| {
                #[cfg(unix)]
                {
                    use std::os::unix::process::ExitStatusExt;
                    exit.signal().map(|signal| 128 + signal)
                }
                #[cfg(not(unix))]
                {
                    None
                }
            });
            match code {
                Some(0) => (ExecStatus::Ok, Some(0)),
                Some(nonzero) => (ExecStatus::NonzeroExit, Some(nonzero)),
                None => (ExecStatus::NonzeroExit, Some(-1)),
            }
        }
        None => {
            #[cfg(unix)]
            unsafe {
                libc::kill(-(child.id() as i32), libc::SIGKILL);
            }
            let _ = child.kill();
            let _ = child.wait();
            (ExecStatus::Timeout, None)
        }
    };

    let stdout_tail = tail(stdout_handle.join().unwrap_or_default());
    let stderr_tail = tail(stderr_handle.join().unwrap_or_default());

    Ok(ExecReport {
        status,
        exit_code,
        stdout_tail,
        stderr_tail,
        missing_dependencies: Vec::new(),
        duration: started.elapsed(),
        command: argv,
        entrypoint: entrypoint.to_string(),
        network_allowed: config.network_allowed,
    })
}

/// Writes the report beside the project as `EXEC_REPORT.json`.
pub fn write_exec_report(report: &ExecReport, dir: &Path) -> Result<PathBuf, HarnessError> {
    let path = dir.join(EXEC_REPORT_FILE);
    let mut body = serde_json::to_string_pretty(report).expect("report serializes");
    body.push('\n');
    std::fs::write(&path, body)?;
    Ok(path)
}
