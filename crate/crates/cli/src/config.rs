use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use ethosforge_core::{ContextBudget, SectionMarkers, TeamConfig};

/// Key that failed resolution, reported as a usage error (exit 2).
#[derive(Debug)]
pub struct ConfigError {
    pub key: String,
    pub detail: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "configuration error ({}): {}", self.key, self.detail)
    }
}

impl std::error::Error for ConfigError {}

fn config_error(key: &str, detail: impl Into<String>) -> ConfigError {
    ConfigError { key: key.to_string(), detail: detail.into() }
}

/// Backend selector: the remote adapter or a scripted response file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum BackendChoice {
    Remote,
    Scripted(PathBuf),
}

impl BackendChoice {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        if text == "remote" {
            return Ok(BackendChoice::Remote);
        }
        if let Some(path) = text.strip_prefix("scripted:") {
            if path.is_empty() {
                return Err(config_error("backend", "scripted backend needs a script file path"));
            }
            return Ok(BackendChoice::Scripted(PathBuf::from(path)));
        }
        Err(config_error(
            "backend",
            format!("'{text}' is not a backend; use 'remote' or 'scripted:<file>'"),
        ))
    }
}

/// Optional file-level configuration; every field has a built-in default.
#[derive(Debug, Clone, Default, Deserialize)]
pub struct ConfigFile {
    pub endpoint_url: Option<String>,
    pub model_name: Option<String>,
    pub temperature: Option<f64>,
    pub max_output_tokens: Option<u32>,
    pub timeout_secs: Option<u64>,
    pub output_root: Option<PathBuf>,
    pub backend: Option<String>,
    pub rounds: Option<u32>,
    pub replications: Option<u32>,
    pub context_budget_tokens: Option<usize>,
    pub segment_size: Option<usize>,
    pub min_freq: Option<u32>,
    pub max_classes: Option<u32>,
    pub min_class_size: Option<usize>,
    pub seed: Option<u64>,
    pub pacing_ms: Option<u64>,
}

/// Fully materialized configuration. Resolution order: flags > environment >
/// config file > built-ins. The resolved form is echoed into every run
/// directory as `config.lock`; the API credential is deliberately not part
/// of it.
#[derive(Debug, Clone, Serialize)]
pub struct CliConfig {
    pub endpoint_url: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_output_tokens: u32,
    pub timeout_secs: u64,
    pub output_root: PathBuf,
    pub backend: BackendChoice,
    pub rounds: u32,
    pub replications: u32,
    pub context_budget_tokens: usize,
    pub segment_size: usize,
    pub min_freq: u32,
    pub max_classes: u32,
    pub min_class_size: usize,
    pub seed: u64,
    pub pacing_ms: u64,
}

/// Flag-level overrides collected from the command line.
#[derive(Debug, Clone, Default)]
pub struct FlagOverrides {
    pub config_file: Option<PathBuf>,
    pub output_root: Option<PathBuf>,
    pub backend: Option<String>,
    pub seed: Option<u64>,
    pub rounds: Option<u32>,
    pub replications: Option<u32>,
    pub model: Option<String>,
    pub endpoint: Option<String>,
}

fn env_var(name: &str) -> Option<String> {
    std::env::var(name).ok().filter(|v| !v.is_empty())
}

pub fn resolve_config(flags: &FlagOverrides) -> Result<CliConfig, ConfigError> {
    let file: ConfigFile = match &flags.config_file {
        Some(path) => {
            let body = std::fs::read_to_string(path)
                .map_err(|e| config_error("config", format!("{}: {e}", path.display())))?;
            serde_json::from_str(&body)
                .map_err(|e| config_error("config", format!("{}: {e}", path.display())))?
        }
        None => ConfigFile::default(),
    };

    let backend_text = flags
        .backend
        .clone()
        .or_else(|| env_var("ETHOSFORGE_BACKEND"))
        .or_else(|| file.backend.clone())
        .unwrap_or_else(|| "remote".to_string());
    let backend = BackendChoice::parse(&backend_text)?;

    let config = CliConfig {
        endpoint_url: flags
            .endpoint
            .clone()
            .or_else(|| env_var("ETHOSFORGE_ENDPOINT"))
            .or(file.endpoint_url)
            .unwrap_or_else(|| "https://api.openai.com/v1/chat/completions".to_string()),
        model_name: flags
            .model
            .clone()
            .or_else(|| env_var("ETHOSFORGE_MODEL"))
            .or(file.model_name)
            .unwrap_or_else(|| "gpt-4o-mini".to_string()),
        temperature: file.temperature.unwrap_or(0.7),
        max_output_tokens: file.max_output_tokens.unwrap_or(2048),
        timeout_secs: file.timeout_secs.unwrap_or(120),
        output_root: flags
            .output_root
            .clone()
            .or_else(|| env_var("ETHOSFORGE_OUTPUT_ROOT").map(PathBuf::from))
            .or(file.output_root)
            .unwrap_or_else(|| PathBuf::from("runs")),
        backend,
        rounds: flags.rounds.or(file.rounds).unwrap_or(5),
        replications: flags.replications.or(file.replications).unwrap_or(3),
        context_budget_tokens: file.context_budget_tokens.unwrap_or(120_000),
        segment_size: file.segment_size.unwrap_or(40),
        min_freq: file.min_freq.unwrap_or(3),
        max_classes: file.max_classes.unwrap_or(5),
        min_class_size: file.min_class_size.unwrap_or(2),
        seed: flags.seed.or(file.seed).unwrap_or(0),
        pacing_ms: file.pacing_ms.unwrap_or(0),
    };

    if config.rounds < 1 {
        return Err(config_error("rounds", "must be >= 1"));
    }
    if config.replications < 1 {
        return Err(config_error("replications", "must be >= 1"));
    }
    Ok(config)
}

impl CliConfig {
    /// Credentialed runs need the key before any network activity.
    pub fn require_credential(&self) -> Result<(), ConfigError> {
        if self.backend == BackendChoice::Remote
            && env_var(ethosforge_core::API_KEY_ENV).is_none()
        {
            return Err(config_error(
                ethosforge_core::API_KEY_ENV,
                "remote backend selected but no credential is set",
            ));
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs(self.timeout_secs)
    }

    pub fn chat_params(&self) -> ethosforge_core::ChatParams {
        ethosforge_core::ChatParams {
            model_name: self.model_name.clone(),
            temperature: self.temperature,
            max_output_tokens: self.max_output_tokens,
            random_seed: (self.seed != 0).then_some(self.seed),
        }
    }

    /// Echoes the resolved configuration into `dir/config.lock`.
    pub fn write_lock(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let mut body = serde_json::to_string_pretty(self).expect("config serializes");
        body.push('\n');
        std::fs::write(dir.join("config.lock"), body)
    }
}

/// Team file: a JSON list of agents, validated against the team invariants.
pub fn load_team(path: &Path, config: &CliConfig) -> Result<TeamConfig, ConfigError> {
    let body = std::fs::read_to_string(path)
        .map_err(|e| config_error("team", format!("{}: {e}", path.display())))?;
    let agents: Vec<ethosforge_core::AgentSpec> = serde_json::from_str(&body)
        .map_err(|e| config_error("team", format!("{}: {e}", path.display())))?;
    let mut team = TeamConfig::new(agents);
    team.round_count = config.rounds;
    team.replication_count = config.replications;
    team.context_budget = ContextBudget::strict(config.context_budget_tokens);
    team.section_markers = SectionMarkers::default();
    team.validate()
        .map_err(|e| config_error("team", e.to_string()))?;
    Ok(team)
}

/// Project description: a `.json` file deserializes the full structure; any
/// other file is the raw body, with the id taken from the file stem and the
/// title from the first non-empty line.
pub fn load_project(path: &Path) -> Result<ethosforge_core::ProjectDescription, ConfigError> {
    let body = std::fs::read_to_string(path)
        .map_err(|e| config_error("pd", format!("{}: {e}", path.display())))?;
    if path.extension().is_some_and(|ext| ext == "json") {
        return serde_json::from_str(&body)
            .map_err(|e| config_error("pd", format!("{}: {e}", path.display())));
    }
    let pd_id = path
        .file_stem()
        .map(|stem| stem.to_string_lossy().to_string())
        .unwrap_or_else(|| "pd".to_string());
    let title = body
        .lines()
        .find(|line| !line.trim().is_empty())
        .unwrap_or("")
        .chars()
        .take(80)
        .collect();
    if body.trim().is_empty() {
        return Err(config_error("pd", format!("{} is empty", path.display())));
    }
    Ok(ethosforge_core::ProjectDescription {
        pd_id,
        title,
        body,
        incident_ref: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_config_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("config.json");
        std::fs::write(&path, r#"{"rounds": 5, "model_name": "file-model"}"#).unwrap();
        let flags = FlagOverrides {
            config_file: Some(path),
            rounds: Some(7),
            ..FlagOverrides::default()
        };
        let config = resolve_config(&flags).unwrap();
        assert_eq!(config.rounds, 7);
        assert_eq!(config.model_name, "file-model");
    }

    #[test]
    fn builtins_fill_the_gaps() {
        let config = resolve_config(&FlagOverrides::default()).unwrap();
        assert_eq!(config.rounds, 5);
        assert_eq!(config.replications, 3);
        assert_eq!(config.segment_size, 40);
        assert_eq!(config.max_classes, 5);
    }

    #[test]
    fn scripted_backend_needs_no_credential() {
        let flags = FlagOverrides {
            backend: Some("scripted:responses.txt".into()),
            ..FlagOverrides::default()
        };
        let config = resolve_config(&flags).unwrap();
        assert!(config.require_credential().is_ok());
    }

    #[test]
    fn bad_backend_string_is_a_config_error() {
        let flags = FlagOverrides {
            backend: Some("quantum".into()),
            ..FlagOverrides::default()
        };
        assert!(resolve_config(&flags).is_err());
    }

    #[test]
    fn plain_text_project_derives_id_and_title() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pd1.txt");
        std::fs::write(&path, "Develop a tool.\nMore detail.\n").unwrap();
        let pd = load_project(&path).unwrap();
        assert_eq!(pd.pd_id, "pd1");
        assert_eq!(pd.title, "Develop a tool.");
        assert!(pd.body.contains("More detail."));
    }

    #[test]
    fn lock_file_never_contains_credentials(){
        let dir = tempfile::tempdir().unwrap();
        std::env::set_var(ethosforge_core::API_KEY_ENV, "super-secret-key");
        let config = resolve_config(&FlagOverrides::default()).unwrap();
        config.write_lock(dir.path()).unwrap();
        let lock = std::fs::read_to_string(dir.path().join("config.lock")).unwrap();
        assert!(!lock.contains("super-secret-key"));
        std::env::remove_var(ethosforge_core::API_KEY_ENV);
    }
}
