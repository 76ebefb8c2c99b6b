mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{resolve_config, ConfigError, FlagOverrides};

#[derive(Parser)]
#[command(
    name = "ethosforge",
    version,
    about = "Role-specialized LLM debates over project descriptions, plus the full evaluation \
             pipeline: code assembly, dependency diagnosis, corpus metrics, ethics coverage, \
             hierarchical clustering, thematic analysis, and baseline comparison."
)]
struct Cli {
    /// JSON configuration file (flags > env > file > built-ins).
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Root directory for run artifacts.
    #[arg(long, global = true)]
    output_root: Option<PathBuf>,

    /// Backend: "remote" or "scripted:<response file>".
    #[arg(long, global = true)]
    backend: Option<String>,

    /// Seed for clustering and sampling determinism.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Log progress events (rounds, agents, token usage).
    #[arg(short, long, global = true)]
    verbose: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one multi-agent debate over a project description.
    Run {
        /// Project description file (.txt body or .json structure).
        #[arg(long)]
        pd: PathBuf,
        /// Team file: JSON list of agents.
        #[arg(long)]
        team: PathBuf,
        /// Rounds per debate (overrides config).
        #[arg(long)]
        rounds: Option<u32>,
        /// Project index used in the run label.
        #[arg(long, default_value_t = 1)]
        pd_index: u32,
        /// Replication index used in the run label.
        #[arg(long, default_value_t = 1)]
        replication: u32,
    },
    /// Run the single-prompt baseline condition (no roles, no rounds).
    Baseline {
        #[arg(long)]
        pd: PathBuf,
        #[arg(long, default_value_t = 1)]
        pd_index: u32,
    },
    /// Run N independent replications of the same debate.
    Replicate {
        #[arg(long)]
        pd: PathBuf,
        #[arg(long)]
        team: PathBuf,
        /// Number of replications (overrides config).
        #[arg(short = 'n', long)]
        replications: Option<u32>,
        #[arg(long)]
        rounds: Option<u32>,
        #[arg(long, default_value_t = 1)]
        pd_index: u32,
        /// Run replications concurrently (remote backend only).
        #[arg(long)]
        parallel: bool,
    },
    /// Continue a completed debate for more rounds.
    Resume {
        #[arg(long)]
        transcript: PathBuf,
        /// Additional rounds to run.
        #[arg(long)]
        rounds: u32,
    },
    /// Extract code blocks from transcripts and assemble a project tree.
    Extract {
        /// Transcript files, in debate order.
        #[arg(long, required = true, num_args = 1..)]
        transcript: Vec<PathBuf>,
        /// Output directory (default: "project" beside the first transcript).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Merge strategy: last-wins, first-wins, or error-on-conflict.
        #[arg(long, default_value = "last-wins")]
        strategy: String,
        /// Extra deprecated-name normalization table (key=value lines).
        #[arg(long)]
        normalize: Option<PathBuf>,
    },
    /// Corpus statistics (lines, code lines, words) for transcripts.
    Analyze {
        #[arg(long, required = true, num_args = 1..)]
        transcript: Vec<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ethics-principle coverage of transcripts.
    Coverage {
        #[arg(long, required = true, num_args = 1..)]
        transcript: Vec<PathBuf>,
        /// Lexicon file ("principle: phrase" lines; default: built-in seed).
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Descending hierarchical classification over appended transcripts.
    Cluster {
        #[arg(long, required = true, num_args = 1..)]
        transcript: Vec<PathBuf>,
        #[arg(long)]
        segment_size: Option<usize>,
        #[arg(long)]
        min_freq: Option<u32>,
        #[arg(long)]
        max_classes: Option<u32>,
        #[arg(long)]
        min_class_size: Option<usize>,
        /// Stopword file (one word per line; default: built-in list).
        #[arg(long)]
        stopwords: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// LLM-backed thematic analysis of one transcript.
    Themes {
        #[arg(long)]
        transcript: PathBuf,
        /// Analyst custom instruction file (system prompt).
        #[arg(long)]
        instruction: PathBuf,
        /// Header prompt file prepended to the transcript text.
        #[arg(long)]
        header: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Merge partial thematic analyses into one.
    MergeThemes {
        /// Thematic-analysis JSON files produced by `themes`.
        #[arg(long, required = true, num_args = 1..)]
        analysis: Vec<PathBuf>,
        #[arg(long)]
        instruction: PathBuf,
        /// Merge header prompt file.
        #[arg(long)]
        merge_prompt: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare debate transcripts against a baseline transcript.
    Compare {
        #[arg(long, required = true, num_args = 1..)]
        mas: Vec<PathBuf>,
        #[arg(long)]
        baseline: PathBuf,
        #[arg(long)]
        lexicon: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run an assembled project and report runnability.
    ExecCheck {
        /// Assembled project directory (output of `extract`).
        #[arg(long)]
        dir: PathBuf,
        /// Entrypoint relative to the directory (default: main.<ext>, else
        /// the single file).
        #[arg(long)]
        entrypoint: Option<String>,
        /// Command template; must contain {entrypoint}.
        #[arg(long, default_value = "python3 {entrypoint}")]
        template: String,
        #[arg(long, default_value_t = 60)]
        timeout_secs: u64,
        /// Environment variables passed through to the child.
        #[arg(long)]
        allow_env: Vec<String>,
        /// Record that network access is permitted (advisory).
        #[arg(long)]
        network: bool,
    },
}

/// Operational failures exit 1; usage/configuration failures exit 2.
pub enum CliError {
    Usage(String),
    Operational(anyhow::Error),
}

impl From<ConfigError> for CliError {
    fn from(error: ConfigError) -> Self {
        CliError::Usage(error.to_string())
    }
}

impl From<anyhow::Error> for CliError {
    fn from(error: anyhow::Error) -> Self {
        CliError::Operational(error)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();

    let level = if cli.verbose { "info" } else { "warn" };
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env()
                .unwrap_or_else(|_| tracing_subscriber::EnvFilter::new(level)),
        )
        .with_writer(std::io::stderr)
        .init();

    let flags = FlagOverrides {
        config_file: cli.config.clone(),
        output_root: cli.output_root.clone(),
        backend: cli.backend.clone(),
        seed: cli.seed,
        rounds: match &cli.command {
            Command::Run { rounds, .. } | Command::Replicate { rounds, .. } => *rounds,
            _ => None,
        },
        replications: match &cli.command {
            Command::Replicate { replications, .. } => *replications,
            _ => None,
        },
        model: None,
        endpoint: None,
    };

    let outcome = resolve_config(&flags)
        .map_err(CliError::from)
        .and_then(|config| commands::dispatch(cli.command, config));

    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(message)) => {
            eprintln!("error: {message}");
            ExitCode::from(2)
        }
        Err(CliError::Operational(error)) => {
            eprintln!("error: {error:#}");
            ExitCode::from(1)
        }
    }
}
