//! Config-driven pipeline around the `jointrom` reduced-order modelling library.
//!
//! Every stage writes its artifacts into its own directory under the output root
//! together with a `stage.toml` record of input and content hashes. A stage is
//! rebuilt only when its configuration or an upstream artifact changed.

pub mod artifacts;
pub mod config;
pub mod output;
pub mod pipeline;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use artifacts::{StageRecord, Unit};
pub use config::PipelineConfig;
pub use pipeline::{Outcome, Pipeline, RunSummary, Stage};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error("solver failure: {0}")]
    Solver(#[from] jointrom::Error),
    #[error("stale artifacts: {0}")]
    Stale(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Solver(jointrom::Error::Io(_)) | CliError::Io(_) | CliError::Csv(_) => 1,
            CliError::Solver(_) => 3,
            CliError::Stale(_) => 4,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "jointrom", version, about = "Reduced-order models of thin panels with frictional clamping")]
pub struct Cli {
    /// Pipeline configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Comma-separated stages to run (default: all except fom-reference).
    #[arg(long, global = true, value_delimiter = ',')]
    pub stages: Vec<Stage>,
    /// Campaign worker threads (overrides the config; 0 = all cores).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    /// Output directory (overrides the config).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate the benchmark mesh.
    Mesh,
    /// Reduce the thin-walled and support components.
    Cms,
    /// Scale the single-mode loads of the condensation campaign.
    Scale,
    /// Solve the nonlinear static load cases.
    Campaign,
    /// Fit the reduced geometric force coefficients.
    Regress,
    /// Assemble the reduced system.
    Assemble,
    /// Quasi-static modal analysis of the reduced system.
    Qsma,
    /// Pulse responses of the reduced system.
    Transient,
    /// Full-order reference runs.
    FomReference,
    /// Summarize all artifacts.
    Report,
    /// Run the stages given by `--stages`.
    Run,
    /// Print the default configuration.
    DefaultConfig,
}

impl Command {
    fn stage(&self) -> Option<Stage> {
        Some(match self {
            Command::Mesh => Stage::Mesh,
            Command::Cms => Stage::Cms,
            Command::Scale => Stage::Scale,
            Command::Campaign => Stage::Campaign,
            Command::Regress => Stage::Regress,
            Command::Assemble => Stage::Assemble,
            Command::Qsma => Stage::Qsma,
            Command::Transient => Stage::Transient,
            Command::FomReference => Stage::FomReference,
            Command::Report => Stage::Report,
            Command::Run | Command::DefaultConfig => return None,
        })
    }
}

/// Default configuration as annotated TOML.
pub fn default_config_text() -> &'static str {
    include_str!("default_config.toml")
}

/// Executes a parsed command line; progress goes to `log`.
pub fn execute(cli: Cli, log: Box<dyn FnMut(&str)>) -> Result<RunSummary, CliError> {
    if matches!(cli.command, Some(Command::DefaultConfig)) {
        print!("{}", default_config_text());
        return Ok(RunSummary::default());
    }
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path).map_err(CliError::Config)?,
        None => PipelineConfig::default(),
    };
    if let Some(out) = cli.out {
        cfg.output.dir = out;
    }
    if let Some(w) = cli.workers {
        cfg.output.workers = w;
    }
    let stages: Vec<Stage> = match cli.command.as_ref().and_then(Command::stage) {
        Some(s) => vec![s],
        None if cli.stages.is_empty() => Stage::DEFAULT.to_vec(),
        None => cli.stages,
    };
    let workers = cfg.workers();
    let out = cfg.output.dir.clone();
    let mut p = Pipeline::new(cfg, out, workers);
    p.log = log;
    p.run(&stages)
}
