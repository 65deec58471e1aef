//! Command-line pipeline: ingest, score, fit, forecast, rank, evaluate.

pub mod commands;
pub mod config;
pub mod report;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

pub use commands::*;
pub use config::PipelineConfig;
pub use report::Report;

use crate::error::{Error, Result};

pub const API_KEY_ENV: &str = "TOXICITY_API_KEY";
pub const DEFAULT_CACHE_FILE: &str = "toxicity_cache.tsv";

#[derive(Debug, Parser)]
#[command(name = "prosocial", version, about = "Prosocial conversation analytics")]
pub struct Cli {
    /// TOML configuration file; relative paths inside it resolve against its directory.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads for scoring and feature extraction.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
    /// Score toxicity with the local fallback lexicon only.
    #[arg(long, global = true)]
    pub offline: bool,
    /// Configuration override, `dotted.key=value`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TrainStage {
    Classifiers,
    Forecasters,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build, filter and partition conversations from the raw dump.
    Ingest,
    /// Compute the metric panel of every conversation.
    Score,
    /// Fit the trajectory model on the scored panels.
    FitTrajectory,
    /// Train the comment classifiers or the forecasters.
    Train {
        #[arg(long, value_enum)]
        stage: TrainStage,
    },
    /// Forecast trajectories for every conversation.
    Forecast,
    /// Pairwise ranking of judged TLC pairs.
    Rank,
    /// Write the evaluation report.
    Evaluate,
    /// Generate a synthetic corpus with a planted prosociality factor.
    Synth {
        /// Destination directory (defaults to the output directory).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        conversations: Option<usize>,
    },
}

/// Loads the configuration and applies the command-line flags and
/// environment on top of it.
pub fn resolve_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = PipelineConfig::load(cli.config.as_deref(), &cli.overrides)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(jobs) = cli.jobs {
        cfg.jobs = Some(jobs);
    }
    if cli.offline {
        cfg.toxicity.offline = true;
    }
    if cfg.toxicity.api_key.is_none() {
        cfg.toxicity.api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
    }
    if cfg.toxicity.cache_path.is_none() {
        cfg.toxicity.cache_path = Some(cfg.output_dir.join(DEFAULT_CACHE_FILE));
    }
    if cfg.jobs == Some(0) {
        return Err(Error::Config("jobs must be at least 1".into()));
    }
    Ok(cfg)
}

pub fn run(cli: Cli) -> Result<()> {
    let cfg = resolve_config(&cli)?;
    if let Some(jobs) = cfg.jobs {
        // fails only if a pool was already installed in this process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    if let Command::Synth { out, conversations } = &cli.command {
        let dir = out.clone().unwrap_or_else(|| cfg.output_dir.clone());
        return cmd_synth(&cfg, &dir, conversations.unwrap_or(cfg.synth.conversations));
    }
    cfg.validate()?;
    if !cfg.toxicity.offline && cfg.toxicity.api_key.is_none() {
        return Err(Error::Config(format!(
            "no toxicity API key: set {API_KEY_ENV} or toxicity.api_key, or pass --offline"
        )));
    }
    match cli.command {
        Command::Ingest => cmd_ingest(&cfg),
        Command::Score => cmd_score(&cfg),
        Command::FitTrajectory => cmd_fit_trajectory(&cfg),
        Command::Train { stage: TrainStage::Classifiers } => cmd_train_classifiers(&cfg),
        Command::Train { stage: TrainStage::Forecasters } => cmd_train_forecasters(&cfg),
        Command::Forecast => cmd_forecast(&cfg),
        Command::Rank => cmd_rank(&cfg),
        Command::Evaluate => cmd_evaluate(&cfg),
        Command::Synth { .. } => unreachable!("handled above"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_config() {
        let cli = Cli::try_parse_from([
            "prosocial", "score", "--seed", "7", "--offline", "--set", "gbt.max_depth=3", "--jobs", "2",
        ])
        .unwrap();
        let cfg = resolve_config(&cli).unwrap();
        assert_eq!(cfg.seed, 7);
        assert!(cfg.toxicity.offline);
        assert_eq!(cfg.gbt.max_depth, 3);
        assert_eq!(cfg.jobs, Some(2));
        assert_eq!(cfg.toxicity.cache_path, Some(PathBuf::from("out").join(DEFAULT_CACHE_FILE)));
    }

    #[test]
    fn train_requires_stage() {
        assert!(Cli::try_parse_from(["prosocial", "train"]).is_err());
        let cli = Cli::try_parse_from(["prosocial", "train", "--stage", "forecasters"]).unwrap();
        assert!(matches!(cli.command, Command::Train { stage: TrainStage::Forecasters }));
    }
}
