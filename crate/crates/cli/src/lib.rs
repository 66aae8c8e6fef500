//! Command-line front end for the roadmap toolkit. The binary reads a TOML
//! scenario file, runs one stage of the pipeline, and writes artifacts under
//! the scenario's output directory. All randomness flows from the scenario
//! seed, so reruns of the same file produce byte-identical artifacts
//! regardless of worker count.

pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;

pub use config::{validate_config, ScenarioConfig};
pub use error::{CliError, Result};

use clap::{Parser, Subcommand};
use std::path::PathBuf;

#[derive(Parser, Debug)]
#[command(name = "vrm", version, about = "Vision-only roadmap planning toolkit")]
pub struct Cli {
    /// Cap the worker thread pool (defaults to all cores). Artifacts do not
    /// depend on this.
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sample poses and write the rendered dataset.
    Sample { config: PathBuf },
    /// Build the roadmap and write it as JSON.
    Build { config: PathBuf },
    /// Plan between two configurations on the (possibly cached) roadmap.
    Plan {
        config: PathBuf,
        /// Start configuration, comma-separated in native units
        /// (radians for arm joints, pixels for disc position).
        #[arg(long)]
        start: String,
        /// Goal configuration, same format as --start.
        #[arg(long)]
        goal: String,
    },
    /// Sweep metric x planner combinations and write quality statistics.
    Eval { config: PathBuf },
    /// Embed the sampled poses with Isomap and write coordinates/residuals.
    Embed { config: PathBuf },
    /// Simulate planning against the configured moving-obstacle track.
    Dynamic {
        config: PathBuf,
        #[arg(long)]
        start: String,
        #[arg(long)]
        goal: String,
    },
}

impl Command {
    fn config_path(&self) -> &PathBuf {
        match self {
            Command::Sample { config }
            | Command::Build { config }
            | Command::Eval { config }
            | Command::Embed { config } => config,
            Command::Plan { config, .. } | Command::Dynamic { config, .. } => config,
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    if let Some(workers) = cli.workers {
        if workers == 0 {
            return Err(CliError::Config(vec!["--workers must be positive".into()]));
        }
        // First initialization wins; a later call (e.g. in tests sharing a
        // process) is a no-op, which is fine because results never depend on
        // the pool size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(workers).build_global();
    }
    let cfg = validate_config(cli.command.config_path())?;
    match &cli.command {
        Command::Sample { .. } => commands::cmd_sample(&cfg),
        Command::Build { .. } => commands::cmd_build(&cfg),
        Command::Plan { start, goal, .. } => commands::cmd_plan(&cfg, start, goal),
        Command::Eval { .. } => commands::cmd_eval(&cfg),
        Command::Embed { .. } => commands::cmd_embed(&cfg),
        Command::Dynamic { start, goal, .. } => commands::cmd_dynamic(&cfg, start, goal),
    }
}
