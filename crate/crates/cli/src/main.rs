use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod output;

#[derive(Parser, Debug)]
#[command(name = "ecorl", version, about = "Reset-free RL experiments on compositional gridworlds")]
pub struct Cli {
    /// Experiment seed. Overrides the config file.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory. Overrides `output_dir` in the config file.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Replace existing outputs instead of refusing to run.
    #[arg(long, global = true)]
    pub overwrite: bool,
    #[command(subcommand)]
    pub command: Command,
}

/// Environment selection for the diagnostic commands. Without `--config`
/// the task must be given; flags override whatever the config says.
#[derive(Args, Debug, Clone)]
pub struct EnvArgs {
    #[arg(long)]
    pub task: Option<String>,
    /// Variant of the config to take the environment from (default: first).
    #[arg(long)]
    pub variant: Option<String>,
    #[arg(long)]
    pub dynamism_p: Option<f64>,
    /// Enable environment shaping with the default schedule.
    #[arg(long)]
    pub shaped: bool,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Train every variant of the experiment config.
    Train {
        /// Override the number of epochs of every variant.
        #[arg(long)]
        epochs: Option<usize>,
    },
    /// Solve rate of a saved checkpoint on the validation tasks.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        env: EnvArgs,
    },
    /// First-reward hitting time of a uniform random policy.
    HittingTime {
        #[command(flatten)]
        env: EnvArgs,
        #[arg(long, default_value_t = 200)]
        runs: usize,
        #[arg(long, default_value_t = ecorl::harness::HITTING_TIME_CAP)]
        cap: u64,
    },
    /// Marginal state entropy of a uniform random policy.
    Entropy {
        #[command(flatten)]
        env: EnvArgs,
        #[arg(long, default_value_t = 100_000)]
        steps: u64,
        #[arg(long, default_value_t = 3)]
        runs: usize,
    },
    /// Visitation heatmap and trajectory of one lifetime.
    Heatmap {
        #[command(flatten)]
        env: EnvArgs,
        #[arg(long, default_value_t = 10_000)]
        steps: u64,
        /// Follow this checkpoint greedily instead of acting at random.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    Theory {
        #[command(subcommand)]
        command: TheoryCommand,
    },
    /// Expand the config over a grid of dynamism probabilities or learning
    /// rates and train every point.
    Sweep {
        #[arg(long, value_delimiter = ',', conflicts_with = "lr_grid", required_unless_present = "lr_grid")]
        p_grid: Vec<f64>,
        #[arg(long, value_delimiter = ',')]
        lr_grid: Vec<f64>,
        /// Print the expanded config and exit.
        #[arg(long)]
        dry_run: bool,
        #[arg(long)]
        epochs: Option<usize>,
    },
}

#[derive(Subcommand, Debug)]
pub enum TheoryCommand {
    /// Fuzz the dynamism theorem and check the bound calculators.
    Verify {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 6)]
        max_states: usize,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
