use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;

/// Exit status for invalid configuration or arguments.
const EXIT_CONFIG: u8 = 2;
/// Exit status for failures while running.
const EXIT_RUNTIME: u8 = 3;

#[derive(Parser)]
#[command(name = "unlearn-lab", version, about = "Parameter-perturbation machine unlearning lab")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand. Flags override the config file, which
/// overrides built-in defaults.
#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Experiment config (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Fraction of the training set to unlearn.
    #[arg(long, global = true)]
    pub ratio: Option<f64>,
    /// Strategy such as `top-k:45`, `random-k:0.05`, `mixed:45:0.05`,
    /// `eu-k:2`, `cf-k:1` or `retrain`. Repeatable for `experiment`.
    #[arg(long, global = true, value_name = "NAME")]
    pub strategy: Vec<String>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Concurrent strategy runs per cell.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Train a source model on the configured dataset.
    Train,
    /// Run one strategy on one (ratio, seed) split.
    Unlearn {
        /// Source checkpoint; trained from the config when omitted.
        #[arg(long, value_name = "PATH")]
        model: Option<PathBuf>,
    },
    /// Compute the metric row for a finished `unlearn` run.
    Metrics {
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
        /// Directory written by `unlearn`.
        #[arg(long, value_name = "DIR")]
        run: PathBuf,
        /// Directory of a retrain run used as the reference.
        #[arg(long, value_name = "DIR")]
        retrain: Option<PathBuf>,
    },
    /// Train the degree generator against a finished `unlearn` run.
    Degree {
        #[arg(long, value_name = "PATH")]
        model: PathBuf,
        #[arg(long, value_name = "DIR")]
        run: PathBuf,
    },
    /// Run every strategy on every (ratio, seed) cell.
    Experiment,
    /// Write plot-ready CSVs from an experiment directory.
    EmitPlots {
        /// Experiment output directory; defaults to the config's `out_dir`.
        #[arg(long, value_name = "DIR")]
        run: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Train => commands::train(&cli.common),
        Command::Unlearn { model } => commands::unlearn(&cli.common, model.as_deref()),
        Command::Metrics {
            model,
            run,
            retrain,
        } => commands::metrics(&cli.common, &model, &run, retrain.as_deref()),
        Command::Degree { model, run } => commands::degree(&cli.common, &model, &run),
        Command::Experiment => commands::experiment(&cli.common),
        Command::EmitPlots { run } => commands::emit_plots(&cli.common, run.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    let config = e.chain().any(|c| {
        c.downcast_ref::<commands::ConfigError>().is_some()
            || matches!(
                c.downcast_ref::<unlearn_core::Error>(),
                Some(unlearn_core::Error::Config(_))
            )
    });
    if config {
        EXIT_CONFIG
    } else {
        EXIT_RUNTIME
    }
}
