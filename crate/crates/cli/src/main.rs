//! `ensemble-teachers`: theory, simulation, sweeps, oracle validation and
//! figure data for on-line learning from ensemble teachers.

mod commands;
mod config;
mod error;
mod figures;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{load_config, ExperimentConfig, Mode, Settings};
use crate::error::CliError;
use crate::figures::FigureTag;

#[derive(Parser)]
#[command(name = "ensemble-teachers", version, about)]
struct Cli {
    /// Worker threads for sweep points and simulation seeds.
    #[arg(long, env = "ENSEMBLE_WORKERS", global = true)]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// TOML config file, or a JSON run manifest to replay.
    #[arg(long)]
    config: Option<PathBuf>,

    #[command(flatten)]
    settings: Settings,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the order-parameter ODEs.
    Theory(RunArgs),
    /// Run finite-N simulations, one row per seed and measurement.
    Simulate(RunArgs),
    /// Theory next to the seed-averaged simulation.
    Compare(RunArgs),
    /// Minimum and steady-state error over an eta x K x q grid.
    Sweep(RunArgs),
    /// Check the closed-form sample averages against Monte Carlo estimates.
    Validate(RunArgs),
    /// Minimum generalization error over an eta x K x q grid.
    MinError(RunArgs),
    /// Emit the data behind one curve family (or `all`).
    Figure {
        tag: FigureTag,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Run the mode named in a config file.
    Run {
        /// TOML config file with a `mode` key, or a JSON run manifest.
        #[arg(long)]
        config: PathBuf,

        #[command(flatten)]
        settings: Settings,
    },
}

fn resolve(
    mode: Option<Mode>,
    figure: Option<FigureTag>,
    config: Option<PathBuf>,
    settings: Settings,
) -> Result<(ExperimentConfig, Option<FigureTag>), CliError> {
    let file = config
        .as_deref()
        .map(load_config)
        .transpose()?
        .unwrap_or_default();
    let mode = mode
        .or(file.mode)
        .ok_or_else(|| CliError::Config("config file has no `mode`".into()))?;
    let figure = match figure {
        Some(tag) => Some(tag),
        None => file.figure.as_deref().map(str::parse).transpose()?,
    };
    if mode == Mode::Figure && figure.is_none() {
        return Err(CliError::Config("figure mode needs a figure tag".into()));
    }
    let cfg = ExperimentConfig::resolve(
        mode,
        figure.map(FigureTag::name),
        settings.or(file.settings),
    )?;
    Ok((cfg, figure))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    if let Some(workers) = cli.workers {
        if workers == 0 {
            return Err(CliError::Config("workers must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build_global()
            .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    }
    let (cfg, figure) = match cli.command {
        Command::Theory(a) => resolve(Some(Mode::Theory), None, a.config, a.settings)?,
        Command::Simulate(a) => resolve(Some(Mode::Simulate), None, a.config, a.settings)?,
        Command::Compare(a) => resolve(Some(Mode::Compare), None, a.config, a.settings)?,
        Command::Sweep(a) => resolve(Some(Mode::Sweep), None, a.config, a.settings)?,
        Command::Validate(a) => resolve(Some(Mode::Validate), None, a.config, a.settings)?,
        Command::MinError(a) => resolve(Some(Mode::MinError), None, a.config, a.settings)?,
        Command::Figure { tag, args } => {
            resolve(Some(Mode::Figure), Some(tag), args.config, args.settings)?
        }
        Command::Run { config, settings } => resolve(None, None, Some(config), settings)?,
    };

    let outcome = match cfg.mode {
        Mode::Theory => commands::theory(&cfg)?,
        Mode::Simulate => commands::simulate(&cfg)?,
        Mode::Compare => commands::compare(&cfg)?,
        Mode::Sweep => commands::sweep(&cfg)?,
        Mode::Validate => commands::validate(&cfg)?,
        Mode::MinError => commands::min_error(&cfg)?,
        Mode::Figure => {
            let tag = figure.expect("checked in resolve");
            commands::Outcome {
                tables: figures::figure(&cfg, tag)?,
                notes: figures::grid_notes(tag),
                failure: None,
            }
        }
    };
    output::emit(&cfg, &outcome.tables, &outcome.notes)?;
    for note in &outcome.notes {
        eprintln!("{note}");
    }
    match outcome.failure {
        Some(msg) => Err(CliError::Validation(msg)),
        None => Ok(()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
