//! `medbounds`: fit the outcome and mediator models, then report natural
//! effect estimates, identification bounds and uncertainty intervals.

mod commands;
mod config;
mod emit;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::error;
use medbounds::validate::ValidationConfig;

use crate::config::{parse_levels, parse_profile, AnalysisConfig, Overrides, Settings};
use crate::emit::{render, write_output, Format};
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(
    name = "medbounds",
    version,
    about = "Natural direct and indirect effects with cross-world bounds"
)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit both logistic models and print their coefficient tables.
    Fit(FitArgs),
    /// Point estimates of NDE, NIE and TE.
    Effects(AnalysisArgs),
    /// Identification bounds and uncertainty intervals per effect.
    Bounds(AnalysisArgs),
    /// Bounds over a grid of exposure levels, one row per level and profile.
    Curve(AnalysisArgs),
    /// Sample a synthetic dataset from a structural model.
    Simulate(SimulateArgs),
    /// Check the effect machinery against the built-in oracles.
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, value_enum)]
    format: Option<Format>,

    /// Write to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct AnalysisArgs {
    /// Analysis configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,

    /// CSV data; overrides the config.
    #[arg(long)]
    data: Option<PathBuf>,

    /// Saved models (JSON from `fit --save-models`); skips fitting.
    #[arg(long)]
    models: Option<PathBuf>,

    /// Active exposure levels: `50`, `20,50,90` or `10:170:10`.
    #[arg(long)]
    x: Option<String>,

    /// Reference exposure level [default: 10].
    #[arg(long = "x-star", allow_hyphen_values = true)]
    x_star: Option<f64>,

    /// Covariate value for the profile, repeatable: `--profile Gender=1`.
    #[arg(long = "profile", value_name = "KEY=VAL")]
    profile: Vec<String>,

    /// Uncertainty interval level [default: 0.05].
    #[arg(long)]
    alpha: Option<f64>,

    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    analysis: AnalysisArgs,

    /// Save the fitted models as JSON.
    #[arg(long)]
    save_models: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Structural model (TOML); the bundled cohort-like model when omitted.
    #[arg(long)]
    scm: Option<PathBuf>,

    /// Number of rows [default: 3270].
    #[arg(long)]
    n: Option<usize>,

    #[arg(long, default_value_t = 1)]
    seed: u64,

    /// Write to this file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ValidateArgs {
    /// Seed for the randomized checks.
    #[arg(long)]
    seed: Option<u64>,

    /// Smaller sample sizes for a fast smoke test.
    #[arg(long)]
    quick: bool,

    #[command(flatten)]
    output: OutputArgs,
}

impl AnalysisArgs {
    fn settings(&self) -> Result<Settings> {
        let cfg = match &self.config {
            Some(path) => AnalysisConfig::load(path)?,
            None => AnalysisConfig::default(),
        };
        let overrides = Overrides {
            data: self.data.clone(),
            models: self.models.clone(),
            x: self.x.as_deref().map(parse_levels).transpose()?,
            x_star: self.x_star,
            profile: parse_profile(&self.profile)?,
            alpha: self.alpha,
            format: self.output.format,
        };
        Settings::resolve(cfg, overrides)
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fit(args) => {
            let settings = args.analysis.settings()?;
            let tables = commands::cmd_fit(&settings, args.save_models.as_deref())?;
            write_output(
                &render(&tables, settings.format)?,
                args.analysis.output.out.as_deref(),
            )
        }
        Command::Effects(args) => emit_analysis(&args, commands::cmd_effects),
        Command::Bounds(args) => emit_analysis(&args, commands::cmd_bounds),
        Command::Curve(args) => emit_analysis(&args, commands::cmd_curve),
        Command::Simulate(args) => {
            let csv = commands::cmd_simulate(args.scm.as_deref(), args.n, args.seed)?;
            write_output(&csv, args.out.as_deref())
        }
        Command::Validate(args) => {
            let seed = args.seed.unwrap_or(ValidationConfig::default().seed);
            let cfg = if args.quick {
                ValidationConfig::quick(seed)
            } else {
                ValidationConfig {
                    seed,
                    ..ValidationConfig::default()
                }
            };
            let report = commands::cmd_validate(&cfg)?;
            let table = commands::validation_table(&report);
            write_output(
                &render(&[table], args.output.format.unwrap_or_default())?,
                args.output.out.as_deref(),
            )?;
            let failed = report.checks.iter().filter(|c| !c.passed).count();
            if failed > 0 {
                return Err(CliError::ValidationFailed {
                    failed,
                    total: report.checks.len(),
                });
            }
            Ok(())
        }
    }
}

fn emit_analysis(
    args: &AnalysisArgs,
    command: fn(&Settings) -> Result<Vec<emit::Table>>,
) -> Result<()> {
    let settings = args.settings()?;
    let tables = command(&settings)?;
    write_output(
        &render(&tables, settings.format)?,
        args.output.out.as_deref(),
    )
}

fn main() -> ExitCode {
    // clap's own exit code for usage errors is 2, which is reserved here for
    // numerical failures.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
