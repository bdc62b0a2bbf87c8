//! `iclock` — generate a synthetic clickstream, train the scoring model under
//! one or all time-aggregation strategies with streaming one-pass training,
//! evaluate held-out AUC/UAUC and the per-hour forgetting probe, and render
//! the comparison table.
//!
//! Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric
//! failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use interest_clock::config::ExperimentConfig;
use interest_clock::pipeline;
use interest_clock::Error;

#[derive(Parser)]
#[command(name = "iclock", version, about = "Hourly interest-clock experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// Experiment config (TOML). Missing sections fall back to defaults.
    #[arg(long, short = 'c')]
    config: PathBuf,
    /// Override a config key, e.g. --set clock.strategy=naive
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Output directory; defaults to the config's out_dir.
    #[arg(long, short = 'o')]
    out: Option<PathBuf>,
}

impl ConfigArgs {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf), Error> {
        let cfg = ExperimentConfig::load(&self.config, &self.overrides)?;
        let out = self.out.clone().unwrap_or_else(|| cfg.out_dir.clone());
        Ok((cfg, out))
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic event log and manifest.
    Generate(ConfigArgs),
    /// Train one strategy over an event log; writes checkpoint + telemetry.
    Train {
        #[command(flatten)]
        config: ConfigArgs,
        /// time_encoding | naive | adaptive | gaussian
        #[arg(long, short = 's')]
        strategy: String,
        /// Event log path; defaults to <out>/events.log.
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Evaluate a trained checkpoint on the held-out days.
    Evaluate {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, short = 's')]
        strategy: String,
        #[arg(long)]
        events: Option<PathBuf>,
    },
    /// Run generate + train + evaluate for every configured strategy and
    /// print the comparison table.
    Compare(ConfigArgs),
    /// Rebuild and print the comparison table from an output directory.
    Report {
        #[arg(long, short = 'o', default_value = "out")]
        out: PathBuf,
    },
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 2,
        Error::Io(_)
        | Error::Parse { .. }
        | Error::OutOfOrderEvent { .. }
        | Error::InvalidEvent(_)
        | Error::CorruptSnapshot(_)
        | Error::CorruptCheckpoint(_)
        | Error::DegenerateInput(_)
        | Error::EmptyInput(_) => 3,
        Error::Domain(_)
        | Error::MissingEmbedding(_)
        | Error::DimensionMismatch(_)
        | Error::NonFiniteGradient { .. } => 4,
    }
}

fn run() -> Result<(), Error> {
    let cli = Cli::parse();
    match cli.command {
        Command::Generate(args) => {
            let (cfg, out) = args.load()?;
            let summary = pipeline::cmd_generate(&cfg, &out)?;
            println!(
                "wrote {} events to {}",
                summary.n_events,
                summary.events_path.display()
            );
            println!("manifest: {}", summary.manifest_path.display());
        }
        Command::Train {
            config,
            strategy,
            events,
        } => {
            let (cfg, out) = config.load()?;
            let log = events.unwrap_or_else(|| pipeline::events_path(&out));
            let summary = pipeline::cmd_train(&cfg, &log, &strategy, &out)?;
            println!(
                "trained {} for {} steps (last hour {})",
                summary.strategy,
                summary.steps,
                summary
                    .last_train_hour
                    .map(|h| h.to_string())
                    .unwrap_or_else(|| "-".into())
            );
            println!("checkpoint: {}", summary.checkpoint_path.display());
            println!("telemetry:  {}", summary.telemetry_path.display());
        }
        Command::Evaluate {
            config,
            strategy,
            events,
        } => {
            let (cfg, out) = config.load()?;
            let log = events.unwrap_or_else(|| pipeline::events_path(&out));
            let metrics = pipeline::cmd_evaluate(&cfg, &log, &strategy, &out)?;
            let fmt = |v: Option<f64>| v.map(pipeline::fmt_sig).unwrap_or_else(|| "NA".into());
            println!(
                "{}: n={} auc={} uauc={} spread={}",
                metrics.strategy,
                metrics.report.n,
                fmt(metrics.report.auc),
                fmt(metrics.report.uauc),
                fmt(metrics.spread),
            );
        }
        Command::Compare(args) => {
            let (cfg, out) = args.load()?;
            let table = pipeline::cmd_compare(&cfg, &out)?;
            print!("{}", table.render());
            println!("full outputs in {}", out.display());
        }
        Command::Report { out } => {
            let text = pipeline::cmd_report(&out)?;
            print!("{text}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
