//! `qbc run` executes a seeded batch of trials; `qbc probe` computes the
//! exact concealment trace distance for a configuration.
//!
//! Exit codes: 0 success, 1 simulation failure, 2 bad config or arguments,
//! 3 I/O failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qbc_core::harness::{self, ExperimentConfig, HarnessError, OutputSpec, ReportFormat};

#[derive(Parser)]
#[command(name = "qbc", version, about = "Quantum bit commitment experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every trial of a config and write the report.
    Run(Overrides),
    /// Print Bob's exact pre-open distinguishability of b = 0 and b = 1.
    Probe(Overrides),
}

#[derive(Args)]
struct Overrides {
    /// JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Replaces `base_seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Replaces `trials`.
    #[arg(long)]
    trials: Option<usize>,
    /// Report path; without one the JSON report goes to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

impl From<Format> for ReportFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => ReportFormat::Json,
            Format::Csv => ReportFormat::Csv,
        }
    }
}

fn load(o: &Overrides) -> Result<ExperimentConfig, HarnessError> {
    let mut cfg = ExperimentConfig::load(&o.config)?;
    if let Some(seed) = o.seed {
        cfg.base_seed = seed;
    }
    if let Some(trials) = o.trials {
        cfg.trials = trials;
    }
    if let Some(path) = &o.out {
        let format = cfg.output.as_ref().map(|s| s.format).unwrap_or_default();
        cfg.output = Some(OutputSpec { path: path.clone(), format });
    }
    if let Some(f) = o.format {
        match cfg.output.as_mut() {
            Some(spec) => spec.format = f.into(),
            None => {
                return Err(HarnessError::Config {
                    field: "format".into(),
                    message: "needs an output path (--out or output.path)".into(),
                })
            }
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run(o) => {
            let cfg = load(&o)?;
            let report = harness::run_experiment(&cfg)?;
            match &cfg.output {
                Some(spec) => eprintln!(
                    "{} trials, open acceptance {:.4}, report written to {}",
                    report.aggregate.trials,
                    report.aggregate.open_acceptance_rate,
                    spec.path.display()
                ),
                None => print!("{}", report.to_json()),
            }
        }
        Command::Probe(o) => {
            let cfg = load(&o)?;
            println!("{:e}", harness::concealment_probe(&cfg)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                HarnessError::Config { .. } => 2,
                HarnessError::Io { .. } => 3,
                _ => 1,
            })
        }
    }
}
