use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nateval_cli::commands::{cmd_correlate, cmd_curves, cmd_evaluate, cmd_prepare, cmd_train};
use nateval_cli::config::RunConfig;
use nateval_cli::exit_code;
use nateval_core::training::artifacts::ModelKind;
use nateval_core::{Criterion, Result};

/// Train and evaluate classifiers that estimate how natural a generated
/// sentence sounds, given a human reference sentence.
#[derive(Parser)]
#[command(name = "nateval", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load raw ratings, aggregate medians, split, and persist the splits.
    Prepare {
        /// Run configuration file (TOML); flags override file values.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Raw ratings file (csv/tsv with a header).
        #[arg(long)]
        data: Option<PathBuf>,
        /// Output directory for splits and manifest.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Split seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Train a classifier on a prepared split.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Prepared data directory (from `prepare`).
        #[arg(long)]
        data: Option<PathBuf>,
        /// Run output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// majority | svm | bilstm | encoder | bleurt-tiny
        #[arg(long)]
        model: Option<ModelKind>,
        /// quality | informativeness: two-stage transfer into naturalness.
        #[arg(long)]
        transfer_source: Option<Criterion>,
        /// Pre-trained encoder checkpoint directory.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Training (and head-init) seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Evaluate a checkpoint on the test split.
    Evaluate {
        /// Trained model directory.
        #[arg(long)]
        checkpoint: PathBuf,
        /// Prepared data directory.
        #[arg(long)]
        data: PathBuf,
        /// Directory for report.json / report.txt.
        #[arg(long)]
        out: PathBuf,
    },
    /// Spearman correlation between two rating criteria.
    Correlate {
        /// Prepared data directory.
        #[arg(long)]
        data: PathBuf,
        criterion_a: Criterion,
        criterion_b: Criterion,
        /// Optional JSON report path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Merge training curves from run directories into CSV + SVG.
    Curves {
        /// Run directories containing curve.jsonl.
        runs: Vec<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Prepare { config, data, out, seed } => {
            let mut cfg = RunConfig::load_or_default(config.as_deref())?;
            if let Some(data) = data {
                cfg.data.path = Some(data);
            }
            if let Some(out) = out {
                cfg.output.dir = Some(out);
            }
            if let Some(seed) = seed {
                cfg.split.seed = seed;
            }
            cmd_prepare(&cfg)?;
        }
        Command::Train {
            config,
            data,
            out,
            model,
            transfer_source,
            checkpoint,
            seed,
        } => {
            let mut cfg = RunConfig::load_or_default(config.as_deref())?;
            if let Some(data) = data {
                cfg.data.prepared_dir = Some(data);
            }
            if let Some(out) = out {
                cfg.output.dir = Some(out);
            }
            if let Some(model) = model {
                cfg.model.kind = Some(model);
            }
            if let Some(source) = transfer_source {
                cfg.training.transfer_source = Some(source);
            }
            if let Some(checkpoint) = checkpoint {
                cfg.model.checkpoint = Some(checkpoint);
            }
            if let Some(seed) = seed {
                cfg.training.seed = seed;
            }
            cmd_train(&cfg)?;
        }
        Command::Evaluate { checkpoint, data, out } => {
            cmd_evaluate(&checkpoint, &data, &out)?;
        }
        Command::Correlate { data, criterion_a, criterion_b, out } => {
            cmd_correlate(&data, criterion_a, criterion_b, out.as_deref())?;
        }
        Command::Curves { runs, out } => {
            cmd_curves(&runs, &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(exit_code(&error) as u8)
        }
    }
}
