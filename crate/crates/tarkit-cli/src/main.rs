//! Batch front-end for scoring and evaluating timestamped reasoning traces.

mod commands;
mod config;
mod ingest;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::extract::ExtractSide;
use config::CommonArgs;

#[derive(Parser)]
#[command(
    name = "tarkit",
    about = "Score and evaluate timestamped reasoning traces: format/accuracy rewards, \
             consistency-gated temporal alignment, and corpus metrics",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute per-sample reward breakdowns and group advantages.
    Score {
        /// JSONL corpus, one record per line.
        corpus: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Aggregate consistency, attention, and reward metrics over a corpus.
    Evaluate {
        corpus: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Extract timestamped claims and emit them as key->sentence objects.
    ExtractClaims {
        corpus: PathBuf,
        /// Which side of each record to extract from.
        #[arg(long, value_enum, default_value = "prediction")]
        side: ExtractSide,
        #[command(flatten)]
        common: CommonArgs,
    },
    /// Correlate attention scores between two evaluate reports.
    JudgeStability {
        /// Evaluate report from the first judge.
        left: PathBuf,
        /// Evaluate report from the second judge.
        right: PathBuf,
        /// Report output path (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare greedy matching against the exact oracle per sample.
    OracleCheck {
        corpus: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Score { corpus, common } => commands::score::run(corpus, common),
        Command::Evaluate { corpus, common } => commands::evaluate::run(corpus, common),
        Command::ExtractClaims {
            corpus,
            side,
            common,
        } => commands::extract::run(corpus, *side, common),
        Command::JudgeStability { left, right, out } => {
            commands::stability::run(left, right, out.as_deref())
        }
        Command::OracleCheck { corpus, common } => commands::oracle::run(corpus, common),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
