//! Command-line pipeline: ingest, generate, augment, refine, evaluate, stats.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use crate::temporal::TimePoint;

mod commands;
mod config;
mod stats;

pub use config::{AugmentSection, GenerateSection, IngestSection, Paths, PipelineConfig, Quotas, RefineSection, ScorerKind};
pub use stats::{dataset_stats, DatasetStats};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Stage(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Stage(_) => 1,
        }
    }

    pub(crate) fn stage(e: impl std::fmt::Display) -> Self {
        CliError::Stage(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(name = "tempqa", version, about = "Temporal QA dataset toolkit")]
pub struct Cli {
    /// Pipeline config file (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = machine default).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read statements, group by subject, cap per relation, and split.
    Ingest(IngestArgs),
    /// Generate questions for one split.
    Generate(GenerateArgs),
    /// Build the resampled pseudo-instruction set from the training split.
    Augment(AugmentArgs),
    /// Select the top-k paragraphs of each question's articles.
    Refine(RefineArgs),
    /// Score predictions against a dataset.
    Evaluate(EvaluateArgs),
    /// Summarize a dataset file.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long)]
    pub statements: Option<PathBuf>,
    /// Knowledge-base snapshot month; ongoing facts run to it.
    #[arg(long, value_parser = parse_time)]
    pub snapshot_date: Option<TimePoint>,
    #[arg(long)]
    pub ceiling: Option<usize>,
    #[arg(long)]
    pub train_size: Option<usize>,
    #[arg(long)]
    pub dev_size: Option<usize>,
    #[arg(long)]
    pub test_size: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub fn name(&self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub split: Split,
    #[arg(long)]
    pub templates: Option<PathBuf>,
    #[arg(long, value_parser = parse_time)]
    pub cutoff: Option<TimePoint>,
    #[arg(long)]
    pub quota_point: Option<usize>,
    #[arg(long)]
    pub quota_interval: Option<usize>,
    #[arg(long)]
    pub quota_offset: Option<usize>,
    #[arg(long)]
    pub quota_before: Option<usize>,
    #[arg(long)]
    pub quota_after: Option<usize>,
    #[arg(long)]
    pub quota_during: Option<usize>,
    #[arg(long)]
    pub quota_event_offset: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long)]
    pub pseudo_size: Option<usize>,
    /// Lower bound on in-range keep probabilities.
    #[arg(long)]
    pub floor: Option<f64>,
    #[arg(long)]
    pub max_rounds: Option<usize>,
    #[arg(long)]
    pub pools: Option<PathBuf>,
    #[arg(long)]
    pub templates: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RefineArgs {
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_enum)]
    pub scorer: Option<ScorerKind>,
    #[arg(long, env = crate::refine::ENDPOINT_ENV)]
    pub endpoint: Option<String>,
    /// JSON manifest mapping question ids to article files.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    /// Dataset whose questions are refined (default: the test split).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Line-delimited `{id, prediction}` records.
    #[arg(long)]
    pub predictions: PathBuf,
    /// Dataset to score against (default: the test split).
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long, value_parser = parse_time)]
    pub cutoff: Option<TimePoint>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    #[arg(long, value_parser = parse_time)]
    pub cutoff: Option<TimePoint>,
    /// Also write the summary to this file.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

fn parse_time(s: &str) -> Result<TimePoint, String> {
    TimePoint::parse_iso(s).map_err(|e| e.to_string())
}

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match commands::execute(cli) {
        Ok(summary) => {
            if !summary.is_empty() {
                println!("{summary}");
            }
            0
        }
        Err(e) => {
            eprintln!("tempqa: {e}");
            e.exit_code()
        }
    }
}
