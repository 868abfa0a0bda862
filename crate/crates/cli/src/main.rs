mod commands;
mod config;
mod error;
mod runlog;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use crate::config::Config;
use crate::error::CliError;
use crate::runlog::{Outputs, RunRecord};

/// Detect anti-adblock walls by diffing pages loaded with and without an
/// ad-blocker.
#[derive(Debug, Parser)]
#[command(name = "abdetect", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed for all randomness.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Appends one JSON line describing this run.
    #[arg(long, global = true)]
    run_log: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Build a de-duplicated site list from lists, category XML and issue pages.
    Sites(SitesArgs),
    /// Capture baseline/blocked pairs (live, offline import or synthetic).
    Capture(CaptureArgs),
    /// Diff every snapshot pair into the dataset CSV.
    Extract(ExtractArgs),
    /// Rank features by information gain.
    Rank(RankArgs),
    /// Train a model.
    Train(TrainArgs),
    /// Classify dataset rows with a trained model.
    Classify(ClassifyArgs),
    /// Stratified k-fold cross-validation.
    Evaluate(EvaluateArgs),
    /// Regional precision table from predictions and verification verdicts.
    Report(ReportArgs),
    /// Label how detected sites respond (Cost, Invisibility, Availability).
    Respond(RespondArgs),
    /// Strip anti-adblock rules from a filter list.
    Filters(FiltersArgs),
}

#[derive(Debug, Args)]
pub struct SitesArgs {
    /// Plain site-list files (one URL per line).
    #[arg(long = "list")]
    pub lists: Vec<PathBuf>,
    /// Saved category-listing XML responses.
    #[arg(long = "awis-xml")]
    pub awis: Vec<PathBuf>,
    /// Saved issue-tracker listing pages.
    #[arg(long = "issues")]
    pub issues: Vec<PathBuf>,
    /// Source tag for plain lists.
    #[arg(long, default_value = "list")]
    pub tag: String,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct CaptureArgs {
    /// Site list to capture live through the configured WebDriver endpoints.
    #[arg(long, conflicts_with_all = ["offline", "synth"])]
    pub sites: Option<PathBuf>,
    /// Import hand-saved pairs (`<host>/baseline.html`, `<host>/blocked.html`).
    #[arg(long, conflicts_with = "synth")]
    pub offline: Option<PathBuf>,
    /// Generate a synthetic corpus with this many pages.
    #[arg(long)]
    pub synth: Option<usize>,
    /// Planted walls in the synthetic corpus.
    #[arg(long, default_value_t = 40, requires = "synth")]
    pub walls: usize,
    /// Dead sites in the synthetic corpus.
    #[arg(long, default_value_t = 0, requires = "synth")]
    pub dead: usize,
    /// Host prefix of synthetic sites.
    #[arg(long, default_value = "site", requires = "synth")]
    pub host_prefix: String,
    /// Snapshot root to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[arg(long)]
    pub snapshots: PathBuf,
    /// `host,verdict` file supplying labels.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Where to write the skip report (`host,reason`).
    #[arg(long)]
    pub skips: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DataArgs {
    /// Dataset CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// Comma-separated feature columns (default: all).
    #[arg(long, value_delimiter = ',')]
    pub features: Vec<String>,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// JSON output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LearnerArgs {
    /// nb, j48 or rf.
    #[arg(long)]
    pub learner: String,
    #[arg(long)]
    pub min_leaf: Option<usize>,
    #[arg(long)]
    pub trees: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub learner: LearnerArgs,
    /// Model file (JSON).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Predictions CSV (`site,label,score`).
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub learner: LearnerArgs,
    #[arg(long, default_value_t = 10)]
    pub cv: usize,
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long)]
    pub text: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub region: String,
    /// `host,verdict` verification file.
    #[arg(long)]
    pub verified: PathBuf,
    /// `name=predictions.csv`, once per classifier.
    #[arg(long = "predictions", required = true)]
    pub predictions: Vec<String>,
    #[arg(long)]
    pub json: Option<PathBuf>,
    #[arg(long)]
    pub text: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RespondArgs {
    #[arg(long)]
    pub snapshots: PathBuf,
    /// Only label sites predicted TRUE in this predictions CSV.
    #[arg(long)]
    pub predictions: Option<PathBuf>,
    /// Manual `host,category[,evidence]` labels that override the heuristic.
    #[arg(long)]
    pub manual: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct FiltersArgs {
    #[arg(long)]
    pub list: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Sites(_) => "sites",
            Command::Capture(_) => "capture",
            Command::Extract(_) => "extract",
            Command::Rank(_) => "rank",
            Command::Train(_) => "train",
            Command::Classify(_) => "classify",
            Command::Evaluate(_) => "evaluate",
            Command::Report(_) => "report",
            Command::Respond(_) => "respond",
            Command::Filters(_) => "filters",
        }
    }
}

fn run(command: &Command, config: &Config, outputs: &mut Outputs) -> Result<(), CliError> {
    match command {
        Command::Sites(a) => commands::sites(a, outputs),
        Command::Capture(a) => commands::capture(a, config, outputs),
        Command::Extract(a) => commands::extract(a, config, outputs),
        Command::Rank(a) => commands::rank(a, outputs),
        Command::Train(a) => commands::train(a, config, outputs),
        Command::Classify(a) => commands::classify(a, outputs),
        Command::Evaluate(a) => commands::evaluate(a, config, outputs),
        Command::Report(a) => commands::report(a, outputs),
        Command::Respond(a) => commands::respond(a, config, outputs),
        Command::Filters(a) => commands::filters(a, outputs),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let mut outputs = Outputs::default();
    let result = match &cli.config {
        Some(path) => Config::load(path),
        None => Ok(Config::default()),
    }
    .map(|mut config| {
        if let Some(seed) = cli.seed {
            config.seed = seed;
        }
        config
    });
    let seed = result.as_ref().map_or(cli.seed.unwrap_or_default(), |c| c.seed);
    let result = result.and_then(|config| run(&cli.command, &config, &mut outputs));

    if let Some(path) = &cli.run_log {
        let record = RunRecord {
            command: cli.command.name(),
            seed,
            status: if result.is_ok() { "ok" } else { "error" },
            stage: result.as_ref().err().map(|e| e.stage.as_str()),
            error: result.as_ref().err().map(|e| e.message.clone()),
            outputs: outputs.strings(),
            elapsed_ms: start.elapsed().as_millis(),
        };
        if let Err(e) = runlog::append(path, &record) {
            eprintln!("warning: cannot write run log {}: {e}", path.display());
        }
    }
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.stage.exit_code() as u8)
        }
    }
}
