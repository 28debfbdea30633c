//! `scoregate` command-line frontend.
//!
//! Exit codes: 0 completed, 1 input error, 2 a consistency test was
//! inconclusive because the integer search ran out of budget.

mod commands;
mod input;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use scoregate_core::lp::DEFAULT_MAX_NODES;
use scoregate_core::score::{HypothesisTag, RoundingMode};
use scoregate_core::survey::{CorrelationKind, TTestKind};
use scoregate_core::sweep::{StructuringElement, TestKind};

pub const THREADS_ENV: &str = "SCOREGATE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "scoregate", version, about = "Consistency tests and FoV adjustment for reported segmentation scores")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Test one image-level triplet against explicit pixel counts.
    CheckImage(CheckImageArgs),
    /// Test reported rows against every image of a counts file.
    CheckAggregate(CheckAggregateArgs),
    /// Map all-pixels scores into the FoV domain.
    Adjust(AdjustArgs),
    /// Count positives and negatives per image and region.
    Counts(CountsArgs),
    /// Dilate the FoV masks and record test pass rates per level.
    Sweep(SweepArgs),
    /// Categorize and rank a corpus of reported scores.
    Survey(SurveyArgs),
    /// Write a synthetic dataset, its counts and a demo corpus.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct CheckImageArgs {
    #[arg(long)]
    acc: String,
    #[arg(long)]
    sens: String,
    #[arg(long)]
    spec: String,
    /// Decimal places of the reported figures.
    #[arg(long)]
    digits: u32,
    /// Positive pixels.
    #[arg(long)]
    p: u64,
    /// Negative pixels.
    #[arg(long)]
    n: u64,
    #[arg(long, default_value = "round", value_parser = parse_rounding)]
    rounding: RoundingMode,
}

#[derive(Debug, Args)]
struct SolverArgs {
    /// Branch-and-bound node budget per integer program.
    #[arg(long, default_value_t = DEFAULT_MAX_NODES)]
    max_nodes: u64,
}

#[derive(Debug, Args)]
struct CheckAggregateArgs {
    /// Reported scores CSV (image_id,acc,sens,spec,digits,rounding).
    #[arg(long)]
    scores: PathBuf,
    /// Per-image counts JSON.
    #[arg(long)]
    counts: PathBuf,
    #[arg(long, value_parser = parse_hypothesis)]
    hypothesis: HypothesisTag,
    /// Write the integer program of every mean row in LP format.
    #[arg(long)]
    dump_lp: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct AdjustmentArgs {
    /// Solve interval endpoints as integer programs.
    #[arg(long)]
    exact_ilp: bool,
    /// Outside-FoV false positives allowed per image, as a fraction of the
    /// FoV vessel pixels.
    #[arg(long, default_value = "0.01")]
    leak_fraction: String,
}

#[derive(Debug, Args)]
struct AdjustArgs {
    #[arg(long)]
    scores: PathBuf,
    #[arg(long)]
    counts: PathBuf,
    #[command(flatten)]
    adjustment: AdjustmentArgs,
    /// Adjust rows that fail the all-pixels consistency test.
    #[arg(long)]
    force: bool,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct CountsArgs {
    /// Directory of FoV masks.
    #[arg(long)]
    masks: PathBuf,
    /// Directory of reference annotations.
    #[arg(long)]
    annotations: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Also write the FoV/outside split file.
    #[arg(long)]
    splits_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    /// Dataset root with mask/, 1st_manual/ and 2nd_manual/.
    #[arg(long)]
    dataset: PathBuf,
    /// Comma-separated reporting precisions.
    #[arg(long, value_delimiter = ',', default_values_t = [3, 4])]
    digits: Vec<u32>,
    #[arg(long, default_value = "image", value_parser = parse_kind)]
    kind: TestKind,
    #[arg(long, default_value = "square3", value_parser = parse_element)]
    element: StructuringElement,
    #[arg(long, default_value = "round", value_parser = parse_rounding)]
    rounding: RoundingMode,
    /// Output CSV; metadata goes to `<out>.meta.json`.
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum TTestArg {
    Welch,
    Student,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum CorrelationArg {
    Spearman,
    PearsonRanks,
}

#[derive(Debug, Args)]
struct SurveyArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    counts: PathBuf,
    /// FoV/outside split file; derived from the counts when absent.
    #[arg(long)]
    splits: Option<PathBuf>,
    /// Bundle directory.
    #[arg(long)]
    out: PathBuf,
    /// Run log with timestamps, kept outside the bundle.
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = TTestArg::Welch)]
    ttest: TTestArg,
    #[arg(long, value_enum, default_value_t = CorrelationArg::Spearman)]
    correlation: CorrelationArg,
    #[command(flatten)]
    adjustment: AdjustmentArgs,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 20)]
    images: usize,
    #[arg(long, default_value_t = 3)]
    papers: usize,
}

fn parse_rounding(s: &str) -> Result<RoundingMode, String> {
    s.parse().map_err(|e: scoregate_core::Error| e.to_string())
}

fn parse_hypothesis(s: &str) -> Result<HypothesisTag, String> {
    match s.parse() {
        Ok(HypothesisTag::Custom) => Err("expected fov or all".into()),
        Ok(tag) => Ok(tag),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_kind(s: &str) -> Result<TestKind, String> {
    s.parse().map_err(|e: scoregate_core::Error| e.to_string())
}

fn parse_element(s: &str) -> Result<StructuringElement, String> {
    s.parse().map_err(|e: scoregate_core::Error| e.to_string())
}

impl From<TTestArg> for TTestKind {
    fn from(a: TTestArg) -> Self {
        match a {
            TTestArg::Welch => TTestKind::Welch,
            TTestArg::Student => TTestKind::Student,
        }
    }
}

impl From<CorrelationArg> for CorrelationKind {
    fn from(a: CorrelationArg) -> Self {
        match a {
            CorrelationArg::Spearman => CorrelationKind::Spearman,
            CorrelationArg::PearsonRanks => CorrelationKind::PearsonOnRanks,
        }
    }
}

/// Whether every test reached a definite verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Completed,
    Inconclusive,
}

fn one_line(text: &str) -> String {
    text.lines().map(str::trim).filter(|l| !l.is_empty()).collect::<Vec<_>>().join("; ")
}

fn configure_threads() -> anyhow::Result<()> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .map_err(|_| anyhow::anyhow!("{THREADS_ENV}={value}: expected a positive integer"))?;
    if threads == 0 {
        anyhow::bail!("{THREADS_ENV}=0: expected a positive integer");
    }
    rayon::ThreadPoolBuilder::new().num_threads(threads).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<Outcome> {
    configure_threads()?;
    match cli.command {
        Command::CheckImage(a) => commands::check_image(a),
        Command::CheckAggregate(a) => commands::check_aggregate(a),
        Command::Adjust(a) => commands::adjust(a),
        Command::Counts(a) => commands::counts(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::Survey(a) => commands::survey(a),
        Command::Synth(a) => commands::synth(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", one_line(&e.to_string()));
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(Outcome::Completed) => ExitCode::SUCCESS,
        Ok(Outcome::Inconclusive) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {}", one_line(&format!("{e:#}")));
            ExitCode::from(1)
        }
    }
}
