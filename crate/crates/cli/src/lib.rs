//! `attrib` command-line tool: corpus ingestion, source classification and
//! evaluation, the statistics suite and mosaic output.
//!
//! Exit codes are a stable contract: 0 success, 1 usage error, 2 data or
//! validation error.

pub mod commands;
pub mod synth;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "attrib", version, about = "Attribution corpus analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load and validate a corpus; print per-publisher counts.
    Ingest(IngestArgs),
    /// Classify every attribution's source and write traces.
    Classify(ClassifyArgs),
    /// Classify, then score against gold labels.
    Evaluate(EvaluateArgs),
    /// Run the hypothesis-test suite over a labels file.
    Suite(SuiteArgs),
    /// Rank articles by how many attributions go to one candidate.
    HighYield(HighYieldArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CorpusArgs {
    /// Corpus root holding `<publisher>/<article>.{txt,xml,attr}`.
    #[arg(long, value_name = "DIR")]
    pub corpus: PathBuf,
    /// Skip unknown XML elements instead of rejecting the file.
    #[arg(long)]
    pub lenient: bool,
}

#[derive(Debug, Clone, Args)]
pub struct IngestArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ClassifyArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Match rules file; the bundled rules are used when absent.
    #[arg(long, value_name = "FILE")]
    pub rules: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct EvaluateArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    /// Gold labels CSV.
    #[arg(long, value_name = "FILE")]
    pub labels: PathBuf,
    #[arg(long, value_name = "FILE")]
    pub rules: Option<PathBuf>,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SuiteArgs {
    #[arg(long, value_name = "FILE")]
    pub labels: PathBuf,
    /// Optional corpus to cross-check the labels against.
    #[arg(long, value_name = "DIR")]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub lenient: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Write one residual-shaded SVG per tested (contrast, feature).
    #[arg(long)]
    pub mosaic: bool,
    /// Population pair `A:B`; repeatable.
    #[arg(long = "contrast", value_name = "A:B")]
    pub contrasts: Vec<String>,
    /// Feature to test; repeatable.
    #[arg(long = "feature", value_name = "F")]
    pub features: Vec<String>,
    /// Feature interaction `F1xF2`; repeatable.
    #[arg(long = "interaction", value_name = "F1xF2")]
    pub interactions: Vec<String>,
    /// Enumeration budget for Fisher's exact test before switching to Monte Carlo.
    #[arg(long, default_value_t = 10_000_000)]
    pub max_tables: u64,
    /// Monte Carlo draws for Fisher's test.
    #[arg(long, default_value_t = 1_000_000)]
    pub n_sim: u64,
}

#[derive(Debug, Clone, Args)]
pub struct HighYieldArgs {
    #[command(flatten)]
    pub corpus: CorpusArgs,
    #[arg(long, value_name = "FILE")]
    pub rules: Option<PathBuf>,
    /// `trump` or `clinton`.
    #[arg(long, value_name = "NAME")]
    pub target: String,
    #[arg(long, default_value_t = 1)]
    pub min_count: usize,
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

/// Parse arguments and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Ingest(a) => commands::cmd_ingest(a),
        Command::Classify(a) => commands::cmd_classify(a),
        Command::Evaluate(a) => commands::cmd_evaluate(a),
        Command::Suite(a) => commands::cmd_suite(a),
        Command::HighYield(a) => commands::cmd_high_yield(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
