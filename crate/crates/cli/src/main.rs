//! `barcut`: elastic bar-to-shot alignment from the command line.
//!
//! Every subcommand prints JSON to stdout (or writes it to `--out` /
//! `--report`). Failures print one line to stderr,
//! `error: kind=<kind> message=<text>`, and exit with 2 (invalid input),
//! 3 (infeasible instance) or 4 (i/o or internal error).

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "barcut",
    version,
    about = "Elastic bar-to-shot alignment and trailer evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Align a bundle's shots to its bars and emit a cut list.
    Align(AlignArgs),
    /// Score a predicted cut list (or bundle ground truth) against a ground-truth bundle.
    Evaluate(EvaluateArgs),
    /// Print per-bar energy.
    Energy { bundle: PathBuf },
    /// Project a JSON score matrix with Sinkhorn iterations.
    Sinkhorn {
        /// JSON file holding a list of rows.
        scores: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        tau: f64,
        #[arg(long, default_value_t = 3)]
        iters: usize,
    },
    /// Write a synthetic bundle.
    Synth(SynthArgs),
    /// Exhaustive selection on a small bundle.
    Oracle(EngineArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Clone, Copy, ValueEnum)]
enum Keywords {
    Require,
    Boost,
    Off,
}

#[derive(Args)]
struct EngineArgs {
    bundle: PathBuf,
    /// TOML config with [engine], [guard] and [arena] tables.
    #[arg(long)]
    params: Option<PathBuf>,
    /// Write the cut list here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Switch::On)]
    guard: Switch,
    #[arg(long, value_enum, default_value_t = Keywords::Off)]
    keywords: Keywords,
    #[arg(long)]
    beam_width: Option<usize>,
    #[arg(long)]
    top_m: Option<usize>,
    #[arg(long)]
    k_max: Option<usize>,
}

#[derive(Args)]
struct AlignArgs {
    #[command(flatten)]
    engine: EngineArgs,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Cut list file, or bundle directory whose ground truth is the prediction.
    prediction: PathBuf,
    /// Bundle directory with a ground-truth alignment.
    ground_truth: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    params: Option<PathBuf>,
    /// Also report Levenshtein distance on the shared-shot subsequences.
    #[arg(long)]
    overlap_levenshtein: bool,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    bars: usize,
    #[arg(long)]
    shots: usize,
    /// Feature dimension for both modalities.
    #[arg(long, default_value_t = 16)]
    dim: usize,
    #[arg(long)]
    visual_dim: Option<usize>,
    #[arg(long)]
    audio_dim: Option<usize>,
    #[arg(long)]
    planted: bool,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Align(a) => commands::align(&a.engine, false),
        Command::Oracle(a) => commands::align(&a, true),
        Command::Evaluate(a) => commands::evaluate(&a),
        Command::Energy { bundle } => commands::energy(&bundle),
        Command::Sinkhorn { scores, tau, iters } => commands::sinkhorn(&scores, tau, iters),
        Command::Synth(a) => commands::synth(&a),
    };
    match result {
        Ok(Some(text)) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Ok(None) => ExitCode::SUCCESS,
        Err(e) => {
            let message = e.to_string().replace('\n', " ");
            eprintln!("error: kind={} message={message}", e.kind());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
