//! `picrf`: train, apply and evaluate precursor-induced CRF taggers.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on usage errors.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use picrf::ModelOrder;

#[derive(Parser)]
#[command(name = "picrf", version, about = "Precursor-induced CRF sequence labeler")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model on a labelled CoNLL corpus.
    Train(TrainArgs),
    /// Tag a CoNLL corpus with a trained model.
    Tag(TagArgs),
    /// Score predictions against gold labels.
    Eval(EvalArgs),
    /// Apply or undo precursor induction on a labelled corpus.
    Transform(TransformArgs),
    /// Generate a synthetic long-distance corpus.
    Synth(SynthArgs),
    /// Run the comparison, long-distance or timing experiments.
    Bench(BenchArgs),
}

#[derive(Args)]
struct TemplateArgs {
    /// Feature set: 1 = words and normalized words, 2 = adds affixes.
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
    features: u8,
    /// Drop features seen fewer times than this.
    #[arg(long, default_value_t = 0)]
    min_count: usize,
}

#[derive(Args)]
struct OptimizerArgs {
    /// Gaussian prior variance.
    #[arg(long, default_value_t = 10.0)]
    l2_variance: f64,
    #[arg(long, default_value_t = 500)]
    max_iters: usize,
    /// Relative objective change that stops training.
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// L-BFGS history size.
    #[arg(long, default_value_t = 7)]
    history: usize,
    /// Worker threads for the batch gradient.
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long, default_value = "first")]
    order: ModelOrder,
    #[command(flatten)]
    template: TemplateArgs,
    #[command(flatten)]
    optimizer: OptimizerArgs,
    /// Recorded in the report; training is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Restrict pre-induced decoding to transitions induction can produce.
    #[arg(long)]
    decode_constraints: bool,
    #[arg(long)]
    out: PathBuf,
    /// Per-iteration report as a plain-text table.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Per-iteration report as JSON lines.
    #[arg(long)]
    records: Option<PathBuf>,
}

#[derive(Args)]
struct TagArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    gold: PathBuf,
    /// Predictions; the last column of each line is the predicted label.
    #[arg(long, conflicts_with_all = ["model", "input"], required_unless_present = "model")]
    pred: Option<PathBuf>,
    /// Tag `--input` with this model and score against `--gold`.
    #[arg(long, requires = "input")]
    model: Option<PathBuf>,
    #[arg(long, requires = "model")]
    input: Option<PathBuf>,
    #[arg(long)]
    per_type: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Direction {
    Induce,
    Revert,
}

#[derive(Args)]
struct TransformArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_enum)]
    direction: Direction,
}

#[derive(Args)]
struct SynthFlags {
    /// Number of entity types [default: 2, or 5 for timing].
    #[arg(long)]
    types: Option<usize>,
    #[arg(long, default_value_t = 2)]
    gap_min: usize,
    #[arg(long, default_value_t = 6)]
    gap_max: usize,
    /// Weighted gaps as `gap:weight,...`; overrides the uniform range.
    #[arg(long)]
    gap_weights: Option<String>,
    /// Second-entity type per first-entity type, as `1,0,...`. Default: identity.
    #[arg(long)]
    rule: Option<String>,
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

#[derive(Args)]
struct SynthArgs {
    #[command(flatten)]
    synth: SynthFlags,
    #[arg(long, default_value_t = 2000)]
    sentences: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// Long-distance recovery on a synthetic corpus.
    #[arg(long, conflicts_with_all = ["timing", "train", "test"])]
    longdistance: bool,
    /// Seconds per training iteration for each order.
    #[arg(long, conflicts_with_all = ["train", "test"])]
    timing: bool,
    /// Training corpus for a comparison grid.
    #[arg(long, requires = "test")]
    train: Option<PathBuf>,
    #[arg(long, requires = "train")]
    test: Option<PathBuf>,
    /// Orders to compare, comma separated.
    #[arg(long, value_delimiter = ',')]
    orders: Option<Vec<ModelOrder>>,
    /// Feature sets for the comparison grid, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1,2",
          value_parser = clap::value_parser!(u8).range(1..=2))]
    feature_sets: Vec<u8>,
    #[command(flatten)]
    synth: SynthFlags,
    #[arg(long, default_value_t = 2000)]
    train_sentences: usize,
    #[arg(long, default_value_t = 500)]
    test_sentences: usize,
    /// Sentences in the timing corpus.
    #[arg(long, default_value_t = 2000)]
    sentences: usize,
    #[arg(long, default_value_t = 2)]
    warmup: usize,
    #[arg(long, default_value_t = 10)]
    measured: usize,
    /// Feature set for long-distance and timing runs.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u8).range(1..=2))]
    features: u8,
    #[command(flatten)]
    optimizer: OptimizerArgs,
    /// Also write the report as JSON lines.
    #[arg(long)]
    records: Option<PathBuf>,
}

fn usage_for(subcommand: Option<String>) -> clap::builder::StyledStr {
    let mut cmd = Cli::command();
    cmd.build();
    match subcommand.and_then(|name| cmd.find_subcommand_mut(&name).cloned()) {
        Some(mut sub) => sub.render_usage(),
        None => cmd.render_usage(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => {
            let _ = e.print();
            if !e.render().to_string().contains("Usage:") {
                eprintln!("\n{}", usage_for(std::env::args().nth(1)));
            }
            std::process::exit(2);
        }
    };
    let result = match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Tag(a) => commands::tag(a),
        Command::Eval(a) => commands::eval(a),
        Command::Transform(a) => commands::transform(a),
        Command::Synth(a) => commands::synth(a),
        Command::Bench(a) => commands::bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }
}
