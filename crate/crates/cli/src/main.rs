use std::path::PathBuf;

use clap::{Parser, Subcommand};
use textrisk::network::TextMode;
use textrisk_cli::{exit_code, run, Command, FoldFlag, Invocation, Overrides};

/// Distress prediction from annual-report text and financial variables.
#[derive(Parser)]
#[command(name = "textrisk", version)]
struct Cli {
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Top-level seed; every stage derives its randomness from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Restrict training to one text mode: aud, man, aud+man or none.
    #[arg(long, global = true)]
    text_mode: Option<TextMode>,
    /// Score only firms strictly larger than this.
    #[arg(long, global = true)]
    size_threshold: Option<f64>,
    /// by-firm or by-year.
    #[arg(long, global = true)]
    folds: Option<FoldFlag>,
    /// Single-threaded numerics.
    #[arg(long, global = true)]
    deterministic: bool,
    /// Corpus path (JSONL).
    #[arg(long, global = true)]
    corpus: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a synthetic corpus.
    SynthData {
        /// Destination (defaults to the configured corpus path).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Tokenize the corpus and build the vocabulary.
    Preprocess,
    /// Train skip-gram word vectors.
    TrainEmbeddings,
    /// Cross-validate every requested model.
    Train,
    /// Train (cached) and score all models.
    Evaluate,
    /// Cross-validate every hyperparameter grid cell.
    GridSearch,
    /// Export attention heatmaps.
    Heatmap,
    /// Build report.html from existing artifacts.
    Report,
    /// Run every stage.
    EndToEnd,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let command = match cli.command {
        Cmd::SynthData { out } => Command::SynthData { out },
        Cmd::Preprocess => Command::Preprocess,
        Cmd::TrainEmbeddings => Command::TrainEmbeddings,
        Cmd::Train => Command::Train,
        Cmd::Evaluate => Command::Evaluate,
        Cmd::GridSearch => Command::GridSearch,
        Cmd::Heatmap => Command::Heatmap,
        Cmd::Report => Command::Report,
        Cmd::EndToEnd => Command::EndToEnd,
    };
    let inv = Invocation {
        config: cli.config,
        overrides: Overrides {
            seed: cli.seed,
            text_mode: cli.text_mode,
            size_threshold: cli.size_threshold,
            folds: cli.folds,
            deterministic: cli.deterministic,
            corpus: cli.corpus,
            output_dir: cli.output,
        },
        command,
    };
    if let Err(e) = run(&inv) {
        eprintln!("error: {e:#}");
        std::process::exit(exit_code(&e));
    }
}
