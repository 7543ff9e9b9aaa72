//! Command-line front end: preprocess, train-vocab, train-vectors,
//! transplant, analyze, and run-all chaining them from one config file.

pub mod commands;
pub mod config;

use std::fmt;
use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};
use vt_core::transplant::Strategy;

use crate::config::{
    CorpusFormat, InitParams, MatrixFormat, OutputParams, PipelineConfig, ReportKind, VectorParams, VocabParams,
};

/// Misuse of the command line, reported with exit code 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

#[derive(Debug, Parser)]
#[command(
    name = "vt",
    version,
    about = "Domain vocabulary transplantation for pretrained embeddings"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Deduplicate and normalize a tweet corpus
    Preprocess(PreprocessArgs),
    /// Train a WordPiece vocabulary on a normalized corpus
    TrainVocab(TrainVocabArgs),
    /// Train skipgram vectors with character n-grams
    TrainVectors(TrainVectorsArgs),
    /// Build the embedding matrix for a target vocabulary
    Transplant(TransplantArgs),
    /// Overlap and subword statistics of two vocabularies
    Analyze(AnalyzeArgs),
    /// Run the whole pipeline from a config file
    RunAll(Box<RunAllArgs>),
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, value_enum, default_value = "jsonl")]
    pub input_format: CorpusFormat,
    /// Emoji table (TSV: emoji, alias) [default: built-in]
    #[arg(long)]
    pub emoji_map: Option<PathBuf>,
    /// Write a held-out development split here
    #[arg(long, requires = "dev_fraction")]
    pub dev_output: Option<PathBuf>,
    #[arg(long, requires = "dev_output")]
    pub dev_fraction: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainVocabArgs {
    /// Normalized corpus, one text per line
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[command(flatten)]
    pub params: VocabParams,
}

#[derive(Debug, Args)]
pub struct TrainVectorsArgs {
    /// Normalized corpus, one text per line
    #[arg(long)]
    pub corpus: PathBuf,
    /// Output vectors (word2vec text)
    #[arg(long)]
    pub output: PathBuf,
    /// Segment the corpus with this WordPiece vocabulary first
    #[arg(long)]
    pub tokenizer_vocab: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub params: VectorParams,
}

#[derive(Debug, Args)]
pub struct TransplantArgs {
    #[arg(long)]
    pub source_vocab: PathBuf,
    #[arg(long)]
    pub source_embeddings: PathBuf,
    /// [default: from the file extension]
    #[arg(long, value_enum)]
    pub source_format: Option<MatrixFormat>,
    #[arg(long)]
    pub target_vocab: PathBuf,
    /// uniform, normal, fasttext-projection or subword-average
    #[arg(long, value_parser = config::parse_strategy)]
    pub strategy: Strategy,
    /// Word vectors (word2vec text); required by fasttext-projection
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Adapted matrix
    #[arg(long)]
    pub output: PathBuf,
    /// Reconciled target vocabulary [default: <output>.vocab.txt]
    #[arg(long)]
    pub output_vocab: Option<PathBuf>,
    /// Report path [default: <output>.report.json, or <output>.report for CSV]
    #[arg(long)]
    pub report: Option<PathBuf>,
    #[command(flatten)]
    pub init: InitParams,
    #[command(flatten)]
    pub out: OutputParams,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long)]
    pub source_vocab: PathBuf,
    #[arg(long)]
    pub target_vocab: PathBuf,
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    pub report_format: ReportKind,
}

#[derive(Debug, Args)]
pub struct RunAllArgs {
    /// Flat TOML config; flags given here override it
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub settings: PipelineConfig,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Preprocess(args) => commands::cmd_preprocess(args),
        Command::TrainVocab(args) => commands::cmd_train_vocab(args),
        Command::TrainVectors(args) => commands::cmd_train_vectors(args),
        Command::Transplant(args) => commands::cmd_transplant(args),
        Command::Analyze(args) => commands::cmd_analyze(args),
        Command::RunAll(args) => commands::cmd_run_all(*args),
    }
}
