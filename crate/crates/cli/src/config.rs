//! Pipeline settings shared by the flags and the `run-all` config file.
//!
//! The config file is flat TOML whose keys are the long flag names with `_`
//! in place of `-`. Every key is optional; a flag given on the command line
//! wins over the file, and the file wins over the built-in default.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::Deserialize;
use vt_core::analysis::ReportFormat;
use vt_core::corpus::InputFormat;
use vt_core::tokenizer::WordPieceTrainer;
use vt_core::transplant::Strategy;
use vt_core::vectors::{SkipgramConfig, TrainingMode};

/// Takes each field from `self`, falling back to `other`.
macro_rules! merge_fields {
    ($self:ident, $other:ident; $($field:ident),+ $(,)?) => {
        Self { $($field: $self.$field.or($other.$field)),+ }
    };
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    Jsonl,
    Text,
}

impl From<CorpusFormat> for InputFormat {
    fn from(f: CorpusFormat) -> Self {
        match f {
            CorpusFormat::Jsonl => InputFormat::JsonLines,
            CorpusFormat::Text => InputFormat::PlainText,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatrixFormat {
    Text,
    Binary,
}

impl MatrixFormat {
    /// `.bin` means binary, anything else word2vec text.
    pub fn infer(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") => MatrixFormat::Binary,
            _ => MatrixFormat::Text,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportKind {
    Json,
    Csv,
}

impl From<ReportKind> for ReportFormat {
    fn from(k: ReportKind) -> Self {
        match k {
            ReportKind::Json => ReportFormat::Json,
            ReportKind::Csv => ReportFormat::Csv,
        }
    }
}

pub fn parse_strategy(s: &str) -> Result<Strategy, String> {
    s.parse().map_err(|e: vt_core::Error| e.to_string())
}

#[derive(Clone, Debug, Default, Args, Deserialize)]
pub struct VocabParams {
    /// Target vocabulary size [default: 32000; run-all: source size]
    #[arg(long)]
    pub vocab_size: Option<usize>,
    /// Minimum pair frequency for a merge [default: 2]
    #[arg(long)]
    pub min_pair_freq: Option<u64>,
    /// Unused placeholders reserved after the specials [default: 0]
    #[arg(long)]
    pub n_unused: Option<usize>,
}

impl VocabParams {
    pub fn merge(self, other: Self) -> Self {
        merge_fields!(self, other; vocab_size, min_pair_freq, n_unused)
    }

    pub fn trainer(&self, default_size: usize) -> WordPieceTrainer {
        let d = WordPieceTrainer::default();
        WordPieceTrainer {
            target_size: self.vocab_size.unwrap_or(default_size),
            min_pair_freq: self.min_pair_freq.unwrap_or(d.min_pair_freq),
            n_unused: self.n_unused.unwrap_or(d.n_unused),
            ..d
        }
    }
}

#[derive(Clone, Debug, Default, Args, Deserialize)]
pub struct VectorParams {
    /// Vector dimension [default: 50]
    #[arg(long)]
    pub dim: Option<usize>,
    /// Maximum context window [default: 5]
    #[arg(long)]
    pub window: Option<usize>,
    /// Negative samples per context word [default: 5]
    #[arg(long)]
    pub negatives: Option<usize>,
    /// Passes over the corpus [default: 5]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Minimum word count [default: 2]
    #[arg(long)]
    pub min_count: Option<u64>,
    /// Shortest character n-gram [default: 3]
    #[arg(long)]
    pub ngram_min: Option<usize>,
    /// Longest character n-gram [default: 6]
    #[arg(long)]
    pub ngram_max: Option<usize>,
    /// Hash buckets for n-grams [default: 131072]
    #[arg(long)]
    pub buckets: Option<usize>,
    /// Initial learning rate [default: 0.05]
    #[arg(long)]
    pub lr: Option<f64>,
    /// Training threads; more than 1 is lock-free and not reproducible [default: 1]
    #[arg(long)]
    pub workers: Option<usize>,
}

impl VectorParams {
    pub fn merge(self, other: Self) -> Self {
        merge_fields!(self, other; dim, window, negatives, epochs, min_count, ngram_min, ngram_max, buckets, lr, workers)
    }

    pub fn skipgram(&self, seed: u64) -> SkipgramConfig {
        let d = SkipgramConfig::default();
        let mode = match self.workers.unwrap_or(1) {
            0 | 1 => TrainingMode::SingleThreaded,
            workers => TrainingMode::Hogwild { workers },
        };
        SkipgramConfig {
            dim: self.dim.unwrap_or(d.dim),
            window: self.window.unwrap_or(d.window),
            negatives: self.negatives.unwrap_or(d.negatives),
            epochs: self.epochs.unwrap_or(d.epochs),
            min_count: self.min_count.unwrap_or(d.min_count),
            ngram_min: self.ngram_min.unwrap_or(d.ngram_min),
            ngram_max: self.ngram_max.unwrap_or(d.ngram_max),
            buckets: self.buckets.unwrap_or(d.buckets),
            lr: self.lr.unwrap_or(d.lr),
            seed,
            mode,
        }
    }
}

#[derive(Clone, Debug, Default, Args, Deserialize)]
pub struct InitParams {
    /// Ridge term of the projection fit [default: 0]
    #[arg(long)]
    pub ridge: Option<f64>,
    /// Lower bound of the uniform strategy [default: -1]
    #[arg(long, allow_negative_numbers = true)]
    pub uniform_low: Option<f64>,
    /// Upper bound (exclusive) of the uniform strategy [default: 1]
    #[arg(long, allow_negative_numbers = true)]
    pub uniform_high: Option<f64>,
}

impl InitParams {
    pub fn merge(self, other: Self) -> Self {
        merge_fields!(self, other; ridge, uniform_low, uniform_high)
    }

    pub fn ridge(&self) -> f64 {
        self.ridge.unwrap_or(0.0)
    }

    pub fn uniform_bounds(&self) -> (f64, f64) {
        (self.uniform_low.unwrap_or(-1.0), self.uniform_high.unwrap_or(1.0))
    }
}

#[derive(Clone, Debug, Default, Args, Deserialize)]
pub struct OutputParams {
    /// Adapted matrix format [default: from the output extension]
    #[arg(long, value_enum)]
    pub output_format: Option<MatrixFormat>,
    /// Report format [default: json]
    #[arg(long, value_enum)]
    pub report_format: Option<ReportKind>,
    /// Include per-token provenance in the report [default: false]
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    pub provenance: Option<bool>,
}

impl OutputParams {
    pub fn merge(self, other: Self) -> Self {
        merge_fields!(self, other; output_format, report_format, provenance)
    }

    pub fn report_kind(&self) -> ReportKind {
        self.report_format.unwrap_or(ReportKind::Json)
    }
}

/// Everything `run-all` needs.
#[derive(Clone, Debug, Default, Args, Deserialize)]
pub struct PipelineConfig {
    /// Raw corpus (JSON lines or plain text)
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Corpus format [default: jsonl]
    #[arg(long, value_enum)]
    pub input_format: Option<CorpusFormat>,
    /// Emoji table (TSV: emoji, alias) [default: built-in]
    #[arg(long)]
    pub emoji_map: Option<PathBuf>,
    /// Fraction of records held out as a development split
    #[arg(long)]
    pub dev_fraction: Option<f64>,
    #[arg(long)]
    pub source_vocab: Option<PathBuf>,
    #[arg(long)]
    pub source_embeddings: Option<PathBuf>,
    /// [default: from the file extension]
    #[arg(long, value_enum)]
    pub source_format: Option<MatrixFormat>,
    /// Word vectors for fasttext-projection; trained on the corpus when absent
    #[arg(long)]
    pub vectors: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// uniform, normal, fasttext-projection or subword-average
    #[arg(long, value_parser = parse_strategy)]
    #[serde(default, deserialize_with = "de_strategy")]
    pub strategy: Option<Strategy>,
    /// Master seed [default: 0]
    #[arg(long)]
    #[serde(default, deserialize_with = "de_seed")]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub vocab: VocabParams,
    #[command(flatten)]
    #[serde(flatten)]
    pub vectors_params: VectorParams,
    #[command(flatten)]
    #[serde(flatten)]
    pub init: InitParams,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputParams,
}

fn de_strategy<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<Strategy>, D::Error> {
    let name: Option<String> = Option::deserialize(d)?;
    name.map(|n| parse_strategy(&n).map_err(serde::de::Error::custom))
        .transpose()
}

/// TOML integers are signed, so seeds above `i64::MAX` may be given as
/// strings.
fn de_seed<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<u64>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Int(u64),
        Text(String),
    }
    match Option::<Repr>::deserialize(d)? {
        None => Ok(None),
        Some(Repr::Int(v)) => Ok(Some(v)),
        Some(Repr::Text(t)) => t
            .parse()
            .map(Some)
            .map_err(|_| serde::de::Error::custom(format!("seed {t:?} is not a 64-bit unsigned integer"))),
    }
}

/// Keys accepted in a config file.
pub const CONFIG_KEYS: &[&str] = &[
    "corpus",
    "input_format",
    "emoji_map",
    "dev_fraction",
    "source_vocab",
    "source_embeddings",
    "source_format",
    "vectors",
    "output_dir",
    "strategy",
    "seed",
    "vocab_size",
    "min_pair_freq",
    "n_unused",
    "dim",
    "window",
    "negatives",
    "epochs",
    "min_count",
    "ngram_min",
    "ngram_max",
    "buckets",
    "lr",
    "workers",
    "ridge",
    "uniform_low",
    "uniform_high",
    "output_format",
    "report_format",
    "provenance",
];

impl PipelineConfig {
    /// Parses a config file. Relative paths are resolved against the file's
    /// directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let mut config = Self::parse(&text).with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or_else(|| Path::new(""));
        for p in [
            &mut config.corpus,
            &mut config.emoji_map,
            &mut config.source_vocab,
            &mut config.source_embeddings,
            &mut config.vectors,
            &mut config.output_dir,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(text)?;
        if let Some(key) = table.keys().find(|k| !CONFIG_KEYS.contains(&k.as_str())) {
            bail!("unknown key {key:?}");
        }
        Ok(toml::from_str(text)?)
    }

    pub fn merge(self, other: Self) -> Self {
        PipelineConfig {
            corpus: self.corpus.or(other.corpus),
            input_format: self.input_format.or(other.input_format),
            emoji_map: self.emoji_map.or(other.emoji_map),
            dev_fraction: self.dev_fraction.or(other.dev_fraction),
            source_vocab: self.source_vocab.or(other.source_vocab),
            source_embeddings: self.source_embeddings.or(other.source_embeddings),
            source_format: self.source_format.or(other.source_format),
            vectors: self.vectors.or(other.vectors),
            output_dir: self.output_dir.or(other.output_dir),
            strategy: self.strategy.or(other.strategy),
            seed: self.seed.or(other.seed),
            vocab: self.vocab.merge(other.vocab),
            vectors_params: self.vectors_params.merge(other.vectors_params),
            init: self.init.merge(other.init),
            output: self.output.merge(other.output),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    /// Checks that the required keys are present and the inputs exist.
    pub fn validate(&self) -> Result<()> {
        for (key, value) in [
            ("corpus", &self.corpus),
            ("source_vocab", &self.source_vocab),
            ("source_embeddings", &self.source_embeddings),
            ("output_dir", &self.output_dir),
        ] {
            if value.is_none() {
                bail!(
                    "missing {key} (set it in the config or pass --{})",
                    key.replace('_', "-")
                );
            }
        }
        if self.strategy.is_none() {
            bail!("missing strategy (set it in the config or pass --strategy)");
        }
        for path in [
            &self.corpus,
            &self.source_vocab,
            &self.source_embeddings,
            &self.vectors,
            &self.emoji_map,
        ]
        .into_iter()
        .flatten()
        {
            if !path.exists() {
                bail!("input {} does not exist", path.display());
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_documented_key_parses() {
        let text = r#"
            corpus = "c.jsonl"
            input_format = "text"
            emoji_map = "e.tsv"
            dev_fraction = 0.1
            source_vocab = "v.txt"
            source_embeddings = "e.vec"
            source_format = "binary"
            vectors = "ft.vec"
            output_dir = "out"
            strategy = "fasttext-projection"
            seed = "18446744073709551615"
            vocab_size = 100
            min_pair_freq = 3
            n_unused = 4
            dim = 8
            window = 2
            negatives = 3
            epochs = 1
            min_count = 1
            ngram_min = 2
            ngram_max = 4
            buckets = 64
            lr = 0.1
            workers = 1
            ridge = 0.5
            uniform_low = -0.5
            uniform_high = 0.5
            output_format = "text"
            report_format = "csv"
            provenance = true
        "#;
        let table: toml::Table = toml::from_str(text).unwrap();
        assert_eq!(table.len(), CONFIG_KEYS.len());
        let c = PipelineConfig::parse(text).unwrap();
        assert_eq!(c.strategy, Some(Strategy::FasttextProjection));
        assert_eq!(c.seed, Some(u64::MAX));
        assert_eq!(c.vocab.n_unused, Some(4));
        assert_eq!(c.vectors_params.workers, Some(1));
        assert_eq!(c.init.uniform_low, Some(-0.5));
        assert_eq!(c.output.report_format, Some(ReportKind::Csv));
        assert_eq!(c.output.provenance, Some(true));
    }

    #[test]
    fn bad_keys_and_values() {
        assert!(PipelineConfig::parse("colour = 1").is_err());
        assert!(PipelineConfig::parse("strategy = \"random\"").is_err());
        assert!(PipelineConfig::parse("seed = -1").is_err());
        assert!(PipelineConfig::parse("seed = \"x\"").is_err());
        assert_eq!(PipelineConfig::parse("seed = 42").unwrap().seed, Some(42));
    }

    #[test]
    fn flags_override_file() {
        let file = PipelineConfig::parse("seed = 1\ndim = 4\nstrategy = \"normal\"").unwrap();
        let flags = PipelineConfig {
            seed: Some(9),
            ..PipelineConfig::default()
        };
        let merged = flags.merge(file);
        assert_eq!(merged.seed(), 9);
        assert_eq!(merged.vectors_params.dim, Some(4));
        assert_eq!(merged.strategy, Some(Strategy::Normal));
    }
}
