//! The subcommands. Each `cmd_*` resolves its arguments and calls the
//! matching pipeline step, which `run-all` also uses directly.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use vt_core::analysis::{emit_report, TransplantReport};
use vt_core::corpus::{dedup_stream, split_holdout, EmojiMap, InputFormat, RecordReader, TweetNormalizer};
use vt_core::seed::derive_seed;
use vt_core::tokenizer::{load_vocab, save_vocab, tokenize_text, Vocabulary};
use vt_core::transplant::{
    align_vocabs, fit_projection, init_normal, init_projection, init_subword_average, init_uniform, read_binary,
    read_text_matrix, reconcile_size, write_binary, write_text_matrix, EmbeddingMatrix, Initialized, Strategy,
};
use vt_core::vectors::{load_text, save_text, train_skipgram, WordVectors};

use crate::config::{InitParams, MatrixFormat, OutputParams, PipelineConfig, ReportKind, VectorParams, VocabParams};
use crate::{AnalyzeArgs, PreprocessArgs, RunAllArgs, TrainVectorsArgs, TrainVocabArgs, TransplantArgs, UsageError};

pub const STAGE_SPLIT: &str = "split";
pub const STAGE_VECTORS: &str = "vectors";
pub const STAGE_INIT: &str = "init";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PreprocessCounts {
    pub read: usize,
    pub duplicates: usize,
    /// Records whose normalized text was empty; they are not written.
    pub empty: usize,
    pub written: usize,
    pub dev: usize,
}

fn emoji_map(path: Option<&Path>) -> Result<EmojiMap> {
    Ok(match path {
        Some(p) => EmojiMap::load(p)?,
        None => EmojiMap::builtin(),
    })
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(file))
}

fn write_lines<'a>(path: &Path, lines: impl IntoIterator<Item = &'a str>) -> Result<()> {
    let mut w = create(path)?;
    for line in lines {
        writeln!(w, "{line}").with_context(|| format!("cannot write {}", path.display()))?;
    }
    w.flush().with_context(|| format!("cannot write {}", path.display()))
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(text.lines().map(str::to_owned).collect())
}

/// Deduplicates by id, then normalizes. Streams unless a dev split is asked
/// for.
pub fn preprocess(
    input: &Path,
    output: &Path,
    format: InputFormat,
    emoji: &EmojiMap,
    dev: Option<(&Path, f64)>,
    seed: u64,
) -> Result<PreprocessCounts> {
    let file = File::open(input).with_context(|| format!("cannot open {}", input.display()))?;
    let normalizer = TweetNormalizer::new(emoji.clone());
    let mut counts = PreprocessCounts::default();
    let mut failure = None;
    let mut kept = Vec::new();
    let mut unique = 0;
    {
        let records = RecordReader::new(BufReader::new(file), format, input).map_while(|r| match r {
            Ok(record) => {
                counts.read += 1;
                Some(record)
            }
            Err(e) => {
                failure = Some(e);
                None
            }
        });
        let mut out = match dev {
            None => Some(create(output)?),
            Some(_) => None,
        };
        for record in dedup_stream(records) {
            unique += 1;
            let text = normalizer.normalize(&record.text);
            if text.is_empty() {
                counts.empty += 1;
                continue;
            }
            match out.as_mut() {
                Some(w) => {
                    writeln!(w, "{text}").with_context(|| format!("cannot write {}", output.display()))?;
                    counts.written += 1;
                }
                None => kept.push(text),
            }
        }
        if let Some(mut w) = out {
            w.flush()
                .with_context(|| format!("cannot write {}", output.display()))?;
        }
    }
    if let Some(e) = failure {
        return Err(e.into());
    }
    counts.duplicates = counts.read - unique;

    if let Some((dev_path, fraction)) = dev {
        let (train, held) = split_holdout(kept, fraction, derive_seed(seed, STAGE_SPLIT))?;
        write_lines(output, train.iter().map(String::as_str))?;
        write_lines(dev_path, held.iter().map(String::as_str))?;
        counts.written = train.len();
        counts.dev = held.len();
    }
    Ok(counts)
}

pub fn train_vocab(corpus: &Path, output: &Path, params: &VocabParams, default_size: usize) -> Result<Vocabulary> {
    let lines = read_lines(corpus)?;
    let vocab = params
        .trainer(default_size)
        .train(lines.iter().map(String::as_str))
        .with_context(|| format!("training a vocabulary on {}", corpus.display()))?;
    save_vocab(&vocab, output)?;
    Ok(vocab)
}

pub fn train_vectors(
    corpus: &Path,
    output: &Path,
    tokenizer: Option<&Vocabulary>,
    params: &VectorParams,
    seed: u64,
) -> Result<WordVectors> {
    let mut lines = read_lines(corpus)?;
    if let Some(vocab) = tokenizer {
        for line in &mut lines {
            *line = tokenize_text(line, vocab).join(" ");
        }
    }
    let config = params.skipgram(derive_seed(seed, STAGE_VECTORS));
    let vectors =
        train_skipgram(&lines, &config).with_context(|| format!("training vectors on {}", corpus.display()))?;
    if let Some(dir) = output.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    save_text(&vectors, output)?;
    Ok(vectors)
}

/// Inputs and outputs of one transplant.
#[derive(Clone, Debug)]
pub struct TransplantJob {
    pub source_vocab: PathBuf,
    pub source_embeddings: PathBuf,
    pub source_format: Option<MatrixFormat>,
    pub target_vocab: PathBuf,
    pub strategy: Strategy,
    pub vectors: Option<PathBuf>,
    pub seed: u64,
    pub init: InitParams,
    pub output: PathBuf,
    pub output_vocab: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub out: OutputParams,
}

impl TransplantJob {
    pub fn output_vocab_path(&self) -> PathBuf {
        self.output_vocab
            .clone()
            .unwrap_or_else(|| self.output.with_extension("vocab.txt"))
    }

    pub fn report_path(&self) -> PathBuf {
        self.report.clone().unwrap_or_else(|| match self.out.report_kind() {
            ReportKind::Json => self.output.with_extension("report.json"),
            ReportKind::Csv => self.output.with_extension("report"),
        })
    }

    /// Fails before any file is read when the job cannot run.
    pub fn check(&self) -> Result<()> {
        if self.strategy == Strategy::FasttextProjection && self.vectors.is_none() {
            return Err(UsageError("strategy fasttext-projection requires --vectors".into()).into());
        }
        Ok(())
    }
}

pub fn load_source(vocab_path: &Path, matrix_path: &Path, format: Option<MatrixFormat>) -> Result<EmbeddingMatrix> {
    let vocab = load_vocab(vocab_path)?;
    match format.unwrap_or_else(|| MatrixFormat::infer(matrix_path)) {
        MatrixFormat::Binary => Ok(read_binary(matrix_path, Some(vocab))?),
        MatrixFormat::Text => {
            let (words, rows) = read_text_matrix(matrix_path)?.into_parts();
            if let Some(row) = (0..words.len().max(vocab.len())).find(|&i| words.token(i) != vocab.token(i)) {
                bail!(
                    "{}: row {} is {:?} but {} has {:?} there",
                    matrix_path.display(),
                    row,
                    words.token(row).unwrap_or("<end>"),
                    vocab_path.display(),
                    vocab.token(row).unwrap_or("<end>")
                );
            }
            Ok(EmbeddingMatrix::new(vocab, rows)?)
        }
    }
}

fn initialize(
    job: &TransplantJob,
    src: &EmbeddingMatrix,
    align: &vt_core::transplant::VocabAlignment,
) -> Result<Initialized> {
    let seed = derive_seed(job.seed, STAGE_INIT);
    Ok(match job.strategy {
        Strategy::Uniform => {
            let (lo, hi) = job.init.uniform_bounds();
            init_uniform(align, src, seed, lo, hi)?
        }
        Strategy::Normal => init_normal(align, src, seed)?,
        Strategy::SubwordAverage => init_subword_average(align, src)?,
        Strategy::FasttextProjection => {
            let path = job.vectors.as_deref().expect("checked");
            let vectors = load_text(path)?;
            let model = fit_projection(&vectors, src, align.shared(), job.init.ridge())?;
            init_projection(align, src, &vectors, &model)?
        }
    })
}

/// The name the binary sidecar records for the vocabulary file.
fn vocab_reference(matrix: &Path, vocab: &Path) -> String {
    let same_dir = matrix.parent().map(Path::to_path_buf) == vocab.parent().map(Path::to_path_buf);
    match vocab.file_name() {
        Some(name) if same_dir => name.to_string_lossy().into_owned(),
        _ => std::path::absolute(vocab)
            .unwrap_or_else(|_| vocab.to_path_buf())
            .to_string_lossy()
            .into_owned(),
    }
}

pub fn transplant(job: &TransplantJob) -> Result<TransplantReport> {
    job.check()?;
    let src = load_source(&job.source_vocab, &job.source_embeddings, job.source_format)?;
    let target = load_vocab(&job.target_vocab)?;
    let target = reconcile_size(src.vocab(), &target).with_context(|| {
        format!(
            "reconciling {} with {}",
            job.target_vocab.display(),
            job.source_vocab.display()
        )
    })?;
    let align = align_vocabs(src.vocab(), &target);
    log::info!(
        "{} shared and {} new types, strategy {}",
        align.shared().len(),
        align.new_types().len(),
        job.strategy
    );
    let init = initialize(job, &src, &align)?;
    let report = TransplantReport::build(
        &align,
        src.vocab(),
        Some(job.strategy),
        Some(&init),
        job.out.provenance.unwrap_or(false),
    )?;

    let vocab_path = job.output_vocab_path();
    if let Some(dir) = job.output.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    save_vocab(init.matrix.vocab(), &vocab_path)?;
    match job
        .out
        .output_format
        .unwrap_or_else(|| MatrixFormat::infer(&job.output))
    {
        MatrixFormat::Text => write_text_matrix(&init.matrix, &job.output)?,
        MatrixFormat::Binary => write_binary(&init.matrix, &job.output, &vocab_reference(&job.output, &vocab_path))?,
    }
    emit_report(&report, job.report_path(), job.out.report_kind().into())?;
    Ok(report)
}

pub fn analyze(source_vocab: &Path, target_vocab: &Path, report: &Path, kind: ReportKind) -> Result<TransplantReport> {
    let src = load_vocab(source_vocab)?;
    let tgt = load_vocab(target_vocab)?;
    let result = TransplantReport::build(&align_vocabs(&src, &tgt), &src, None, None, false)?;
    if let Some(dir) = report.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    emit_report(&result, report, kind.into())?;
    Ok(result)
}

fn print_report(report: &TransplantReport) {
    println!(
        "shared {} new {} ({:.2}%), mean subwords {}",
        report.n_shared,
        report.n_new,
        report.pct_new,
        report.mean_subwords.map_or("n/a".to_string(), |m| format!("{m:.4}"))
    );
}

pub fn cmd_preprocess(args: PreprocessArgs) -> Result<()> {
    if let Some(f) = args.dev_fraction {
        if !(f > 0.0 && f < 1.0) {
            return Err(UsageError(format!("--dev-fraction must lie in (0, 1), got {f}")).into());
        }
    }
    let emoji = emoji_map(args.emoji_map.as_deref())?;
    let dev = args.dev_output.as_deref().zip(args.dev_fraction);
    let c = preprocess(
        &args.input,
        &args.output,
        args.input_format.into(),
        &emoji,
        dev,
        args.seed,
    )?;
    println!(
        "read {} records, {} duplicates, {} empty, wrote {} lines ({} dev)",
        c.read, c.duplicates, c.empty, c.written, c.dev
    );
    Ok(())
}

pub fn cmd_train_vocab(args: TrainVocabArgs) -> Result<()> {
    let default_size = vt_core::tokenizer::WordPieceTrainer::default().target_size;
    let vocab = train_vocab(&args.corpus, &args.output, &args.params, default_size)?;
    println!("wrote {} tokens to {}", vocab.len(), args.output.display());
    Ok(())
}

pub fn cmd_train_vectors(args: TrainVectorsArgs) -> Result<()> {
    let tokenizer = args.tokenizer_vocab.as_deref().map(load_vocab).transpose()?;
    let vectors = train_vectors(&args.corpus, &args.output, tokenizer.as_ref(), &args.params, args.seed)?;
    println!(
        "wrote {} vectors of dim {} to {}",
        vectors.len(),
        vectors.dim(),
        args.output.display()
    );
    Ok(())
}

pub fn cmd_transplant(args: TransplantArgs) -> Result<()> {
    let job = TransplantJob {
        source_vocab: args.source_vocab,
        source_embeddings: args.source_embeddings,
        source_format: args.source_format,
        target_vocab: args.target_vocab,
        strategy: args.strategy,
        vectors: args.vectors,
        seed: args.seed,
        init: args.init,
        output: args.output,
        output_vocab: args.output_vocab,
        report: args.report,
        out: args.out,
    };
    let report = transplant(&job)?;
    print_report(&report);
    Ok(())
}

pub fn cmd_analyze(args: AnalyzeArgs) -> Result<()> {
    let report = analyze(&args.source_vocab, &args.target_vocab, &args.report, args.report_format)?;
    print_report(&report);
    Ok(())
}

/// Output layout of `run-all` inside the output directory.
pub struct RunLayout {
    pub corpus: PathBuf,
    pub dev: PathBuf,
    pub vocab: PathBuf,
    pub vectors: PathBuf,
    pub matrix: PathBuf,
    pub matrix_vocab: PathBuf,
    pub report: PathBuf,
    pub analysis: PathBuf,
}

impl RunLayout {
    pub fn new(dir: &Path, format: MatrixFormat, report: ReportKind) -> Self {
        let ext = match report {
            ReportKind::Json => ".json",
            ReportKind::Csv => "",
        };
        RunLayout {
            corpus: dir.join("corpus.txt"),
            dev: dir.join("dev.txt"),
            vocab: dir.join("vocab.txt"),
            vectors: dir.join("vectors.vec"),
            matrix: dir.join(match format {
                MatrixFormat::Text => "adapted.vec",
                MatrixFormat::Binary => "adapted.bin",
            }),
            matrix_vocab: dir.join("adapted.vocab.txt"),
            report: dir.join(format!("report{ext}")),
            analysis: dir.join(format!("analysis{ext}")),
        }
    }
}

pub fn run_all(config: PipelineConfig) -> Result<TransplantReport> {
    config.validate()?;
    let strategy = config.strategy.expect("validated");
    let seed = config.seed();
    let dir = config.output_dir.clone().expect("validated");
    let format = config.output.output_format.unwrap_or(MatrixFormat::Text);
    let kind = config.output.report_kind();
    let layout = RunLayout::new(&dir, format, kind);
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;

    let corpus = config.corpus.as_deref().expect("validated");
    let emoji = emoji_map(config.emoji_map.as_deref())?;
    let dev = config.dev_fraction.map(|f| (layout.dev.as_path(), f));
    let input_format = config.input_format.unwrap_or(crate::config::CorpusFormat::Jsonl).into();
    let counts = preprocess(corpus, &layout.corpus, input_format, &emoji, dev, seed)?;
    log::info!("preprocessed {} records into {} lines", counts.read, counts.written);

    let source_vocab = config.source_vocab.clone().expect("validated");
    let source_size = load_vocab(&source_vocab)?.len();
    let target = train_vocab(&layout.corpus, &layout.vocab, &config.vocab, source_size)?;
    log::info!("trained a vocabulary of {} tokens", target.len());

    let vectors = match (strategy, &config.vectors) {
        (Strategy::FasttextProjection, None) => {
            train_vectors(
                &layout.corpus,
                &layout.vectors,
                Some(&target),
                &config.vectors_params,
                seed,
            )?;
            Some(layout.vectors.clone())
        }
        (_, given) => given.clone(),
    };

    let job = TransplantJob {
        source_vocab: source_vocab.clone(),
        source_embeddings: config.source_embeddings.clone().expect("validated"),
        source_format: config.source_format,
        target_vocab: layout.vocab.clone(),
        strategy,
        vectors,
        seed,
        init: config.init.clone(),
        output: layout.matrix.clone(),
        output_vocab: Some(layout.matrix_vocab.clone()),
        report: Some(layout.report.clone()),
        out: OutputParams {
            output_format: Some(format),
            ..config.output.clone()
        },
    };
    let report = transplant(&job)?;
    analyze(&source_vocab, &layout.vocab, &layout.analysis, kind)?;
    Ok(report)
}

pub fn cmd_run_all(args: RunAllArgs) -> Result<()> {
    let file = match &args.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    let report = run_all(args.settings.merge(file))?;
    print_report(&report);
    Ok(())
}
