//! Skipgram with negative sampling over subword-enriched input vectors.
//!
//! A word's input representation is the mean of its own row and the rows of
//! its hashed character n-grams (the word is padded with `<` and `>`).
//! Context words are predicted through a separate output matrix.

use std::cell::Cell;
use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};

use ndarray::{Array2, ArrayView2};
use rand::distr::weighted::WeightedIndex;
use rand::distr::{Distribution, Uniform};
use rand::Rng as _;

use super::{NgramFeatures, WordVectors};
use crate::seed::{self, fnv1a};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrainingMode {
    /// Deterministic for a fixed seed.
    SingleThreaded,
    /// Lock-free shared updates; lost updates are tolerated and results vary
    /// between runs.
    Hogwild { workers: usize },
}

#[derive(Clone, Debug)]
pub struct SkipgramConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub min_count: u64,
    pub ngram_min: usize,
    pub ngram_max: usize,
    pub buckets: usize,
    pub lr: f64,
    pub seed: u64,
    pub mode: TrainingMode,
}

impl Default for SkipgramConfig {
    fn default() -> Self {
        SkipgramConfig {
            dim: 50,
            window: 5,
            negatives: 5,
            epochs: 5,
            min_count: 2,
            ngram_min: 3,
            ngram_max: 6,
            buckets: 1 << 17,
            lr: 0.05,
            seed: 0,
            mode: TrainingMode::SingleThreaded,
        }
    }
}

impl SkipgramConfig {
    fn validate(&self) -> Result<()> {
        let positive = [
            ("dim", self.dim),
            ("window", self.window),
            ("negatives", self.negatives),
            ("epochs", self.epochs),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(Error::Argument(format!("{name} must be at least 1")));
            }
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Argument(format!(
                "learning rate must be positive, got {}",
                self.lr
            )));
        }
        if self.buckets > 0 && (self.ngram_min == 0 || self.ngram_min > self.ngram_max) {
            return Err(Error::Argument(format!(
                "invalid n-gram range {}..={}",
                self.ngram_min, self.ngram_max
            )));
        }
        if let TrainingMode::Hogwild { workers: 0 } = self.mode {
            return Err(Error::Argument("at least one worker required".into()));
        }
        Ok(())
    }
}

/// Character n-grams of `<word>` with lengths in `min_n..=max_n`, excluding
/// the padded word itself.
pub fn char_ngrams(word: &str, min_n: usize, max_n: usize) -> Vec<String> {
    let padded: Vec<char> = std::iter::once('<')
        .chain(word.chars())
        .chain(std::iter::once('>'))
        .collect();
    let mut out = Vec::new();
    for n in min_n.max(1)..=max_n {
        if n >= padded.len() {
            break;
        }
        for window in padded.windows(n) {
            out.push(window.iter().collect());
        }
    }
    out
}

/// Maps character n-grams to bucket indices with FNV-1a.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NgramHasher {
    pub min_n: usize,
    pub max_n: usize,
    pub buckets: usize,
}

impl NgramHasher {
    pub fn new(min_n: usize, max_n: usize, buckets: usize) -> Self {
        NgramHasher { min_n, max_n, buckets }
    }

    pub fn buckets_for(&self, word: &str) -> Vec<usize> {
        if self.buckets == 0 {
            return Vec::new();
        }
        char_ngrams(word, self.min_n, self.max_n)
            .iter()
            .map(|g| (fnv1a(g.as_bytes()) % self.buckets as u64) as usize)
            .collect()
    }
}

/// Flat parameter storage with per-element reads and writes.
trait Params {
    fn get(&self, i: usize) -> f64;
    fn set(&self, i: usize, value: f64);
}

impl Params for [Cell<f64>] {
    #[inline]
    fn get(&self, i: usize) -> f64 {
        self[i].get()
    }

    #[inline]
    fn set(&self, i: usize, value: f64) {
        self[i].set(value)
    }
}

impl Params for [AtomicU64] {
    #[inline]
    fn get(&self, i: usize) -> f64 {
        f64::from_bits(self[i].load(Ordering::Relaxed))
    }

    #[inline]
    fn set(&self, i: usize, value: f64) {
        self[i].store(value.to_bits(), Ordering::Relaxed)
    }
}

struct Kernel {
    dim: usize,
    hidden: Vec<f64>,
    grad: Vec<f64>,
}

impl Kernel {
    fn new(dim: usize) -> Self {
        Kernel {
            dim,
            hidden: vec![0.0; dim],
            grad: vec![0.0; dim],
        }
    }

    /// One SGD step on `-log σ(u_ctx·h) - Σ log σ(-u_neg·h)`; returns the
    /// loss before the update.
    fn step<P: Params + ?Sized>(
        &mut self,
        input: &P,
        output: &P,
        inputs: &[usize],
        context: usize,
        negatives: &[usize],
        lr: f64,
    ) -> f64 {
        let dim = self.dim;
        self.hidden.fill(0.0);
        for &row in inputs {
            for d in 0..dim {
                self.hidden[d] += input.get(row * dim + d);
            }
        }
        let scale = 1.0 / inputs.len() as f64;
        self.hidden.iter_mut().for_each(|h| *h *= scale);
        self.grad.fill(0.0);

        let mut loss = 0.0;
        let targets = std::iter::once((context, 1.0)).chain(negatives.iter().map(|&n| (n, 0.0)));
        for (target, label) in targets {
            let base = target * dim;
            let dot: f64 = (0..dim).map(|d| output.get(base + d) * self.hidden[d]).sum();
            let prob = sigmoid(dot);
            loss -= if label > 0.0 {
                log_sigmoid(dot)
            } else {
                log_sigmoid(-dot)
            };
            let g = lr * (label - prob);
            for d in 0..dim {
                let u = output.get(base + d);
                self.grad[d] += g * u;
                output.set(base + d, u + g * self.hidden[d]);
            }
        }

        for &row in inputs {
            for d in 0..dim {
                let i = row * dim + d;
                input.set(i, input.get(i) + self.grad[d] * scale);
            }
        }
        loss
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn log_sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        -(-x).exp().ln_1p()
    } else {
        x - x.exp().ln_1p()
    }
}

/// Negative-sampling loss of one (inputs, context, negatives) example.
/// `inputs` index rows of `input`; the other ids index rows of `output`.
pub fn negative_sampling_loss(
    input: ArrayView2<f64>,
    output: ArrayView2<f64>,
    inputs: &[usize],
    context: usize,
    negatives: &[usize],
) -> f64 {
    let mut hidden = ndarray::Array1::<f64>::zeros(input.ncols());
    for &row in inputs {
        hidden += &input.row(row);
    }
    hidden /= inputs.len() as f64;
    let mut loss = -log_sigmoid(output.row(context).dot(&hidden));
    for &n in negatives {
        loss -= log_sigmoid(-output.row(n).dot(&hidden));
    }
    loss
}

/// Applies the training update in place and returns the pre-update loss.
pub fn sgd_step(
    input: &mut Array2<f64>,
    output: &mut Array2<f64>,
    inputs: &[usize],
    context: usize,
    negatives: &[usize],
    lr: f64,
) -> f64 {
    assert_eq!(input.ncols(), output.ncols(), "input and output dimension differ");
    let dim = input.ncols();
    let input = Cell::from_mut(input.as_slice_mut().expect("standard layout")).as_slice_of_cells();
    let output = Cell::from_mut(output.as_slice_mut().expect("standard layout")).as_slice_of_cells();
    Kernel::new(dim).step(input, output, inputs, context, negatives, lr)
}

struct Prepared {
    words: Vec<String>,
    counts: Vec<u64>,
    lines: Vec<Vec<usize>>,
    input_rows: Vec<Vec<usize>>,
    word_buckets: Vec<Vec<usize>>,
    total_tokens: u64,
}

fn prepare<S: AsRef<str>>(corpus: &[S], config: &SkipgramConfig) -> Result<Prepared> {
    let mut counts: HashMap<&str, u64> = HashMap::new();
    for line in corpus {
        for token in line.as_ref().split_whitespace() {
            *counts.entry(token).or_insert(0) += 1;
        }
    }
    let mut kept: Vec<(&str, u64)> = counts.into_iter().filter(|&(_, c)| c >= config.min_count).collect();
    if kept.is_empty() {
        return Err(Error::Training(format!(
            "no word occurs at least {} times",
            config.min_count
        )));
    }
    kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));

    let index: HashMap<&str, usize> = kept.iter().enumerate().map(|(i, (w, _))| (*w, i)).collect();
    let lines: Vec<Vec<usize>> = corpus
        .iter()
        .map(|line| {
            line.as_ref()
                .split_whitespace()
                .filter_map(|t| index.get(t).copied())
                .collect()
        })
        .collect();
    let total_tokens = lines.iter().map(|l| l.len() as u64).sum();

    let hasher = NgramHasher::new(config.ngram_min, config.ngram_max, config.buckets);
    let n_words = kept.len();
    let word_buckets: Vec<Vec<usize>> = kept.iter().map(|(w, _)| hasher.buckets_for(w)).collect();
    let input_rows = word_buckets
        .iter()
        .enumerate()
        .map(|(id, buckets)| std::iter::once(id).chain(buckets.iter().map(|b| n_words + b)).collect())
        .collect();

    Ok(Prepared {
        words: kept.iter().map(|(w, _)| w.to_string()).collect(),
        counts: kept.iter().map(|(_, c)| *c).collect(),
        lines,
        input_rows,
        word_buckets,
        total_tokens,
    })
}

struct Worker<'a> {
    data: &'a Prepared,
    config: &'a SkipgramConfig,
    sampler: &'a WeightedIndex<f64>,
    kernel: Kernel,
    negatives: Vec<usize>,
    rng: seed::Rng,
}

impl Worker<'_> {
    fn train_line<P: Params + ?Sized>(&mut self, input: &P, output: &P, line: &[usize], lr: f64) {
        let n_words = self.data.words.len();
        for (pos, &center) in line.iter().enumerate() {
            let reach = self.rng.random_range(1..=self.config.window);
            let lo = pos.saturating_sub(reach);
            let hi = (pos + reach).min(line.len() - 1);
            for (ctx_pos, &context) in line.iter().enumerate().take(hi + 1).skip(lo) {
                if ctx_pos == pos {
                    continue;
                }
                self.negatives.clear();
                while self.negatives.len() < self.config.negatives {
                    let n = self.sampler.sample(&mut self.rng);
                    if n != context || n_words == 1 {
                        self.negatives.push(n);
                    }
                }
                self.kernel.step(
                    input,
                    output,
                    &self.data.input_rows[center],
                    context,
                    &self.negatives,
                    lr,
                );
            }
        }
    }
}

fn decayed(lr: f64, processed: u64, total: u64) -> f64 {
    lr * (1.0 - processed as f64 / total as f64).max(0.0)
}

pub fn train_skipgram<S: AsRef<str>>(corpus: &[S], config: &SkipgramConfig) -> Result<WordVectors> {
    config.validate()?;
    let data = prepare(corpus, config)?;
    let dim = config.dim;
    let n_words = data.words.len();
    let n_input = n_words + config.buckets;

    let mut rng = seed::rng(config.seed);
    let bound = 1.0 / dim as f64;
    let init = Uniform::new(-bound, bound).expect("valid bounds");
    let mut input: Vec<f64> = (0..n_input * dim).map(|_| init.sample(&mut rng)).collect();
    let mut output = vec![0.0f64; n_words * dim];

    let weights: Vec<f64> = data.counts.iter().map(|&c| (c as f64).powf(0.75)).collect();
    let sampler = WeightedIndex::new(&weights).expect("positive counts");
    let total = config.epochs as u64 * data.total_tokens.max(1);

    match config.mode {
        TrainingMode::SingleThreaded => {
            let input_cells = Cell::from_mut(input.as_mut_slice()).as_slice_of_cells();
            let output_cells = Cell::from_mut(output.as_mut_slice()).as_slice_of_cells();
            let mut worker = Worker {
                data: &data,
                config,
                sampler: &sampler,
                kernel: Kernel::new(dim),
                negatives: Vec::with_capacity(config.negatives),
                rng,
            };
            let mut processed = 0u64;
            for _ in 0..config.epochs {
                for line in &data.lines {
                    let lr = decayed(config.lr, processed, total);
                    worker.train_line(input_cells, output_cells, line, lr);
                    processed += line.len() as u64;
                }
            }
        }
        TrainingMode::Hogwild { workers } => {
            let shared_input: Vec<AtomicU64> = input.iter().map(|v| AtomicU64::new(v.to_bits())).collect();
            let shared_output: Vec<AtomicU64> = output.iter().map(|v| AtomicU64::new(v.to_bits())).collect();
            let processed = AtomicU64::new(0);
            std::thread::scope(|scope| {
                for w in 0..workers {
                    let (data, sampler) = (&data, &sampler);
                    let (shared_input, shared_output, processed) = (&shared_input, &shared_output, &processed);
                    scope.spawn(move || {
                        let mut worker = Worker {
                            data,
                            config,
                            sampler,
                            kernel: Kernel::new(dim),
                            negatives: Vec::with_capacity(config.negatives),
                            rng: seed::rng(seed::derive_seed(config.seed, &format!("skipgram-worker-{w}"))),
                        };
                        for _ in 0..config.epochs {
                            for line in data.lines.iter().skip(w).step_by(workers) {
                                let lr = decayed(config.lr, processed.load(Ordering::Relaxed), total);
                                worker.train_line(shared_input.as_slice(), shared_output.as_slice(), line, lr);
                                processed.fetch_add(line.len() as u64, Ordering::Relaxed);
                            }
                        }
                    });
                }
            });
            input = shared_input
                .iter()
                .map(|a| f64::from_bits(a.load(Ordering::Relaxed)))
                .collect();
        }
    }

    if input.iter().any(|v| !v.is_finite()) {
        return Err(Error::Training("parameters diverged to non-finite values".into()));
    }
    let ngram_rows =
        Array2::from_shape_vec((config.buckets, dim), input.split_off(n_words * dim)).expect("input layer shape");
    let word_rows = Array2::from_shape_vec((n_words, dim), input).expect("input layer shape");
    let ngrams = (config.buckets > 0).then(|| NgramFeatures {
        hasher: NgramHasher::new(config.ngram_min, config.ngram_max, config.buckets),
        rows: ngram_rows,
        word_buckets: data.word_buckets.clone(),
    });
    WordVectors::build(data.words, word_rows, ngrams)
}

#[cfg(test)]
mod tests {
    use ndarray::Array2;
    use rand::distr::{Distribution, Uniform};

    use super::*;

    #[test]
    fn ngrams_of_short_word() {
        assert_eq!(char_ngrams("ab", 3, 6), vec!["<ab", "ab>"]);
        assert_eq!(
            char_ngrams("abc", 2, 3),
            vec!["<a", "ab", "bc", "c>", "<ab", "abc", "bc>"]
        );
        assert!(char_ngrams("a", 3, 6).is_empty());
    }

    #[test]
    fn hasher_is_stable() {
        let h = NgramHasher::new(3, 6, 1 << 17);
        let b = h.buckets_for("word");
        assert_eq!(b, h.buckets_for("word"));
        assert_eq!(b.len(), char_ngrams("word", 3, 6).len());
        assert!(b.iter().all(|&x| x < 1 << 17));
        assert!(NgramHasher::new(3, 6, 0).buckets_for("word").is_empty());
    }

    #[test]
    fn log_sigmoid_is_stable() {
        assert!((log_sigmoid(0.0) - 0.5f64.ln()).abs() < 1e-15);
        assert!(log_sigmoid(-800.0).is_finite());
        assert!(log_sigmoid(800.0) == 0.0);
    }

    fn random(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
        let mut rng = seed::rng(seed);
        let dist = Uniform::new(-0.5, 0.5).unwrap();
        Array2::from_shape_fn((rows, cols), |_| dist.sample(&mut rng))
    }

    #[test]
    fn step_is_gradient_descent() {
        let input0 = random(6, 4, 1);
        let output0 = random(5, 4, 2);
        let (inputs, context, negatives) = ([0usize, 2, 5], 1usize, [0usize, 3, 4]);

        let (mut input, mut output) = (input0.clone(), output0.clone());
        let lr = 1.0;
        let loss = sgd_step(&mut input, &mut output, &inputs, context, &negatives, lr);
        let expected = negative_sampling_loss(input0.view(), output0.view(), &inputs, context, &negatives);
        assert!((loss - expected).abs() < 1e-12);

        let eps = 1e-5;
        let mut analytic = Vec::new();
        let mut numeric = Vec::new();
        for which in 0..2 {
            let (base, updated) = if which == 0 {
                (&input0, &input)
            } else {
                (&output0, &output)
            };
            for idx in 0..base.len() {
                let (r, c) = (idx / base.ncols(), idx % base.ncols());
                let mut plus = base.clone();
                plus[[r, c]] += eps;
                let mut minus = base.clone();
                minus[[r, c]] -= eps;
                let (lp, lm) = if which == 0 {
                    (
                        negative_sampling_loss(plus.view(), output0.view(), &inputs, context, &negatives),
                        negative_sampling_loss(minus.view(), output0.view(), &inputs, context, &negatives),
                    )
                } else {
                    (
                        negative_sampling_loss(input0.view(), plus.view(), &inputs, context, &negatives),
                        negative_sampling_loss(input0.view(), minus.view(), &inputs, context, &negatives),
                    )
                };
                numeric.push((lp - lm) / (2.0 * eps));
                analytic.push((base[[r, c]] - updated[[r, c]]) / lr);
            }
        }
        let diff: f64 = analytic
            .iter()
            .zip(&numeric)
            .map(|(a, n)| (a - n).powi(2))
            .sum::<f64>()
            .sqrt();
        let norm: f64 = numeric.iter().map(|n| n * n).sum::<f64>().sqrt();
        assert!(diff / norm < 1e-4, "relative error {}", diff / norm);
    }

    fn small_config() -> SkipgramConfig {
        SkipgramConfig {
            dim: 8,
            epochs: 2,
            min_count: 1,
            buckets: 64,
            seed: 11,
            ..SkipgramConfig::default()
        }
    }

    #[test]
    fn precondition_errors() {
        let corpus = ["a b c"];
        for broken in [
            SkipgramConfig {
                epochs: 0,
                ..small_config()
            },
            SkipgramConfig {
                dim: 0,
                ..small_config()
            },
            SkipgramConfig {
                window: 0,
                ..small_config()
            },
            SkipgramConfig {
                negatives: 0,
                ..small_config()
            },
            SkipgramConfig {
                lr: 0.0,
                ..small_config()
            },
            SkipgramConfig {
                ngram_min: 5,
                ngram_max: 3,
                ..small_config()
            },
            SkipgramConfig {
                mode: TrainingMode::Hogwild { workers: 0 },
                ..small_config()
            },
        ] {
            assert!(matches!(train_skipgram(&corpus, &broken), Err(Error::Argument(_))));
        }
        let rare = SkipgramConfig {
            min_count: 5,
            ..small_config()
        };
        assert!(matches!(train_skipgram(&corpus, &rare), Err(Error::Training(_))));
    }

    #[test]
    fn vocabulary_sorted_by_count() {
        let corpus = ["b a b", "c b a", "d"];
        let config = SkipgramConfig {
            min_count: 2,
            ..small_config()
        };
        let v = train_skipgram(&corpus, &config).unwrap();
        assert_eq!(v.vocab(), ["b", "a"]);
        assert_eq!(v.dim(), 8);
        assert_eq!(v.ngram_buckets(), 64);
    }

    #[test]
    fn single_threaded_is_deterministic() {
        let corpus = ["the cat sat", "the dog sat", "a cat and a dog"];
        let a = train_skipgram(&corpus, &small_config()).unwrap();
        let b = train_skipgram(&corpus, &small_config()).unwrap();
        assert_eq!(a, b);
        let c = train_skipgram(
            &corpus,
            &SkipgramConfig {
                seed: 12,
                ..small_config()
            },
        )
        .unwrap();
        assert_ne!(a.rows(), c.rows());
    }

    #[test]
    fn hogwild_produces_finite_vectors() {
        let corpus: Vec<String> = (0..200).map(|i| format!("w{} w{} w{}", i % 7, i % 5, i % 3)).collect();
        let config = SkipgramConfig {
            mode: TrainingMode::Hogwild { workers: 4 },
            ..small_config()
        };
        let v = train_skipgram(&corpus, &config).unwrap();
        assert!(v.rows().iter().all(|x| x.is_finite()));
        assert_eq!(v.len(), 7);
    }

    #[test]
    fn single_word_vocabulary() {
        let v = train_skipgram(&["x x x"], &small_config()).unwrap();
        assert_eq!(v.len(), 1);
    }

    #[test]
    fn trains_300_dimensional_vectors() {
        // IndoBERTweet's fastText vectors were 300d.
        let corpus: Vec<String> = (0..50).map(|i| format!("w{} w{} w{}", i % 7, i % 5, i % 3)).collect();
        let config = SkipgramConfig {
            dim: 300,
            buckets: 256,
            ..small_config()
        };
        let v = train_skipgram(&corpus, &config).unwrap();
        assert_eq!(v.dim(), 300);
        assert!(v.rows().iter().all(|x| x.is_finite()));
    }
}
