//! Skipgram word vectors with hashed character n-gram features.

mod skipgram;
mod text;

use std::collections::HashMap;

use ndarray::{Array1, Array2, ArrayView1};

use crate::{Error, Result};

pub use skipgram::{
    char_ngrams, negative_sampling_loss, sgd_step, train_skipgram, NgramHasher, SkipgramConfig, TrainingMode,
};
pub use text::{format_g9, load_text, read_text, save_text, write_text};

/// Word vectors, optionally with n-gram rows that contribute to each word's
/// representation.
#[derive(Clone, Debug, PartialEq)]
pub struct WordVectors {
    vocab: Vec<String>,
    index: HashMap<String, usize>,
    rows: Array2<f64>,
    ngrams: Option<NgramFeatures>,
}

/// Hashed n-gram rows plus, per word, the buckets it uses.
#[derive(Clone, Debug, PartialEq)]
pub struct NgramFeatures {
    pub hasher: NgramHasher,
    pub rows: Array2<f64>,
    pub word_buckets: Vec<Vec<usize>>,
}

impl WordVectors {
    /// Plain word rows without n-gram features.
    pub fn new(vocab: Vec<String>, rows: Array2<f64>) -> Result<Self> {
        Self::build(vocab, rows, None)
    }

    pub(crate) fn build(vocab: Vec<String>, rows: Array2<f64>, ngrams: Option<NgramFeatures>) -> Result<Self> {
        if vocab.len() != rows.nrows() {
            return Err(Error::Argument(format!(
                "{} words but {} rows",
                vocab.len(),
                rows.nrows()
            )));
        }
        if rows.ncols() == 0 {
            return Err(Error::Argument("vector dimension must be positive".into()));
        }
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("word vectors contain non-finite values".into()));
        }
        if let Some(features) = &ngrams {
            if features.rows.ncols() != rows.ncols() || features.word_buckets.len() != vocab.len() {
                return Err(Error::Argument("n-gram features do not match the word rows".into()));
            }
        }
        let mut index = HashMap::with_capacity(vocab.len());
        for (i, word) in vocab.iter().enumerate() {
            if index.insert(word.clone(), i).is_some() {
                return Err(Error::Argument(format!("duplicate word {word:?}")));
            }
        }
        Ok(WordVectors {
            vocab,
            index,
            rows,
            ngrams,
        })
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn len(&self) -> usize {
        self.vocab.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vocab.is_empty()
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    pub fn word_index(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    /// Raw word rows (without n-gram contributions).
    pub fn rows(&self) -> &Array2<f64> {
        &self.rows
    }

    pub fn ngram_features(&self) -> Option<&NgramFeatures> {
        self.ngrams.as_ref()
    }

    pub fn ngram_buckets(&self) -> usize {
        self.ngrams.as_ref().map_or(0, |f| f.rows.nrows())
    }

    /// Representation of a known word: the mean of its word row and its
    /// n-gram rows.
    pub fn embedding(&self, word: &str) -> Option<Array1<f64>> {
        self.word_index(word).map(|idx| self.embedding_at(idx))
    }

    pub fn embedding_at(&self, idx: usize) -> Array1<f64> {
        let mut out = self.rows.row(idx).to_owned();
        if let Some(features) = &self.ngrams {
            let buckets = &features.word_buckets[idx];
            for &b in buckets {
                out += &features.rows.row(b);
            }
            out /= (1 + buckets.len()) as f64;
        }
        out
    }

    /// Copy with every word's composed embedding as a plain row.
    pub fn to_plain(&self) -> WordVectors {
        let mut rows = Array2::zeros(self.rows.raw_dim());
        for i in 0..self.len() {
            rows.row_mut(i).assign(&self.embedding_at(i));
        }
        WordVectors {
            vocab: self.vocab.clone(),
            index: self.index.clone(),
            rows,
            ngrams: None,
        }
    }
}

pub fn cosine(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    let denom = a.dot(&a).sqrt() * b.dot(&b).sqrt();
    if denom == 0.0 {
        0.0
    } else {
        a.dot(&b) / denom
    }
}
