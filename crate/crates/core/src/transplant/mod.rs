//! Vocabulary transplantation: align a target vocabulary with a source one
//! and build the target embedding matrix.
//!
//! Rows of shared tokens (including all special tokens) are copied from the
//! source verbatim. Rows of new tokens come from one of four
//! [`Strategy`]s. Unused placeholders take the source row of the same name
//! when there is one and are zero otherwise.

mod init;
mod io;
mod projection;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::tokenizer::Vocabulary;
use crate::{Error, Result};

pub use init::{fit_distribution, init_normal, init_subword_average, init_uniform, DistributionFit};
pub use io::{read_binary, read_text_matrix, sidecar_path, write_binary, write_text_matrix, BinaryHeader};
pub use projection::{fit_projection, init_projection, residual, solve_normal_equations, ProjectionModel};

/// Dense embedding rows aligned with a vocabulary.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    vocab: Vocabulary,
    rows: Array2<f64>,
}

impl EmbeddingMatrix {
    pub fn new(vocab: Vocabulary, rows: Array2<f64>) -> Result<Self> {
        if rows.nrows() != vocab.len() {
            return Err(Error::Argument(format!(
                "embedding matrix has {} rows for a vocabulary of {}",
                rows.nrows(),
                vocab.len()
            )));
        }
        if rows.ncols() == 0 {
            return Err(Error::Argument("embedding dimension must be positive".into()));
        }
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("embedding matrix contains non-finite values".into()));
        }
        Ok(EmbeddingMatrix { vocab, rows })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn rows(&self) -> &Array2<f64> {
        &self.rows
    }

    pub fn dim(&self) -> usize {
        self.rows.ncols()
    }

    pub fn len(&self) -> usize {
        self.rows.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.nrows() == 0
    }

    pub fn row(&self, token: &str) -> Option<ArrayView1<'_, f64>> {
        self.vocab.id(token).map(|id| self.rows.row(id))
    }

    pub fn into_parts(self) -> (Vocabulary, Array2<f64>) {
        (self.vocab, self.rows)
    }
}

/// Shared/new partition of a target vocabulary against a source vocabulary.
/// Unused placeholders of either side belong to neither set.
#[derive(Clone, Debug, PartialEq)]
pub struct VocabAlignment {
    target: Vocabulary,
    shared: Vec<String>,
    new: Vec<String>,
    src_id: HashMap<String, usize>,
    tgt_id: HashMap<String, usize>,
}

impl VocabAlignment {
    pub fn target(&self) -> &Vocabulary {
        &self.target
    }

    /// Shared tokens in target-ID order.
    pub fn shared(&self) -> &[String] {
        &self.shared
    }

    /// New tokens in target-ID order.
    pub fn new_types(&self) -> &[String] {
        &self.new
    }

    pub fn src_id(&self, token: &str) -> Option<usize> {
        self.src_id.get(token).copied()
    }

    pub fn tgt_id(&self, token: &str) -> Option<usize> {
        self.tgt_id.get(token).copied()
    }

    pub fn is_shared(&self, token: &str) -> bool {
        self.src_id.contains_key(token)
    }

    /// Number of target tokens that are not unused placeholders.
    pub fn effective_size(&self) -> usize {
        self.shared.len() + self.new.len()
    }
}

pub fn align_vocabs(src: &Vocabulary, tgt: &Vocabulary) -> VocabAlignment {
    let mut shared = Vec::new();
    let mut new = Vec::new();
    let mut src_id = HashMap::new();
    let mut tgt_id = HashMap::new();
    for (id, token) in tgt.tokens().iter().enumerate() {
        if tgt.is_unused(token) || src.is_unused(token) {
            continue;
        }
        tgt_id.insert(token.clone(), id);
        match src.id(token) {
            Some(sid) => {
                src_id.insert(token.clone(), sid);
                shared.push(token.clone());
            }
            None => new.push(token.clone()),
        }
    }
    VocabAlignment {
        target: tgt.clone(),
        shared,
        new,
        src_id,
        tgt_id,
    }
}

/// Brings the target vocabulary to the source size by removing unused
/// placeholders (highest ID first) or appending fresh ones.
pub fn reconcile_size(src: &Vocabulary, tgt: &Vocabulary) -> Result<Vocabulary> {
    use std::cmp::Ordering::*;
    match tgt.len().cmp(&src.len()) {
        Equal => Ok(tgt.clone()),
        Greater => {
            let needed = tgt.len() - src.len();
            let unused: Vec<usize> = (0..tgt.len()).filter(|&id| tgt.is_unused(&tgt.tokens()[id])).collect();
            if unused.len() < needed {
                return Err(Error::Reconcile {
                    needed,
                    available: unused.len(),
                });
            }
            let dropped: HashSet<usize> = unused.iter().rev().take(needed).copied().collect();
            let tokens = tgt
                .tokens()
                .iter()
                .enumerate()
                .filter(|(id, _)| !dropped.contains(id))
                .map(|(_, t)| t.clone())
                .collect();
            tgt.with_tokens(tokens)
        }
        Less => {
            let mut tokens = tgt.tokens().to_vec();
            let mut next = 0;
            while tokens.len() < src.len() {
                let name = tgt.unused_token(next);
                next += 1;
                if !tgt.contains(&name) {
                    tokens.push(name);
                }
            }
            tgt.with_tokens(tokens)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    Uniform,
    Normal,
    FasttextProjection,
    SubwordAverage,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::Uniform,
        Strategy::Normal,
        Strategy::FasttextProjection,
        Strategy::SubwordAverage,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Uniform => "uniform",
            Strategy::Normal => "normal",
            Strategy::FasttextProjection => "fasttext-projection",
            Strategy::SubwordAverage => "subword-average",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|strategy| strategy.name() == s)
            .ok_or_else(|| {
                Error::Argument(format!(
                    "unknown strategy {s:?} (expected uniform, normal, fasttext-projection or subword-average)"
                ))
            })
    }
}

/// Where an output row came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    Copied,
    Sampled,
    Projected,
    Averaged,
    UnkFallback,
    Placeholder,
}

/// Output of an initializer.
#[derive(Clone, Debug, PartialEq)]
pub struct Initialized {
    pub matrix: EmbeddingMatrix,
    /// One entry per target row.
    pub provenance: Vec<Provenance>,
    /// New types that fell back to subword averaging (projection only).
    pub fallback_count: usize,
}

/// Output rows with shared and placeholder rows filled in; new rows left zero.
pub(crate) fn scaffold(align: &VocabAlignment, src: &EmbeddingMatrix) -> (Array2<f64>, Vec<Option<Provenance>>) {
    let target = align.target();
    let mut rows = Array2::zeros((target.len(), src.dim()));
    let mut provenance = vec![None; target.len()];
    for (id, token) in target.tokens().iter().enumerate() {
        if let Some(sid) = align.src_id(token) {
            rows.row_mut(id).assign(&src.rows().row(sid));
            provenance[id] = Some(Provenance::Copied);
        } else if align.tgt_id(token).is_none() {
            if let Some(source_row) = src.row(token) {
                rows.row_mut(id).assign(&source_row);
            }
            provenance[id] = Some(Provenance::Placeholder);
        }
    }
    (rows, provenance)
}

pub(crate) fn finish(
    align: &VocabAlignment,
    rows: Array2<f64>,
    provenance: Vec<Option<Provenance>>,
    fallback_count: usize,
) -> Result<Initialized> {
    let provenance = provenance
        .into_iter()
        .map(|p| p.expect("every row initialized"))
        .collect();
    Ok(Initialized {
        matrix: EmbeddingMatrix::new(align.target().clone(), rows)?,
        provenance,
        fallback_count,
    })
}
