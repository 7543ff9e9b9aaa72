//! Embedding matrix files.
//!
//! Binary matrices are raw little-endian `f32` values, row-major, next to a
//! JSON sidecar `<file>.json` holding `{"rows": N, "dim": D, "vocab_file": ..}`.
//! `vocab_file` is resolved relative to the sidecar's directory. Text
//! matrices use the word2vec text format, one row per vocabulary token.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::EmbeddingMatrix;
use crate::tokenizer::{load_vocab, Vocabulary};
use crate::vectors::{load_text, save_text, WordVectors};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BinaryHeader {
    pub rows: usize,
    pub dim: usize,
    pub vocab_file: String,
}

pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".json");
    PathBuf::from(name)
}

/// Writes the matrix and its sidecar. `vocab_file` is recorded verbatim.
pub fn write_binary(matrix: &EmbeddingMatrix, path: impl AsRef<Path>, vocab_file: &str) -> Result<()> {
    let path = path.as_ref();
    let mut bytes = Vec::with_capacity(matrix.len() * matrix.dim() * 4);
    for &value in matrix.rows().iter() {
        bytes.extend_from_slice(&(value as f32).to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))?;

    let header = BinaryHeader {
        rows: matrix.len(),
        dim: matrix.dim(),
        vocab_file: vocab_file.to_owned(),
    };
    let sidecar = sidecar_path(path);
    let file = fs::File::create(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
    let mut writer = BufWriter::new(file);
    serde_json::to_writer(&mut writer, &header)?;
    writer.write_all(b"\n").map_err(|e| Error::io(&sidecar, e))?;
    writer.flush().map_err(|e| Error::io(&sidecar, e))
}

/// Reads a binary matrix. Without an explicit vocabulary the sidecar's
/// `vocab_file` is loaded.
pub fn read_binary(path: impl AsRef<Path>, vocab: Option<Vocabulary>) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let sidecar = sidecar_path(path);
    let text = fs::read_to_string(&sidecar).map_err(|e| Error::io(&sidecar, e))?;
    let header: BinaryHeader =
        serde_json::from_str(&text).map_err(|e| Error::format(&sidecar, e.line(), e.to_string()))?;

    let vocab = match vocab {
        Some(v) => v,
        None => {
            let dir = sidecar.parent().unwrap_or_else(|| Path::new("."));
            load_vocab(dir.join(&header.vocab_file))?
        }
    };
    if vocab.len() != header.rows {
        return Err(Error::format(
            &sidecar,
            1,
            format!(
                "header has {} rows but the vocabulary has {} tokens",
                header.rows,
                vocab.len()
            ),
        ));
    }

    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let expected = header.rows * header.dim * 4;
    if bytes.len() != expected {
        return Err(Error::format(
            path,
            0,
            format!(
                "expected {expected} bytes for {}x{} f32 values, found {}",
                header.rows,
                header.dim,
                bytes.len()
            ),
        ));
    }
    let values: Vec<f64> = bytes
        .chunks_exact(4)
        .map(|c| f64::from(f32::from_le_bytes([c[0], c[1], c[2], c[3]])))
        .collect();
    let rows = Array2::from_shape_vec((header.rows, header.dim), values).expect("length checked");
    EmbeddingMatrix::new(vocab, rows).map_err(|e| Error::format(path, 0, e.to_string()))
}

/// Reads a word2vec text matrix; its words form the vocabulary.
pub fn read_text_matrix(path: impl AsRef<Path>) -> Result<EmbeddingMatrix> {
    let path = path.as_ref();
    let vectors = load_text(path)?;
    let (words, rows) = (vectors.vocab().to_vec(), vectors.rows().clone());
    let vocab = Vocabulary::new(words).map_err(|e| Error::format(path, 0, e.to_string()))?;
    EmbeddingMatrix::new(vocab, rows)
}

pub fn write_text_matrix(matrix: &EmbeddingMatrix, path: impl AsRef<Path>) -> Result<()> {
    let vectors = WordVectors::new(matrix.vocab().tokens().to_vec(), matrix.rows().clone())?;
    save_text(&vectors, path)
}
