//! word2vec text format: a `count dim` header, then one `word v1 .. vdim`
//! line per word.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::Array2;

use super::WordVectors;
use crate::{Error, Result};

/// Formats like C's `%.9g`.
pub fn format_g9(value: f64) -> String {
    const PRECISION: i32 = 9;
    if value.is_nan() {
        return "nan".into();
    }
    if value.is_infinite() {
        return if value > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if value == 0.0 {
        return if value.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    let sci = format!("{:.*e}", (PRECISION - 1) as usize, value);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..PRECISION).contains(&exp) {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (PRECISION - 1 - exp) as usize;
        trim_fraction(&format!("{value:.decimals$}")).to_owned()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Writes composed word embeddings (n-gram rows folded in).
pub fn write_text<W: Write>(vectors: &WordVectors, writer: &mut W) -> std::io::Result<()> {
    writeln!(writer, "{} {}", vectors.len(), vectors.dim())?;
    let mut line = String::new();
    for (idx, word) in vectors.vocab().iter().enumerate() {
        line.clear();
        line.push_str(word);
        for value in vectors.embedding_at(idx) {
            line.push(' ');
            line.push_str(&format_g9(value));
        }
        line.push('\n');
        writer.write_all(line.as_bytes())?;
    }
    Ok(())
}

pub fn save_text(vectors: &WordVectors, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(bad) = vectors.vocab().iter().find(|w| w.chars().any(char::is_whitespace)) {
        return Err(Error::Argument(format!("word {bad:?} contains whitespace")));
    }
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    write_text(vectors, &mut writer).map_err(|e| Error::io(path, e))?;
    writer.flush().map_err(|e| Error::io(path, e))
}

pub fn load_text(path: impl AsRef<Path>) -> Result<WordVectors> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_text(BufReader::new(file), path)
}

/// Reads word rows; `path` only labels errors.
pub fn read_text<R: BufRead>(reader: R, path: &Path) -> Result<WordVectors> {
    let mut lines = reader.lines();
    let header = match lines.next() {
        Some(line) => line.map_err(|e| Error::io(path, e))?,
        None => return Err(Error::format(path, 1, "missing \"count dim\" header")),
    };
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [count, dim] = fields[..] else {
        return Err(Error::format(path, 1, format!("malformed header {header:?}")));
    };
    let (Ok(count), Ok(dim)) = (count.parse::<usize>(), dim.parse::<usize>()) else {
        return Err(Error::format(path, 1, format!("malformed header {header:?}")));
    };
    if dim == 0 {
        return Err(Error::format(path, 1, "dimension must be positive"));
    }

    let mut words = Vec::with_capacity(count);
    let mut data = Vec::with_capacity(count * dim);
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        if words.len() == count {
            return Err(Error::format(path, line_no, format!("more than {count} vectors")));
        }
        let mut parts = line.split_whitespace();
        let word = parts.next().expect("non-blank line");
        let before = data.len();
        for part in parts {
            let value: f64 = part
                .parse()
                .map_err(|_| Error::format(path, line_no, format!("invalid number {part:?}")))?;
            data.push(value);
        }
        let found = data.len() - before;
        if found != dim {
            return Err(Error::format(
                path,
                line_no,
                format!("expected {dim} values, found {found}"),
            ));
        }
        words.push(word.to_owned());
    }
    if words.len() != count {
        return Err(Error::format(
            path,
            words.len() + 2,
            format!("header announces {count} vectors, found {}", words.len()),
        ));
    }
    let rows = Array2::from_shape_vec((count, dim), data).expect("shape checked");
    WordVectors::new(words, rows).map_err(|e| Error::format(path, 0, e.to_string()))
}
