use std::collections::HashMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::{Error, Result};

pub const PAD: &str = "[PAD]";
pub const UNK: &str = "[UNK]";
pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";
pub const MASK: &str = "[MASK]";

pub const DEFAULT_SPECIALS: [&str; 5] = [PAD, UNK, CLS, SEP, MASK];
pub const DEFAULT_CONTINUATION_PREFIX: &str = "##";
pub const DEFAULT_UNUSED_PREFIX: &str = "[unused";

/// An ordered WordPiece vocabulary. Token IDs are positions in the list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    id_of: HashMap<String, usize>,
    specials: Vec<String>,
    continuation_prefix: String,
    unused_prefix: String,
}

impl Vocabulary {
    /// Builds a vocabulary with the default specials and prefixes.
    pub fn new(tokens: Vec<String>) -> Result<Self> {
        Self::with_config(
            tokens,
            DEFAULT_SPECIALS.iter().map(|s| s.to_string()).collect(),
            DEFAULT_CONTINUATION_PREFIX,
            DEFAULT_UNUSED_PREFIX,
        )
    }

    pub fn with_config(
        tokens: Vec<String>,
        specials: Vec<String>,
        continuation_prefix: &str,
        unused_prefix: &str,
    ) -> Result<Self> {
        check_specials(&specials)?;
        let mut id_of = HashMap::with_capacity(tokens.len());
        for (id, token) in tokens.iter().enumerate() {
            if token.is_empty() {
                return Err(Error::Argument(format!("empty token at id {id}")));
            }
            if let Some(prev) = id_of.insert(token.clone(), id) {
                return Err(Error::Argument(format!(
                    "duplicate token {token:?} at ids {prev} and {id}"
                )));
            }
        }
        if let Some(missing) = specials.iter().find(|s| !id_of.contains_key(*s)) {
            return Err(Error::Argument(format!("special token {missing} missing")));
        }
        Ok(Vocabulary {
            tokens,
            id_of,
            specials,
            continuation_prefix: continuation_prefix.to_owned(),
            unused_prefix: unused_prefix.to_owned(),
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.id_of.get(token).copied()
    }

    pub fn contains(&self, token: &str) -> bool {
        self.id_of.contains_key(token)
    }

    pub fn specials(&self) -> &[String] {
        &self.specials
    }

    pub fn is_special(&self, token: &str) -> bool {
        self.specials.iter().any(|s| s == token)
    }

    pub fn continuation_prefix(&self) -> &str {
        &self.continuation_prefix
    }

    pub fn unused_prefix(&self) -> &str {
        &self.unused_prefix
    }

    pub fn is_unused(&self, token: &str) -> bool {
        token.starts_with(&self.unused_prefix)
    }

    pub fn n_unused(&self) -> usize {
        self.tokens.iter().filter(|t| self.is_unused(t)).count()
    }

    /// Name of the `index`-th unused placeholder, e.g. `[unused-3]`.
    pub fn unused_token(&self, index: usize) -> String {
        format!("{}-{index}]", self.unused_prefix)
    }

    pub fn unk_id(&self) -> usize {
        self.id_of[UNK]
    }

    /// Same configuration, different token list.
    pub fn with_tokens(&self, tokens: Vec<String>) -> Result<Self> {
        Self::with_config(
            tokens,
            self.specials.clone(),
            &self.continuation_prefix,
            &self.unused_prefix,
        )
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        save_vocab(self, path)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        load_vocab(path)
    }

    /// Parses the one-token-per-line format.
    pub fn from_lines(data: &str, path: &Path) -> Result<Self> {
        let mut tokens = Vec::new();
        let mut seen: HashMap<&str, usize> = HashMap::new();
        for (idx, line) in data.lines().enumerate() {
            let line_no = idx + 1;
            let token = line.strip_suffix('\r').unwrap_or(line);
            if token.is_empty() {
                return Err(Error::format(path, line_no, "empty token"));
            }
            if let Some(first) = seen.insert(token, line_no) {
                return Err(Error::format(
                    path,
                    line_no,
                    format!("duplicate token {token:?} (first seen on line {first})"),
                ));
            }
            tokens.push(token.to_owned());
        }
        if tokens.is_empty() {
            return Err(Error::format(path, 0, "empty vocabulary: special tokens missing"));
        }
        Vocabulary::new(tokens).map_err(|e| Error::format(path, 0, e.to_string()))
    }
}

fn check_specials(specials: &[String]) -> Result<()> {
    for required in DEFAULT_SPECIALS {
        if !specials.iter().any(|s| s == required) {
            return Err(Error::Argument(format!("specials must include {required}")));
        }
    }
    Ok(())
}

pub fn save_vocab(vocab: &Vocabulary, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if let Some(bad) = vocab.tokens.iter().find(|t| t.contains(['\n', '\r'])) {
        return Err(Error::Argument(format!("token {bad:?} contains a line break")));
    }
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = BufWriter::new(file);
    for token in &vocab.tokens {
        writeln!(writer, "{token}").map_err(|e| Error::io(path, e))?;
    }
    writer.flush().map_err(|e| Error::io(path, e))
}

pub fn load_vocab(path: impl AsRef<Path>) -> Result<Vocabulary> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let data = String::from_utf8(bytes).map_err(|e| {
        let offset = e.utf8_error().valid_up_to();
        let line = e.as_bytes()[..offset].iter().filter(|&&b| b == b'\n').count() + 1;
        Error::format(path, line, format!("invalid UTF-8 at byte offset {offset}"))
    })?;
    Vocabulary::from_lines(&data, path)
}
