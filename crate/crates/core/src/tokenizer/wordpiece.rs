use super::vocab::{Vocabulary, UNK};
use crate::{Error, Result};

/// Words longer than this many characters are mapped to `[UNK]` directly.
pub const MAX_WORD_CHARS: usize = 100;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenizationResult {
    pub pieces: Vec<String>,
    pub is_unk: bool,
}

impl TokenizationResult {
    fn unk() -> Self {
        TokenizationResult {
            pieces: vec![UNK.to_owned()],
            is_unk: true,
        }
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    /// Concatenates the pieces with continuation prefixes removed.
    pub fn detokenize(&self, continuation_prefix: &str) -> String {
        self.pieces
            .iter()
            .map(|p| p.strip_prefix(continuation_prefix).unwrap_or(p))
            .collect()
    }
}

/// Greedy longest-match-first segmentation of a single word.
pub fn tokenize_word(word: &str, vocab: &Vocabulary) -> Result<TokenizationResult> {
    check_word(word)?;
    Ok(segment(word, vocab, false))
}

/// Segments a vocabulary entry of another vocabulary. A continuation entry
/// (`##ing`) is matched as a word suffix, so its first piece also carries the
/// prefix.
pub fn tokenize_vocab_entry(token: &str, vocab: &Vocabulary) -> Result<TokenizationResult> {
    let prefix = vocab.continuation_prefix();
    match token.strip_prefix(prefix) {
        Some(rest) if !rest.is_empty() => {
            check_word(rest)?;
            Ok(segment(rest, vocab, true))
        }
        _ => tokenize_word(token, vocab),
    }
}

fn check_word(word: &str) -> Result<()> {
    if word.is_empty() {
        return Err(Error::Argument("cannot tokenize an empty word".into()));
    }
    if word.chars().any(char::is_whitespace) {
        return Err(Error::Argument(format!("word {word:?} contains whitespace")));
    }
    Ok(())
}

fn segment(word: &str, vocab: &Vocabulary, continued: bool) -> TokenizationResult {
    let bounds: Vec<usize> = word
        .char_indices()
        .map(|(i, _)| i)
        .chain(std::iter::once(word.len()))
        .collect();
    let n_chars = bounds.len() - 1;
    if n_chars > MAX_WORD_CHARS {
        return TokenizationResult::unk();
    }

    let prefix = vocab.continuation_prefix();
    let mut pieces = Vec::new();
    let mut candidate = String::new();
    let mut start = 0;
    while start < n_chars {
        let mut found = None;
        for end in (start + 1..=n_chars).rev() {
            candidate.clear();
            if start > 0 || continued {
                candidate.push_str(prefix);
            }
            candidate.push_str(&word[bounds[start]..bounds[end]]);
            if vocab.contains(&candidate) {
                found = Some(end);
                break;
            }
        }
        match found {
            Some(end) => {
                pieces.push(candidate.clone());
                start = end;
            }
            None => return TokenizationResult::unk(),
        }
    }
    TokenizationResult { pieces, is_unk: false }
}
