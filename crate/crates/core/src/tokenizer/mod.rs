//! WordPiece vocabularies: training, segmentation and the vocab file format.

mod trainer;
mod vocab;
mod wordpiece;

use unicode_general_category::{get_general_category, GeneralCategory};

pub use trainer::{train_wordpiece, WordPieceTrainer};
pub use vocab::{
    load_vocab, save_vocab, Vocabulary, CLS, DEFAULT_CONTINUATION_PREFIX, DEFAULT_SPECIALS, DEFAULT_UNUSED_PREFIX,
    MASK, PAD, SEP, UNK,
};
pub use wordpiece::{tokenize_vocab_entry, tokenize_word, TokenizationResult, MAX_WORD_CHARS};

/// Punctuation and symbols are split off as standalone words, except `@`
/// and `#` which belong to mentions and hashtags.
pub fn is_punctuation(c: char) -> bool {
    use GeneralCategory::*;
    if c == '@' || c == '#' {
        return false;
    }
    matches!(
        get_general_category(c),
        ConnectorPunctuation
            | DashPunctuation
            | OpenPunctuation
            | ClosePunctuation
            | InitialPunctuation
            | FinalPunctuation
            | OtherPunctuation
            | MathSymbol
            | CurrencySymbol
            | ModifierSymbol
            | OtherSymbol
    )
}

/// Splits a line into words: whitespace first, then every punctuation
/// character becomes its own word.
pub fn pre_tokenize(line: &str) -> Vec<&str> {
    let mut words = Vec::new();
    for chunk in line.split_whitespace() {
        let mut start = 0;
        for (idx, c) in chunk.char_indices() {
            if is_punctuation(c) {
                if start < idx {
                    words.push(&chunk[start..idx]);
                }
                let end = idx + c.len_utf8();
                words.push(&chunk[idx..end]);
                start = end;
            }
        }
        if start < chunk.len() {
            words.push(&chunk[start..]);
        }
    }
    words
}

/// Pre-tokenizes a line and segments every word.
pub fn tokenize_text(line: &str, vocab: &Vocabulary) -> Vec<String> {
    pre_tokenize(line)
        .into_iter()
        .flat_map(|word| {
            tokenize_word(word, vocab)
                .expect("pre-tokenized words are non-empty and whitespace-free")
                .pieces
        })
        .collect()
}
