//! Domain vocabulary transplantation.
//!
//! The crate prepares the inputs of domain-adaptive pretraining for a
//! WordPiece model whose vocabulary is replaced by a domain-specific one:
//!
//! * [`corpus`] deduplicates and normalizes tweet records.
//! * [`tokenizer`] trains a WordPiece vocabulary and segments words with
//!   greedy longest-match-first.
//! * [`vectors`] trains skipgram vectors with character n-gram features and
//!   reads/writes the word2vec text format.
//! * [`transplant`] aligns a source and target vocabulary and initializes the
//!   target embedding matrix.
//! * [`analysis`] summarizes an alignment as a report with the subword-count
//!   histogram of new types.

pub mod analysis;
pub mod corpus;
mod error;
pub mod linalg;
pub mod seed;
pub mod tokenizer;
pub mod transplant;
pub mod vectors;

pub use error::{Error, Result};
