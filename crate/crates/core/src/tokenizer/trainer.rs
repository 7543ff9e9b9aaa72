//! WordPiece vocabulary training with the pair-score objective.
//!
//! Every word starts as a sequence of characters, word-internal ones
//! carrying the continuation prefix. Each round merges the adjacent pair
//! with the highest `freq(pair) / (freq(left) * freq(right))`; ties go to the
//! lexicographically smallest merged string, then the smallest left symbol.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use super::pre_tokenize;
use super::vocab::{Vocabulary, DEFAULT_CONTINUATION_PREFIX, DEFAULT_SPECIALS, DEFAULT_UNUSED_PREFIX};
use super::wordpiece::MAX_WORD_CHARS;
use crate::{Error, Result};

type Symbol = u32;
type Pair = (Symbol, Symbol);

#[derive(Clone, Debug)]
pub struct WordPieceTrainer {
    pub target_size: usize,
    pub min_pair_freq: u64,
    pub specials: Vec<String>,
    pub n_unused: usize,
    pub continuation_prefix: String,
    pub unused_prefix: String,
}

impl Default for WordPieceTrainer {
    fn default() -> Self {
        WordPieceTrainer {
            target_size: 32_000,
            min_pair_freq: 2,
            specials: DEFAULT_SPECIALS.iter().map(|s| s.to_string()).collect(),
            n_unused: 0,
            continuation_prefix: DEFAULT_CONTINUATION_PREFIX.to_owned(),
            unused_prefix: DEFAULT_UNUSED_PREFIX.to_owned(),
        }
    }
}

pub fn train_wordpiece<S: AsRef<str>>(
    corpus: &[S],
    target_size: usize,
    min_pair_freq: u64,
    specials: &[String],
    n_unused: usize,
) -> Result<Vocabulary> {
    WordPieceTrainer {
        target_size,
        min_pair_freq,
        specials: specials.to_vec(),
        n_unused,
        ..WordPieceTrainer::default()
    }
    .train(corpus.iter().map(AsRef::as_ref))
}

struct Word {
    symbols: Vec<Symbol>,
    count: u64,
}

#[derive(Default)]
struct SymbolTable {
    names: Vec<String>,
    ids: HashMap<String, Symbol>,
}

impl SymbolTable {
    fn intern(&mut self, name: &str) -> Symbol {
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = self.names.len() as Symbol;
        self.names.push(name.to_owned());
        self.ids.insert(name.to_owned(), id);
        id
    }
}

struct MergeState {
    words: Vec<Word>,
    table: SymbolTable,
    symbol_freq: Vec<u64>,
    pair_freq: HashMap<Pair, u64>,
    // Words that may contain a pair; stale entries are tolerated.
    pair_words: HashMap<Pair, HashSet<usize>>,
    prefix: String,
}

impl MergeState {
    fn new(word_counts: BTreeMap<String, u64>, prefix: &str) -> Self {
        let mut table = SymbolTable::default();
        let mut words = Vec::with_capacity(word_counts.len());
        let mut unit = String::new();
        for (word, count) in word_counts {
            let symbols = word
                .chars()
                .enumerate()
                .map(|(i, c)| {
                    unit.clear();
                    if i > 0 {
                        unit.push_str(prefix);
                    }
                    unit.push(c);
                    table.intern(&unit)
                })
                .collect();
            words.push(Word { symbols, count });
        }

        let mut state = MergeState {
            words,
            symbol_freq: vec![0; table.names.len()],
            table,
            pair_freq: HashMap::new(),
            pair_words: HashMap::new(),
            prefix: prefix.to_owned(),
        };
        for idx in 0..state.words.len() {
            state.account(idx, 1);
        }
        state
    }

    /// Adds (`sign = 1`) or removes (`sign = -1`) the counts of one word.
    fn account(&mut self, idx: usize, sign: i64) {
        let word = &self.words[idx];
        let count = word.count;
        for &s in &word.symbols {
            apply(&mut self.symbol_freq[s as usize], count, sign);
        }
        for pair in word.symbols.windows(2).map(|w| (w[0], w[1])) {
            let freq = self.pair_freq.entry(pair).or_insert(0);
            apply(freq, count, sign);
            if *freq == 0 {
                self.pair_freq.remove(&pair);
            }
            if sign > 0 {
                self.pair_words.entry(pair).or_default().insert(idx);
            }
        }
    }

    fn merged_name(&self, pair: Pair) -> String {
        let left = &self.table.names[pair.0 as usize];
        let right = &self.table.names[pair.1 as usize];
        let right = right.strip_prefix(self.prefix.as_str()).unwrap_or(right);
        format!("{left}{right}")
    }

    /// Two pairs can merge to the same string, so the left symbol breaks
    /// remaining ties.
    fn tie_key(&self, pair: Pair) -> (String, &str) {
        (self.merged_name(pair), &self.table.names[pair.0 as usize])
    }

    fn best_pair(&self, min_pair_freq: u64) -> Option<Pair> {
        let mut best: Option<(Pair, u64, u128)> = None;
        for (&pair, &freq) in &self.pair_freq {
            if freq < min_pair_freq {
                continue;
            }
            let denom = u128::from(self.symbol_freq[pair.0 as usize]) * u128::from(self.symbol_freq[pair.1 as usize]);
            let better = match &best {
                None => true,
                Some((best_pair, best_freq, best_denom)) => {
                    // freq / denom vs best_freq / best_denom, exactly.
                    let lhs = u128::from(freq) * best_denom;
                    let rhs = u128::from(*best_freq) * denom;
                    lhs > rhs || (lhs == rhs && self.tie_key(pair) < self.tie_key(*best_pair))
                }
            };
            if better {
                best = Some((pair, freq, denom));
            }
        }
        best.map(|(pair, _, _)| pair)
    }

    fn merge(&mut self, pair: Pair) -> String {
        let name = self.merged_name(pair);
        let merged = self.table.intern(&name);
        if merged as usize >= self.symbol_freq.len() {
            self.symbol_freq.push(0);
        }

        let mut affected: Vec<usize> = self.pair_words.remove(&pair).unwrap_or_default().into_iter().collect();
        affected.sort_unstable();
        for idx in affected {
            let symbols = &self.words[idx].symbols;
            if !symbols.windows(2).any(|w| (w[0], w[1]) == pair) {
                continue;
            }
            self.account(idx, -1);
            let old = std::mem::take(&mut self.words[idx].symbols);
            let mut new = Vec::with_capacity(old.len());
            let mut i = 0;
            while i < old.len() {
                if i + 1 < old.len() && (old[i], old[i + 1]) == pair {
                    new.push(merged);
                    i += 2;
                } else {
                    new.push(old[i]);
                    i += 1;
                }
            }
            self.words[idx].symbols = new;
            self.account(idx, 1);
        }
        name
    }
}

fn apply(value: &mut u64, count: u64, sign: i64) {
    if sign > 0 {
        *value += count;
    } else {
        *value -= count;
    }
}

impl WordPieceTrainer {
    pub fn train<'a, I>(&self, lines: I) -> Result<Vocabulary>
    where
        I: IntoIterator<Item = &'a str>,
    {
        if self.min_pair_freq < 1 {
            return Err(Error::Argument("min_pair_freq must be at least 1".into()));
        }

        let mut word_counts: BTreeMap<String, u64> = BTreeMap::new();
        for line in lines {
            for word in pre_tokenize(line) {
                if word.chars().count() <= MAX_WORD_CHARS {
                    *word_counts.entry(word.to_owned()).or_insert(0) += 1;
                }
            }
        }
        if word_counts.is_empty() {
            return Err(Error::Training("corpus contains no words".into()));
        }

        let mut state = MergeState::new(word_counts, &self.continuation_prefix);
        let alphabet: BTreeSet<&str> = state.table.names.iter().map(String::as_str).collect();

        let reserved = self.specials.len() + self.n_unused + alphabet.len();
        if self.target_size <= reserved {
            return Err(Error::Argument(format!(
                "target size {} must exceed specials ({}) + unused ({}) + alphabet ({})",
                self.target_size,
                self.specials.len(),
                self.n_unused,
                alphabet.len()
            )));
        }

        let mut tokens: Vec<String> = Vec::with_capacity(self.target_size);
        let mut present: HashSet<String> = HashSet::new();
        let mut push = |tokens: &mut Vec<String>, token: String| {
            if present.insert(token.clone()) {
                tokens.push(token);
            }
        };
        for special in &self.specials {
            push(&mut tokens, special.clone());
        }
        for i in 0..self.n_unused {
            push(&mut tokens, self.unused_name(i));
        }
        for symbol in alphabet {
            push(&mut tokens, symbol.to_owned());
        }

        while tokens.len() < self.target_size {
            let Some(pair) = state.best_pair(self.min_pair_freq) else {
                break;
            };
            let name = state.merge(pair);
            push(&mut tokens, name);
        }
        let n_merged = tokens.len() - reserved;

        let mut next_unused = self.n_unused;
        while tokens.len() < self.target_size {
            let name = self.unused_name(next_unused);
            next_unused += 1;
            push(&mut tokens, name);
        }
        log::debug!(
            "trained WordPiece vocabulary: {} merges, {} padding placeholders",
            n_merged,
            next_unused - self.n_unused
        );

        Vocabulary::with_config(
            tokens,
            self.specials.clone(),
            &self.continuation_prefix,
            &self.unused_prefix,
        )
    }

    fn unused_name(&self, index: usize) -> String {
        format!("{}-{index}]", self.unused_prefix)
    }
}
