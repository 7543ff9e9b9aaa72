//! Tweet ingestion: record readers, deduplication, holdout split and text
//! normalization.
//!
//! Normalization replaces user mentions with `@USER`, URLs with `HTTPURL`,
//! emoji with their textual aliases, and lower-cases everything except the
//! two sentinels.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::io::BufRead;
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use rand::seq::SliceRandom;
use regex::Regex;
use serde_json::Value;

use crate::seed;
use crate::{Error, Result};

pub const USER_SENTINEL: &str = "@USER";
pub const URL_SENTINEL: &str = "HTTPURL";

const BUILTIN_EMOJI_TSV: &str = include_str!("../data/emoji.tsv");

// Private-use placeholders that shield the sentinels from lower-casing.
const USER_PLACEHOLDER: char = '\u{E000}';
const URL_PLACEHOLDER: char = '\u{E001}';

// The leading groups stand in for look-behinds: a URL or mention may not
// continue a word (e-mail addresses stay intact). Word characters are spelled
// out because `\w` includes combining marks such as the emoji variation
// selector U+FE0F.
static URL_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)(^|[^\p{L}\p{N}_])(?:https?://|www\.)\S+").unwrap());

static MENTION_RE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(^|[^\p{L}\p{N}_@])@[\p{L}\p{N}_]+").unwrap());

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TweetRecord {
    pub id: String,
    pub text: String,
}

impl TweetRecord {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(Error::Argument("tweet id must be non-empty".into()));
        }
        Ok(TweetRecord { id, text: text.into() })
    }
}

/// Mapping from emoji codepoint sequences to textual aliases.
#[derive(Clone, Debug, Default)]
pub struct EmojiMap {
    entries: HashMap<String, String>,
    max_key_chars: usize,
}

impl EmojiMap {
    pub fn new() -> Self {
        Self::default()
    }

    /// The emoji table shipped with the crate.
    pub fn builtin() -> Self {
        Self::from_tsv(BUILTIN_EMOJI_TSV, Path::new("<builtin emoji.tsv>")).expect("builtin emoji table is well-formed")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let data = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_tsv(&data, path)
    }

    /// Parses `emoji<TAB>alias` lines. Blank lines are skipped.
    pub fn from_tsv(data: &str, path: &Path) -> Result<Self> {
        let mut map = EmojiMap::new();
        for (idx, line) in data.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut cols = line.split('\t');
            let (Some(key), Some(alias)) = (cols.next(), cols.next()) else {
                return Err(Error::format(path, idx + 1, "expected two tab-separated columns"));
            };
            map.insert(key, alias)
                .map_err(|e| Error::format(path, idx + 1, e.to_string()))?;
        }
        Ok(map)
    }

    pub fn insert(&mut self, key: impl Into<String>, alias: impl Into<String>) -> Result<()> {
        let key = key.into();
        let alias = alias.into();
        if key.is_empty() {
            return Err(Error::Argument("emoji key must be non-empty".into()));
        }
        if alias.is_empty() || alias.chars().any(char::is_whitespace) {
            return Err(Error::Argument(format!(
                "emoji alias {alias:?} must be non-empty without whitespace"
            )));
        }
        if self.entries.contains_key(&key) {
            return Err(Error::Argument(format!("duplicate emoji key {key:?}")));
        }
        self.max_key_chars = self.max_key_chars.max(key.chars().count());
        self.entries.insert(key, alias);
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    /// Replaces every emoji sequence by ` alias `, longest key first.
    fn translate(&self, text: &str) -> String {
        if self.entries.is_empty() {
            return text.to_owned();
        }
        // Byte offsets of every char boundary, plus the end.
        let bounds: Vec<usize> = text
            .char_indices()
            .map(|(i, _)| i)
            .chain(std::iter::once(text.len()))
            .collect();
        let n_chars = bounds.len() - 1;
        let mut out = String::with_capacity(text.len());
        let mut pos = 0;
        'outer: while pos < n_chars {
            let longest = self.max_key_chars.min(n_chars - pos);
            for len in (1..=longest).rev() {
                let candidate = &text[bounds[pos]..bounds[pos + len]];
                if let Some(alias) = self.entries.get(candidate) {
                    out.push(' ');
                    out.push_str(alias);
                    out.push(' ');
                    pos += len;
                    continue 'outer;
                }
            }
            out.push_str(&text[bounds[pos]..bounds[pos + 1]]);
            pos += 1;
        }
        out
    }
}

/// Normalizes tweets with an owned emoji table.
#[derive(Clone, Debug)]
pub struct TweetNormalizer {
    emoji: EmojiMap,
}

impl TweetNormalizer {
    pub fn new(emoji: EmojiMap) -> Self {
        TweetNormalizer { emoji }
    }

    pub fn emoji_map(&self) -> &EmojiMap {
        &self.emoji
    }

    pub fn normalize(&self, raw: &str) -> String {
        normalize_str(raw, &self.emoji)
    }

    pub fn normalize_bytes(&self, raw: &[u8]) -> Result<String> {
        normalize_tweet(raw, &self.emoji)
    }
}

/// Normalizes raw bytes, which must be valid UTF-8.
pub fn normalize_tweet(raw: &[u8], emoji_map: &EmojiMap) -> Result<String> {
    let text = std::str::from_utf8(raw).map_err(|e| Error::Decode {
        offset: e.valid_up_to(),
    })?;
    Ok(normalize_str(text, emoji_map))
}

pub fn normalize_str(raw: &str, emoji_map: &EmojiMap) -> String {
    let text = URL_RE.replace_all(raw, |caps: &regex::Captures| format!("{}{URL_SENTINEL}", &caps[1]));
    let text = MENTION_RE.replace_all(&text, |caps: &regex::Captures| format!("{}{USER_SENTINEL}", &caps[1]));
    let text = emoji_map.translate(&text);

    let shielded = text
        .replace(USER_SENTINEL, &USER_PLACEHOLDER.to_string())
        .replace(URL_SENTINEL, &URL_PLACEHOLDER.to_string());
    let lowered = shielded.to_lowercase();

    let mut out = String::with_capacity(lowered.len());
    for word in lowered.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        for c in word.chars() {
            match c {
                USER_PLACEHOLDER => out.push_str(USER_SENTINEL),
                URL_PLACEHOLDER => out.push_str(URL_SENTINEL),
                c => out.push(c),
            }
        }
    }
    out
}

/// Iterator adapter keeping the first record of every id.
pub struct Dedup<I> {
    inner: I,
    seen: HashSet<String>,
}

impl<I> Iterator for Dedup<I>
where
    I: Iterator<Item = TweetRecord>,
{
    type Item = TweetRecord;

    fn next(&mut self) -> Option<TweetRecord> {
        self.inner.by_ref().find(|record| self.seen.insert(record.id.clone()))
    }
}

pub fn dedup_stream<I>(records: I) -> Dedup<I::IntoIter>
where
    I: IntoIterator<Item = TweetRecord>,
{
    Dedup {
        inner: records.into_iter(),
        seen: HashSet::new(),
    }
}

/// Seeded random holdout split. Both parts keep the input order.
///
/// The development part has `round(fraction * len)` records.
pub fn split_holdout<T>(records: Vec<T>, holdout_fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
        return Err(Error::Argument(format!(
            "holdout fraction must lie in (0, 1), got {holdout_fraction}"
        )));
    }
    let n_dev = (holdout_fraction * records.len() as f64).round() as usize;
    let mut order: Vec<usize> = (0..records.len()).collect();
    order.shuffle(&mut seed::rng(seed));
    let mut is_dev = vec![false; records.len()];
    for &idx in &order[..n_dev] {
        is_dev[idx] = true;
    }

    let mut train = Vec::with_capacity(records.len() - n_dev);
    let mut dev = Vec::with_capacity(n_dev);
    for (record, dev_member) in records.into_iter().zip(is_dev) {
        if dev_member {
            dev.push(record);
        } else {
            train.push(record);
        }
    }
    Ok((train, dev))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InputFormat {
    /// One `{"id": ..., "text": ...}` object per line.
    JsonLines,
    /// One tweet per line; ids are 1-based line numbers.
    PlainText,
}

/// Reads tweet records line by line. Blank lines are skipped.
pub struct RecordReader<R> {
    lines: std::io::Lines<R>,
    format: InputFormat,
    path: PathBuf,
    line: usize,
}

impl<R: BufRead> RecordReader<R> {
    pub fn new(reader: R, format: InputFormat, path: impl Into<PathBuf>) -> Self {
        RecordReader {
            lines: reader.lines(),
            format,
            path: path.into(),
            line: 0,
        }
    }

    fn parse_json(&self, line: &str) -> Result<TweetRecord> {
        let value: Value =
            serde_json::from_str(line).map_err(|e| Error::format(&self.path, self.line, e.to_string()))?;
        let id = match value.get("id") {
            Some(Value::String(s)) => s.clone(),
            Some(Value::Number(n)) => n.to_string(),
            _ => return Err(Error::format(&self.path, self.line, "missing string or integer \"id\"")),
        };
        let text = match value.get("text") {
            Some(Value::String(s)) => s.clone(),
            _ => return Err(Error::format(&self.path, self.line, "missing string \"text\"")),
        };
        TweetRecord::new(id, text).map_err(|e| Error::format(&self.path, self.line, e.to_string()))
    }
}

impl<R: BufRead> Iterator for RecordReader<R> {
    type Item = Result<TweetRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) if e.kind() == std::io::ErrorKind::InvalidData => {
                    return Some(Err(Error::format(&self.path, self.line + 1, "invalid UTF-8")));
                }
                Err(e) => return Some(Err(Error::io(&self.path, e))),
            };
            self.line += 1;
            if line.trim().is_empty() {
                continue;
            }
            return Some(match self.format {
                InputFormat::JsonLines => self.parse_json(&line),
                InputFormat::PlainText => Ok(TweetRecord {
                    id: self.line.to_string(),
                    text: line,
                }),
            });
        }
    }
}

#[cfg(test)]
mod tests {
    use std::io::Cursor;

    use super::*;

    fn joy_map() -> EmojiMap {
        let mut map = EmojiMap::new();
        map.insert("\u{1F602}", ":face_with_tears_of_joy:").unwrap();
        map
    }

    fn rec(id: &str, text: &str) -> TweetRecord {
        TweetRecord::new(id, text).unwrap()
    }

    #[test]
    fn mentions_urls_and_emoji() {
        let out = normalize_str("@john check https://t.co/x \u{1F602}", &joy_map());
        assert_eq!(out, "@USER check HTTPURL :face_with_tears_of_joy:");
    }

    #[test]
    fn empty_and_plain_lowercase() {
        assert_eq!(normalize_str("", &joy_map()), "");
        assert_eq!(normalize_str("Halo DUNIA", &joy_map()), "halo dunia");
    }

    #[test]
    fn mention_edge_cases() {
        let map = EmojiMap::new();
        assert_eq!(normalize_str("bare @ sign", &map), "bare @ sign");
        assert_eq!(normalize_str("mail a@b.com", &map), "mail a@b.com");
        assert_eq!(normalize_str("@Ab_9, hi", &map), "@USER, hi");
        assert_eq!(normalize_str("(@x)", &map), "(@USER)");
        assert_eq!(normalize_str("@a @b", &map), "@USER @USER");
    }

    #[test]
    fn url_forms() {
        let map = EmojiMap::new();
        assert_eq!(normalize_str("see WWW.Example.com/A now", &map), "see HTTPURL now");
        assert_eq!(normalize_str("HTTP://X.CO", &map), "HTTPURL");
        assert_eq!(normalize_str("wwwx.com", &map), "wwwx.com");
    }

    #[test]
    fn emoji_longest_key_first() {
        let mut map = EmojiMap::new();
        map.insert("\u{1F44D}", ":thumbs_up:").unwrap();
        map.insert("\u{1F44D}\u{1F3FD}", ":thumbs_up_medium_skin_tone:")
            .unwrap();
        assert_eq!(
            normalize_str("ok\u{1F44D}\u{1F3FD}\u{1F44D}", &map),
            "ok :thumbs_up_medium_skin_tone: :thumbs_up:"
        );
    }

    #[test]
    fn sentinels_survive_lowercasing() {
        let map = EmojiMap::new();
        assert_eq!(normalize_str("HTTPURL @USER ABC", &map), "HTTPURL @USER abc");
    }

    #[test]
    fn whitespace_collapses() {
        assert_eq!(normalize_str("  a \t\n b  ", &EmojiMap::new()), "a b");
    }

    #[test]
    fn invalid_utf8_reports_offset() {
        match normalize_tweet(b"ab\xffcd", &joy_map()) {
            Err(Error::Decode { offset }) => assert_eq!(offset, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn emoji_map_rejects_bad_entries() {
        let mut map = EmojiMap::new();
        assert!(map.insert("", ":x:").is_err());
        assert!(map.insert("\u{1F602}", ":a b:").is_err());
        map.insert("\u{1F602}", ":x:").unwrap();
        assert!(map.insert("\u{1F602}", ":y:").is_err());
        assert!(EmojiMap::from_tsv("only-one-column\n", Path::new("m.tsv")).is_err());
    }

    #[test]
    fn url_and_mention_after_variation_selector() {
        let map = EmojiMap::builtin();
        assert_eq!(
            normalize_str("\u{2764}\u{FE0F}http://t.co/X", &map),
            ":red_heart: HTTPURL"
        );
        assert_eq!(normalize_str("\u{2764}\u{FE0F}@Bob", &map), ":red_heart: @USER");
        assert_eq!(normalize_str("xhttp://t.co", &map), "xhttp://t.co");
    }

    #[test]
    fn builtin_table_has_joy() {
        let map = EmojiMap::builtin();
        assert_eq!(map.get("\u{1F602}"), Some(":face_with_tears_of_joy:"));
        assert!(map.len() > 1000);
    }

    #[test]
    fn dedup_keeps_first() {
        let out: Vec<_> = dedup_stream(vec![rec("1", "a"), rec("2", "b"), rec("1", "c")]).collect();
        assert_eq!(out, vec![rec("1", "a"), rec("2", "b")]);
        assert_eq!(dedup_stream(Vec::new()).count(), 0);
    }

    #[test]
    fn dedup_matches_set_insertion_oracle() {
        let ids = ["7", "3", "7", "9", "3", "3", "9", "7", "9", "3"];
        let records: Vec<_> = ids.iter().enumerate().map(|(i, id)| rec(id, &i.to_string())).collect();

        let mut seen = HashSet::new();
        let expected: Vec<_> = records.iter().filter(|r| seen.insert(r.id.clone())).cloned().collect();

        let out: Vec<_> = dedup_stream(records).collect();
        assert_eq!(out.len(), 3);
        assert_eq!(out, expected);
    }

    #[test]
    fn holdout_cardinality_and_determinism() {
        let records: Vec<u32> = (0..100).collect();
        let (train, dev) = split_holdout(records.clone(), 0.1, 7).unwrap();
        assert_eq!((train.len(), dev.len()), (90, 10));
        let again = split_holdout(records.clone(), 0.1, 7).unwrap();
        assert_eq!((train.clone(), dev.clone()), again);

        let mut all: Vec<_> = train.into_iter().chain(dev).collect();
        all.sort();
        assert_eq!(all, records);
    }

    #[test]
    fn holdout_fraction_range() {
        assert!(split_holdout(vec![1, 2], 0.0, 1).is_err());
        assert!(split_holdout(vec![1, 2], 1.0, 1).is_err());
        assert!(split_holdout(vec![1, 2], f64::NAN, 1).is_err());
    }

    #[test]
    fn corpus_scale_fraction() {
        let fraction = 230_000.0 / 26_000_000.0;
        assert!((fraction - 0.00885_f64).abs() < 5e-6);
    }

    #[test]
    fn jsonl_reader() {
        let input = "{\"id\": \"1\", \"text\": \"a\"}\n\n{\"id\": 2, \"text\": \"b\"}\n";
        let records: Vec<_> = RecordReader::new(Cursor::new(input), InputFormat::JsonLines, "in.jsonl")
            .collect::<Result<_>>()
            .unwrap();
        assert_eq!(records, vec![rec("1", "a"), rec("2", "b")]);
    }

    #[test]
    fn jsonl_reader_reports_line() {
        let input = "{\"id\": \"1\", \"text\": \"a\"}\n{oops\n";
        let err = RecordReader::new(Cursor::new(input), InputFormat::JsonLines, "in.jsonl")
            .collect::<Result<Vec<_>>>()
            .unwrap_err();
        match err {
            Error::Format { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        let missing_id = "{\"text\": \"a\"}\n";
        assert!(RecordReader::new(Cursor::new(missing_id), InputFormat::JsonLines, "x")
            .next()
            .unwrap()
            .is_err());
    }

    #[test]
    fn plain_reader_uses_line_numbers() {
        let records: Vec<_> = RecordReader::new(Cursor::new("x\n\ny\n"), InputFormat::PlainText, "in.txt")
            .collect::<Result<_>>()
            .unwrap();
        assert_eq!(records, vec![rec("1", "x"), rec("3", "y")]);
    }
}
