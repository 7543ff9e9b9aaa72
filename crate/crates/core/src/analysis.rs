//! Vocabulary overlap statistics and the subword-count histogram of new
//! types.
//!
//! A new type's subword count is the number of pieces the source tokenizer
//! splits it into. A type that tokenizes to `[UNK]` counts as 1.
//!
//! # Report schema
//!
//! The JSON report is one object:
//!
//! | field | type |
//! |---|---|
//! | `n_shared` | integer, shared types including specials |
//! | `n_new` | integer |
//! | `target_size` | integer, `n_shared + n_new` (unused placeholders excluded) |
//! | `pct_new` | real, `100 · n_new / target_size` |
//! | `strategy` | strategy name or `null` |
//! | `fallback_count` | integer |
//! | `histogram` | object, subword count (as a string key) → frequency |
//! | `histogram_proportions` | object, subword count → frequency / `n_new` |
//! | `mean_subwords` | real, or `null` when there are no new types |
//! | `per_token_provenance` | object token → provenance, or `null` |
//!
//! The CSV form is two files: a one-row summary and the histogram with
//! header `subwords,count`, rows ascending by subword count.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::tokenizer::{tokenize_vocab_entry, Vocabulary};
use crate::transplant::{Initialized, Provenance, Strategy, VocabAlignment};
use crate::{Error, Result};

/// Relative tolerance for the derived real fields.
const TOLERANCE: f64 = 1e-9;

pub fn subword_histogram<S: AsRef<str>>(new_types: &[S], src_vocab: &Vocabulary) -> Result<BTreeMap<usize, usize>> {
    let mut hist = BTreeMap::new();
    for token in new_types {
        let result = tokenize_vocab_entry(token.as_ref(), src_vocab)?;
        let count = if result.is_unk { 1 } else { result.len() };
        *hist.entry(count).or_insert(0) += 1;
    }
    Ok(hist)
}

pub fn mean_subword_count(hist: &BTreeMap<usize, usize>) -> Result<f64> {
    let total: usize = hist.values().sum();
    if total == 0 {
        return Err(Error::Argument("mean of an empty histogram".into()));
    }
    let weighted: usize = hist.iter().map(|(k, f)| k * f).sum();
    Ok(weighted as f64 / total as f64)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransplantReport {
    pub n_shared: usize,
    pub n_new: usize,
    pub target_size: usize,
    pub pct_new: f64,
    pub strategy: Option<Strategy>,
    pub fallback_count: usize,
    pub histogram: BTreeMap<usize, usize>,
    pub mean_subwords: Option<f64>,
    #[serde(default)]
    pub per_token_provenance: Option<BTreeMap<String, Provenance>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            _ => Err(Error::Argument(format!(
                "unknown report format {s:?} (expected json or csv)"
            ))),
        }
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= TOLERANCE * a.abs().max(b.abs()).max(1.0)
}

impl TransplantReport {
    /// Builds a report from an alignment and, for transplants, the
    /// initializer output.
    pub fn build(
        align: &VocabAlignment,
        src_vocab: &Vocabulary,
        strategy: Option<Strategy>,
        init: Option<&Initialized>,
        with_provenance: bool,
    ) -> Result<Self> {
        let histogram = subword_histogram(align.new_types(), src_vocab)?;
        let n_new = align.new_types().len();
        let target_size = align.effective_size();
        let per_token_provenance = match init {
            Some(init) if with_provenance => Some(
                align
                    .target()
                    .tokens()
                    .iter()
                    .cloned()
                    .zip(init.provenance.iter().copied())
                    .collect(),
            ),
            _ => None,
        };
        let report = TransplantReport {
            n_shared: align.shared().len(),
            n_new,
            target_size,
            pct_new: percent(n_new, target_size),
            strategy,
            fallback_count: init.map_or(0, |i| i.fallback_count),
            mean_subwords: if n_new == 0 {
                None
            } else {
                Some(mean_subword_count(&histogram)?)
            },
            histogram,
            per_token_provenance,
        };
        report.validate()?;
        Ok(report)
    }

    /// Checks the invariants between the count fields and the derived fields.
    pub fn validate(&self) -> Result<()> {
        if self.n_shared + self.n_new != self.target_size {
            return Err(Error::Validation(format!(
                "n_shared + n_new = {} but target_size = {}",
                self.n_shared + self.n_new,
                self.target_size
            )));
        }
        let mass: usize = self.histogram.values().sum();
        if mass != self.n_new {
            return Err(Error::Validation(format!(
                "histogram frequencies sum to {mass} but n_new = {}",
                self.n_new
            )));
        }
        if self.histogram.contains_key(&0) {
            return Err(Error::Validation("histogram has a zero subword count".into()));
        }
        if self.fallback_count > self.n_new {
            return Err(Error::Validation(format!(
                "fallback_count {} exceeds n_new {}",
                self.fallback_count, self.n_new
            )));
        }
        let pct = percent(self.n_new, self.target_size);
        if !close(self.pct_new, pct) {
            return Err(Error::Validation(format!(
                "pct_new is {} but should be {pct}",
                self.pct_new
            )));
        }
        match (self.mean_subwords, self.n_new) {
            (None, 0) => {}
            (Some(mean), n) if n > 0 => {
                let expected = mean_subword_count(&self.histogram)?;
                if !close(mean, expected) {
                    return Err(Error::Validation(format!(
                        "mean_subwords is {mean} but the histogram mean is {expected}"
                    )));
                }
            }
            (Some(_), _) => return Err(Error::Validation("mean_subwords given without new types".into())),
            (None, _) => return Err(Error::Validation("mean_subwords missing".into())),
        }
        Ok(())
    }

    pub fn histogram_proportions(&self) -> BTreeMap<usize, f64> {
        self.histogram
            .iter()
            .map(|(&k, &f)| (k, f as f64 / self.n_new as f64))
            .collect()
    }
}

fn percent(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

/// The summary and histogram paths for a CSV report at `path`: a trailing
/// `.csv` or `.json` is dropped and `.summary.csv` / `.histogram.csv`
/// appended.
pub fn csv_paths(path: &Path) -> (PathBuf, PathBuf) {
    let base = match path.extension().and_then(|e| e.to_str()) {
        Some("csv" | "json") => path.with_extension(""),
        _ => path.to_path_buf(),
    };
    let with = |suffix: &str| {
        let mut name = base.clone().into_os_string();
        name.push(suffix);
        PathBuf::from(name)
    };
    (with(".summary.csv"), with(".histogram.csv"))
}

/// Validates and writes the report. CSV output goes to the two files from
/// [`csv_paths`].
pub fn emit_report(report: &TransplantReport, path: impl AsRef<Path>, format: ReportFormat) -> Result<()> {
    report.validate()?;
    let path = path.as_ref();
    match format {
        ReportFormat::Json => {
            let mut value = serde_json::to_value(report)?;
            value["histogram_proportions"] = serde_json::to_value(report.histogram_proportions())?;
            let mut text = serde_json::to_string_pretty(&value)?;
            text.push('\n');
            fs::write(path, text).map_err(|e| Error::io(path, e))
        }
        ReportFormat::Csv => {
            let (summary, histogram) = csv_paths(path);
            write_lines(&summary, &[summary_header(), summary_row(report)])?;
            let mut lines = vec!["subwords,count".to_string()];
            lines.extend(report.histogram.iter().map(|(k, f)| format!("{k},{f}")));
            write_lines(&histogram, &lines)
        }
    }
}

pub fn read_report(path: impl AsRef<Path>) -> Result<TransplantReport> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.line(), e.to_string()))
}

fn summary_header() -> String {
    "n_shared,n_new,target_size,pct_new,strategy,fallback_count,mean_subwords".into()
}

fn summary_row(r: &TransplantReport) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        r.n_shared,
        r.n_new,
        r.target_size,
        r.pct_new,
        r.strategy.map_or("", |s| s.name()),
        r.fallback_count,
        r.mean_subwords.map_or(String::new(), |m| m.to_string()),
    )
}

fn write_lines(path: &Path, lines: &[String]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for line in lines {
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
