//! Shared helpers for the tab-separated formats read and written by every stage.
//!
//! Input files are UTF-8, LF-terminated, with `#`-prefixed comment lines.
//! Blank lines are ignored alongside comments; every other line is a data
//! line and is either accepted or rejected by the parser that reads it.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

/// Marker written in place of an absent value.
pub const ABSENT: &str = "-";

/// A data line: 1-based line number plus its tab-split fields.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataLine<'a> {
    pub number: usize,
    pub fields: Vec<&'a str>,
}

/// Iterate over the data lines of `text`, skipping comments and blank lines.
pub fn data_lines(text: &str) -> impl Iterator<Item = DataLine<'_>> {
    text.split('\n').enumerate().filter_map(|(i, raw)| {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        if line.is_empty() || line.starts_with('#') {
            None
        } else {
            Some(DataLine {
                number: i + 1,
                fields: line.split('\t').collect(),
            })
        }
    })
}

/// Read a whole file as UTF-8, attaching the path to any error.
pub fn read_text(path: &Path) -> Result<String, ReadError> {
    fs::read_to_string(path).map_err(|source| ReadError {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, thiserror::Error)]
#[error("cannot read {}: {source}", path.display())]
pub struct ReadError {
    pub path: PathBuf,
    #[source]
    pub source: io::Error,
}

/// Format a real with 17 significant digits (round-trips every `f64`).
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fmt_opt_real(x: Option<f64>) -> String {
    x.map_or_else(|| ABSENT.to_string(), fmt_real)
}

pub fn parse_opt_real(field: &str) -> Option<Option<f64>> {
    if field == ABSENT {
        Some(None)
    } else {
        field.parse::<f64>().ok().filter(|x| x.is_finite()).map(Some)
    }
}

/// Why a data line was not accepted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RejectReason {
    Malformed,
    SelfLoop,
    Dangling,
    UnknownPage,
    UnknownEntity,
    OutOfRange,
    Duplicate,
}

impl RejectReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectReason::Malformed => "malformed",
            RejectReason::SelfLoop => "self_loop",
            RejectReason::Dangling => "dangling",
            RejectReason::UnknownPage => "unknown_page",
            RejectReason::UnknownEntity => "unknown_entity",
            RejectReason::OutOfRange => "out_of_range",
            RejectReason::Duplicate => "duplicate",
        }
    }
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Accepted/rejected accounting for one parsed file.
///
/// `accepted + rejected.len() == input_lines` always holds.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParseReport {
    pub input_lines: usize,
    pub accepted: usize,
    pub rejected: Vec<(usize, RejectReason)>,
}

impl ParseReport {
    pub fn accept(&mut self) {
        self.input_lines += 1;
        self.accepted += 1;
    }

    pub fn reject(&mut self, line: usize, reason: RejectReason) {
        self.input_lines += 1;
        self.rejected.push((line, reason));
    }

    pub fn rejected_count(&self) -> usize {
        self.rejected.len()
    }

    pub fn count(&self, reason: RejectReason) -> usize {
        self.rejected.iter().filter(|(_, r)| *r == reason).count()
    }

    pub fn by_reason(&self) -> BTreeMap<RejectReason, usize> {
        let mut out = BTreeMap::new();
        for (_, r) in &self.rejected {
            *out.entry(*r).or_insert(0) += 1;
        }
        out
    }
}
