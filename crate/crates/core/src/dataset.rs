use std::collections::HashSet;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

/// Dense record identifier, `0..n` in load order.
pub type RecordId = u32;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Record {
    pub id: RecordId,
    pub text: String,
}

/// An immutable, duplicate-free collection of non-empty strings.
///
/// Each record's text is also kept as a `Vec<char>` so that distance
/// computations operate on unicode scalar values without re-decoding.
#[derive(Debug, Clone)]
pub struct Dataset {
    records: Vec<Record>,
    chars: Vec<Vec<char>>,
}

impl Dataset {
    /// Builds a dataset from raw lines: surrounding whitespace is trimmed,
    /// blank lines are dropped and only the first occurrence of each text is
    /// kept. Ids follow the order of the surviving lines.
    pub fn from_lines<I, S>(lines: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self::collect(lines, None, "<memory>")
    }

    fn collect<I, S>(lines: I, max_records: Option<usize>, origin: &str) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut seen = HashSet::new();
        let mut records = Vec::new();
        let mut chars = Vec::new();
        for line in lines {
            if max_records.is_some_and(|max| records.len() >= max) {
                break;
            }
            let text = line.as_ref().trim();
            if text.is_empty() || !seen.insert(text.to_owned()) {
                continue;
            }
            let id = RecordId::try_from(records.len())
                .map_err(|_| Error::InvalidParameter("more than u32::MAX records".into()))?;
            chars.push(text.chars().collect());
            records.push(Record {
                id,
                text: text.to_owned(),
            });
        }
        if records.is_empty() {
            return Err(Error::EmptyDataset(origin.to_owned()));
        }
        Ok(Self { records, chars })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[Record] {
        &self.records
    }

    pub fn text(&self, id: RecordId) -> &str {
        &self.records[id as usize].text
    }

    pub fn chars(&self, id: RecordId) -> &[char] {
        &self.chars[id as usize]
    }

    pub fn ids(&self) -> impl ExactSizeIterator<Item = RecordId> + '_ {
        self.records.iter().map(|r| r.id)
    }

    /// Edit distance between two stored records. Used at build time, where
    /// evaluations are not instrumented.
    pub fn distance(&self, a: RecordId, b: RecordId) -> u32 {
        crate::metrics::edit_distance_chars(self.chars(a), self.chars(b))
    }
}

/// Reads a newline-delimited UTF-8 word list.
///
/// Lines are trimmed, blank lines and repeated texts are dropped, and when
/// `max_records` is set only the first `max_records` surviving lines are kept.
pub fn load_dataset(path: impl AsRef<Path>, max_records: Option<usize>) -> Result<Dataset> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })?;
    Dataset::collect(content.lines(), max_records, &path.display().to_string())
}

/// A range query: every record within `radius` edits of `text`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RangeQuery {
    pub text: String,
    pub radius: u32,
}

impl RangeQuery {
    pub fn new(text: impl Into<String>, radius: u32) -> Self {
        Self {
            text: text.into(),
            radius,
        }
    }
}
