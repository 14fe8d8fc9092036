//! Paper metadata ingestion.
//!
//! A corpus is a UTF-8 file with one JSON object per line. Each object carries
//! `id`, `venue`, `year`, `category`, `title`, `abstract`, `introduction` and an
//! optional `keywords` array of raw strings.

mod extract;
mod keyword;
pub mod toy;

use std::collections::HashSet;
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use extract::{extract_keywords, parse_keyword_reply, EXTRACTION_ATTEMPTS};
pub use keyword::{normalize_keyword, Keyword};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CorpusError {
    #[error("keyword {raw:?} is empty after normalization")]
    EmptyKeyword { raw: String },
    #[error("paper {paper_id}: expected 3-4 distinct keywords, got {count}")]
    ExtractionCount { paper_id: String, count: usize },
    #[error("paper {paper_id}: {field} must be nonempty for keyword extraction")]
    ExtractionInput {
        paper_id: String,
        field: &'static str,
    },
    #[error("paper {paper_id}: keyword extraction failed: {source}")]
    ExtractionTransport {
        paper_id: String,
        #[source]
        source: crate::llm::LlmError,
    },
}

/// Venue group a paper belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Category {
    #[serde(rename = "DL")]
    DeepLearning,
    #[serde(rename = "NLP")]
    NaturalLanguage,
    #[serde(rename = "CV")]
    ComputerVision,
    #[serde(rename = "GeneralAI", alias = "General AI")]
    GeneralAi,
}

impl Category {
    pub const ALL: [Category; 4] = [
        Category::DeepLearning,
        Category::NaturalLanguage,
        Category::ComputerVision,
        Category::GeneralAi,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Category::DeepLearning => "DL",
            Category::NaturalLanguage => "NLP",
            Category::ComputerVision => "CV",
            Category::GeneralAi => "GeneralAI",
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PaperRecord {
    pub id: String,
    pub venue: String,
    pub year: i32,
    pub category: Category,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub introduction: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub keywords: Option<Vec<String>>,
}

const REQUIRED_FIELDS: [&str; 7] = [
    "id",
    "venue",
    "year",
    "category",
    "title",
    "abstract",
    "introduction",
];

/// Why a single corpus line was rejected.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LineErrorKind {
    #[error("malformed JSON: {0}")]
    Malformed(String),
    #[error("missing field `{0}`")]
    MissingField(&'static str),
    #[error("invalid record: {0}")]
    Invalid(String),
    #[error("duplicate paper id {0:?}")]
    DuplicateId(String),
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {kind}")]
pub struct LineError {
    /// 1-based line number in the input.
    pub line: usize,
    pub kind: LineErrorKind,
}

/// A successfully parsed record together with the line it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedPaper {
    pub line: usize,
    pub record: PaperRecord,
}

#[derive(Debug, Default, Clone)]
pub struct CorpusParse {
    pub papers: Vec<ParsedPaper>,
    pub errors: Vec<LineError>,
}

impl CorpusParse {
    pub fn records(&self) -> impl Iterator<Item = &PaperRecord> {
        self.papers.iter().map(|p| &p.record)
    }

    pub fn into_records(self) -> Vec<PaperRecord> {
        self.papers.into_iter().map(|p| p.record).collect()
    }
}

/// Parses a line-delimited corpus. Bad lines are collected, never fatal.
///
/// Blank lines are skipped. The first occurrence of an id wins; later lines
/// repeating it are reported as [`LineErrorKind::DuplicateId`].
pub fn parse_corpus(input: &str) -> CorpusParse {
    let lines: Vec<(usize, &str)> = input
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l))
        .collect();

    let parsed: Vec<(usize, Result<PaperRecord, LineErrorKind>)> = lines
        .par_iter()
        .map(|&(line, text)| (line, parse_line(text)))
        .collect();

    let mut out = CorpusParse::default();
    let mut seen = HashSet::new();
    for (line, result) in parsed {
        match result {
            Ok(record) => {
                if seen.insert(record.id.clone()) {
                    out.papers.push(ParsedPaper { line, record });
                } else {
                    out.errors.push(LineError {
                        line,
                        kind: LineErrorKind::DuplicateId(record.id),
                    });
                }
            }
            Err(kind) => out.errors.push(LineError { line, kind }),
        }
    }
    out
}

fn parse_line(text: &str) -> Result<PaperRecord, LineErrorKind> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| LineErrorKind::Malformed(e.to_string()))?;
    let obj = value
        .as_object()
        .ok_or_else(|| LineErrorKind::Malformed("expected a JSON object".into()))?;
    for field in REQUIRED_FIELDS {
        if obj.get(field).is_none_or(|v| v.is_null()) {
            return Err(LineErrorKind::MissingField(field));
        }
    }
    let record: PaperRecord =
        serde_json::from_value(value).map_err(|e| LineErrorKind::Invalid(e.to_string()))?;
    if record.id.trim().is_empty() {
        return Err(LineErrorKind::Invalid("id is empty".into()));
    }
    if record.title.trim().is_empty() {
        return Err(LineErrorKind::Invalid("title is empty".into()));
    }
    Ok(record)
}

/// Serializes records back into the line-delimited corpus format.
pub fn write_corpus(records: &[PaperRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("paper records always serialize"));
        out.push('\n');
    }
    out
}
