use std::fmt;

use serde::{Deserialize, Serialize};

use super::CorpusError;

/// A normalized keyword: lowercase, trimmed, internal whitespace collapsed.
///
/// Two raw strings name the same keyword iff they normalize to the same text.
/// There is no stemming or synonym merging.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Keyword(String);

impl Keyword {
    pub fn new(raw: &str) -> Result<Self, CorpusError> {
        normalize_keyword(raw)
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

/// Lowercases `raw`, strips surrounding whitespace and collapses internal
/// whitespace runs to a single space.
pub fn normalize_keyword(raw: &str) -> Result<Keyword, CorpusError> {
    let mut out = String::with_capacity(raw.len());
    for word in raw.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(word.chars().flat_map(char::to_lowercase));
    }
    if out.is_empty() {
        return Err(CorpusError::EmptyKeyword {
            raw: raw.to_string(),
        });
    }
    Ok(Keyword(out))
}

impl TryFrom<String> for Keyword {
    type Error = CorpusError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        normalize_keyword(&value)
    }
}

impl From<Keyword> for String {
    fn from(value: Keyword) -> Self {
        value.0
    }
}

impl AsRef<str> for Keyword {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Keyword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}
