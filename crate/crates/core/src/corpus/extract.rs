use crate::llm::{AskError, Gateway, TemplateId};

use super::{normalize_keyword, CorpusError, Keyword, PaperRecord};

/// Attempts per paper when the model returns the wrong number of keywords.
pub const EXTRACTION_ATTEMPTS: usize = 3;

/// Splits an extraction reply into distinct normalized keywords.
///
/// Reads the `KEYWORDS:` line if present, otherwise the whole reply, and
/// splits on semicolons and line breaks.
pub fn parse_keyword_reply(reply: &str) -> Vec<Keyword> {
    let body = reply
        .lines()
        .find_map(|l| l.trim_start().strip_prefix("KEYWORDS:"))
        .unwrap_or(reply);
    dedupe(body.split([';', '\n']).map(|s| {
        s.trim()
            .trim_start_matches(['-', '*'])
            .trim_matches(|c: char| c == '"' || c == '(' || c == ')')
    }))
}

fn dedupe<'a>(raw: impl Iterator<Item = &'a str>) -> Vec<Keyword> {
    let mut out: Vec<Keyword> = Vec::new();
    for k in raw.filter_map(|s| normalize_keyword(s).ok()) {
        if !out.contains(&k) {
            out.push(k);
        }
    }
    out
}

fn check_count(paper: &PaperRecord, keywords: Vec<Keyword>) -> Result<Vec<Keyword>, CorpusError> {
    if (3..=4).contains(&keywords.len()) {
        Ok(keywords)
    } else {
        Err(CorpusError::ExtractionCount {
            paper_id: paper.id.clone(),
            count: keywords.len(),
        })
    }
}

/// Returns 3-4 distinct normalized keywords for `paper`.
///
/// Records that already carry keywords are normalized without contacting the
/// model. Otherwise the extraction prompt is asked up to
/// [`EXTRACTION_ATTEMPTS`] times.
pub fn extract_keywords(
    paper: &PaperRecord,
    llm: Option<&Gateway>,
) -> Result<Vec<Keyword>, CorpusError> {
    if let Some(raw) = &paper.keywords {
        return check_count(paper, dedupe(raw.iter().map(String::as_str)));
    }
    for (field, value) in [("title", &paper.title), ("abstract", &paper.abstract_text)] {
        if value.trim().is_empty() {
            return Err(CorpusError::ExtractionInput {
                paper_id: paper.id.clone(),
                field,
            });
        }
    }
    let Some(llm) = llm else {
        return Err(CorpusError::ExtractionTransport {
            paper_id: paper.id.clone(),
            source: crate::llm::LlmError::InvalidRequest(
                "record has no keywords and no model is configured".into(),
            ),
        });
    };
    let bindings = [
        ("title", paper.title.as_str()),
        ("abstract", paper.abstract_text.as_str()),
        ("introduction", paper.introduction.as_str()),
    ];
    llm.ask_with_attempts(
        TemplateId::Extraction,
        &bindings,
        EXTRACTION_ATTEMPTS,
        |reply| check_count(paper, parse_keyword_reply(reply)),
    )
    .map_err(|e| match e {
        AskError::Llm(source) => CorpusError::ExtractionTransport {
            paper_id: paper.id.clone(),
            source,
        },
        AskError::Rejected { last, .. } => last,
    })
}
