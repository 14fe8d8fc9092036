//! Parsers for the labeled reply formats the prompts ask for.
//!
//! Labels are matched case-sensitively at the start of a line (leading
//! whitespace and markdown bold markers are tolerated). Single-line fields end
//! at the line break; reason and description fields run until the next label
//! or the end of the text.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::critic::Review;

pub const NEW_KEYWORD: &str = "NEW_KEYWORD";
pub const CONNECTED_TO: &str = "CONNECTED_TO";
pub const REASON_FOR_SELECTION: &str = "REASON_FOR_SELECTION";
pub const REPLACEMENT_KEYWORD: &str = "REPLACEMENT_KEYWORD";
pub const REPLACED_KEYWORD: &str = "REPLACED_KEYWORD";
pub const REASON_FOR_REPLACEMENT: &str = "REASON_FOR_REPLACEMENT";
pub const ACTION: &str = "ACTION";
pub const REASON: &str = "REASON";
pub const NOVELTY: &str = "Novelty Score and Description";
pub const FEASIBILITY: &str = "Feasibility Score and Description";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StructuredError {
    #[error("missing field {0}")]
    MissingField(&'static str),
    #[error("field {0} is empty")]
    EmptyField(&'static str),
    #[error("invalid router action {0:?}")]
    InvalidAction(String),
    #[error("invalid score for {label}: {value:?}")]
    InvalidScore { label: &'static str, value: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructuredKind {
    Selection,
    Replacement,
    Router,
    Review,
}

impl StructuredKind {
    pub const ALL: [StructuredKind; 4] = [
        StructuredKind::Selection,
        StructuredKind::Replacement,
        StructuredKind::Router,
        StructuredKind::Review,
    ];

    pub fn labels(self) -> &'static [&'static str] {
        match self {
            StructuredKind::Selection => &[NEW_KEYWORD, CONNECTED_TO, REASON_FOR_SELECTION],
            StructuredKind::Replacement => &[
                REPLACEMENT_KEYWORD,
                CONNECTED_TO,
                REPLACED_KEYWORD,
                REASON_FOR_REPLACEMENT,
            ],
            StructuredKind::Router => &[ACTION, REASON],
            StructuredKind::Review => &[NOVELTY, FEASIBILITY],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub new_keyword: String,
    pub connected_to: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Replacement {
    pub replacement_keyword: String,
    pub connected_to: String,
    pub replaced_keyword: String,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RouterAction {
    #[serde(rename = "Keyword_Replacement")]
    KeywordReplacement,
    #[serde(rename = "Idea_Rewrite")]
    IdeaRewrite,
}

impl RouterAction {
    pub fn as_str(self) -> &'static str {
        match self {
            RouterAction::KeywordReplacement => "Keyword_Replacement",
            RouterAction::IdeaRewrite => "Idea_Rewrite",
        }
    }
}

impl fmt::Display for RouterAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouterReply {
    pub action: RouterAction,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StructuredReply {
    Selection(Selection),
    Replacement(Replacement),
    Router(RouterReply),
    Review(Review),
}

impl StructuredReply {
    pub fn kind(&self) -> StructuredKind {
        match self {
            StructuredReply::Selection(_) => StructuredKind::Selection,
            StructuredReply::Replacement(_) => StructuredKind::Replacement,
            StructuredReply::Router(_) => StructuredKind::Router,
            StructuredReply::Review(_) => StructuredKind::Review,
        }
    }

    /// Label to value view, with review scores rendered as `"<n> - <desc>"`.
    pub fn key_values(&self) -> BTreeMap<&'static str, String> {
        let mut m = BTreeMap::new();
        match self {
            StructuredReply::Selection(s) => {
                m.insert(NEW_KEYWORD, s.new_keyword.clone());
                m.insert(CONNECTED_TO, s.connected_to.clone());
                m.insert(REASON_FOR_SELECTION, s.reason.clone());
            }
            StructuredReply::Replacement(r) => {
                m.insert(REPLACEMENT_KEYWORD, r.replacement_keyword.clone());
                m.insert(CONNECTED_TO, r.connected_to.clone());
                m.insert(REPLACED_KEYWORD, r.replaced_keyword.clone());
                m.insert(REASON_FOR_REPLACEMENT, r.reason.clone());
            }
            StructuredReply::Router(r) => {
                m.insert(ACTION, r.action.as_str().to_string());
                m.insert(REASON, r.reason.clone());
            }
            StructuredReply::Review(r) => {
                m.insert(NOVELTY, r.novelty_line());
                m.insert(FEASIBILITY, r.feasibility_line());
            }
        }
        m
    }

    /// Renders the reply in the exact format the prompts request.
    pub fn to_text(&self) -> String {
        let kv = self.key_values();
        self.kind()
            .labels()
            .iter()
            .map(|label| format!("{label}: {}", kv[label]))
            .collect::<Vec<_>>()
            .join("\n")
    }
}

pub fn parse_structured(
    kind: StructuredKind,
    text: &str,
) -> Result<StructuredReply, StructuredError> {
    Ok(match kind {
        StructuredKind::Selection => StructuredReply::Selection(parse_selection(text)?),
        StructuredKind::Replacement => StructuredReply::Replacement(parse_replacement(text)?),
        StructuredKind::Router => StructuredReply::Router(parse_router(text)?),
        StructuredKind::Review => StructuredReply::Review(parse_review(text)?),
    })
}

pub fn parse_selection(text: &str) -> Result<Selection, StructuredError> {
    let f = Fields::scan(text, StructuredKind::Selection.labels());
    Ok(Selection {
        new_keyword: f.line(NEW_KEYWORD)?,
        connected_to: f.line(CONNECTED_TO)?,
        reason: f.block(REASON_FOR_SELECTION)?,
    })
}

pub fn parse_replacement(text: &str) -> Result<Replacement, StructuredError> {
    let f = Fields::scan(text, StructuredKind::Replacement.labels());
    Ok(Replacement {
        replacement_keyword: f.line(REPLACEMENT_KEYWORD)?,
        connected_to: f.line(CONNECTED_TO)?,
        replaced_keyword: f.line(REPLACED_KEYWORD)?,
        reason: f.block(REASON_FOR_REPLACEMENT)?,
    })
}

pub fn parse_router(text: &str) -> Result<RouterReply, StructuredError> {
    let f = Fields::scan(text, StructuredKind::Router.labels());
    let raw = f.line(ACTION)?;
    let cleaned = raw
        .trim_matches(|c: char| c == '"' || c == '\'' || c == '`' || c == '*')
        .trim_end_matches('.');
    let action = match cleaned {
        "Keyword_Replacement" => RouterAction::KeywordReplacement,
        "Idea_Rewrite" => RouterAction::IdeaRewrite,
        _ => return Err(StructuredError::InvalidAction(raw)),
    };
    Ok(RouterReply {
        action,
        reason: f.block(REASON)?,
    })
}

pub fn parse_review(text: &str) -> Result<Review, StructuredError> {
    let f = Fields::scan(text, StructuredKind::Review.labels());
    let (novelty, novelty_desc) = score_and_description(NOVELTY, &f.block(NOVELTY)?)?;
    let (feasibility, feasibility_desc) =
        score_and_description(FEASIBILITY, &f.block(FEASIBILITY)?)?;
    Ok(Review {
        novelty,
        novelty_desc,
        feasibility,
        feasibility_desc,
    })
}

/// Takes the first integer of `value` as the score; the rest (minus leading
/// separators) is the description.
fn score_and_description(
    label: &'static str,
    value: &str,
) -> Result<(u8, String), StructuredError> {
    let invalid = || StructuredError::InvalidScore {
        label,
        value: value.to_string(),
    };
    let start = value
        .find(|c: char| c.is_ascii_digit())
        .ok_or_else(invalid)?;
    let before = value[..start].trim();
    if before.ends_with('-') && before.len() == 1 {
        return Err(invalid());
    }
    let digits_end = value[start..]
        .find(|c: char| !c.is_ascii_digit())
        .map_or(value.len(), |i| start + i);
    let mut rest = &value[digits_end..];
    if rest.starts_with(['.', ',']) && rest[1..].starts_with(|c: char| c.is_ascii_digit()) {
        return Err(invalid());
    }
    let score: u8 = value[start..digits_end].parse().map_err(|_| invalid())?;
    if !(1..=5).contains(&score) {
        return Err(invalid());
    }
    if let Some(r) = rest.strip_prefix("/5") {
        rest = r;
    } else if let Some(r) = rest.strip_prefix(" out of 5") {
        rest = r;
    }
    let desc = rest
        .trim_start_matches(|c: char| {
            c.is_whitespace() || matches!(c, '-' | '–' | '—' | ':' | '.' | ',' | ')' | ']' | '*')
        })
        .trim();
    if desc.is_empty() {
        return Err(StructuredError::EmptyField(label));
    }
    Ok((score, desc.to_string()))
}

/// First occurrence of each label, with its same-line value and the lines that
/// follow it up to the next label.
struct Fields<'a> {
    found: Vec<(&'static str, &'a str, Vec<&'a str>)>,
}

impl<'a> Fields<'a> {
    fn scan(text: &'a str, labels: &[&'static str]) -> Self {
        let mut found: Vec<(&'static str, &'a str, Vec<&'a str>)> = Vec::new();
        let mut current: Option<usize> = None;
        for line in text.lines() {
            if let Some((label, value)) = match_label(line, labels) {
                if found.iter().any(|(l, _, _)| *l == label) {
                    // repeated label: ignore it and its continuation
                    current = None;
                } else {
                    found.push((label, value, Vec::new()));
                    current = Some(found.len() - 1);
                }
            } else if let Some(i) = current {
                found[i].2.push(line);
            }
        }
        Self { found }
    }

    fn get(
        &self,
        label: &'static str,
    ) -> Result<&(&'static str, &'a str, Vec<&'a str>), StructuredError> {
        self.found
            .iter()
            .find(|(l, _, _)| *l == label)
            .ok_or(StructuredError::MissingField(label))
    }

    /// Same-line value, or the first nonblank continuation line.
    fn line(&self, label: &'static str) -> Result<String, StructuredError> {
        let (_, value, rest) = self.get(label)?;
        let v = value.trim();
        let v = if v.is_empty() {
            rest.iter()
                .map(|l| l.trim())
                .find(|l| !l.is_empty())
                .unwrap_or("")
        } else {
            v
        };
        if v.is_empty() {
            return Err(StructuredError::EmptyField(label));
        }
        Ok(v.to_string())
    }

    fn block(&self, label: &'static str) -> Result<String, StructuredError> {
        let (_, value, rest) = self.get(label)?;
        let mut text = value.trim().to_string();
        for line in rest {
            text.push('\n');
            text.push_str(line);
        }
        let text = text.trim().to_string();
        if text.is_empty() {
            return Err(StructuredError::EmptyField(label));
        }
        Ok(text)
    }
}

fn match_label<'a>(line: &'a str, labels: &[&'static str]) -> Option<(&'static str, &'a str)> {
    let s = line.trim_start();
    let s = s.strip_prefix("**").unwrap_or(s);
    for &label in labels {
        if let Some(rest) = s.strip_prefix(label) {
            let rest = rest.strip_prefix("**").unwrap_or(rest);
            if let Some(rest) = rest.strip_prefix(':') {
                let rest = rest.strip_prefix("**").unwrap_or(rest);
                return Some((label, rest));
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn selection_example() {
        let r = parse_structured(
            StructuredKind::Selection,
            "NEW_KEYWORD: contrastive learning\nCONNECTED_TO: reinforcement learning\nREASON_FOR_SELECTION: bridges reward modeling",
        )
        .unwrap();
        assert_eq!(
            r,
            StructuredReply::Selection(Selection {
                new_keyword: "contrastive learning".into(),
                connected_to: "reinforcement learning".into(),
                reason: "bridges reward modeling".into(),
            })
        );
        assert_eq!(r.key_values().len(), 3);
    }

    #[test]
    fn router_example() {
        let r = parse_router("ACTION: Idea_Rewrite\nREASON: keywords strong, prose weak").unwrap();
        assert_eq!(r.action, RouterAction::IdeaRewrite);
        assert_eq!(r.reason, "keywords strong, prose weak");
        assert_eq!(
            parse_router("ACTION: \"Keyword_Replacement\"\nREASON: x")
                .unwrap()
                .action,
            RouterAction::KeywordReplacement
        );
    }

    #[test]
    fn router_rejects_other_actions() {
        assert_eq!(
            parse_router("ACTION: Replace_Everything").unwrap_err(),
            StructuredError::InvalidAction("Replace_Everything".into())
        );
        assert_eq!(
            parse_router("ACTION: Idea_Rewrite").unwrap_err(),
            StructuredError::MissingField(REASON)
        );
    }

    #[test]
    fn review_example() {
        let r = parse_review(
            "Novelty Score and Description: 4 - builds on known ideas\nFeasibility Score and Description: 5 - directly implementable",
        )
        .unwrap();
        assert_eq!((r.novelty, r.feasibility), (4, 5));
        assert_eq!(r.novelty_desc, "builds on known ideas");
        assert_eq!(r.feasibility_desc, "directly implementable");
    }

    #[test]
    fn review_score_variants() {
        let parse = |n: &str| {
            parse_review(&format!(
                "Novelty Score and Description: {n}\nFeasibility Score and Description: 3 - ok"
            ))
        };
        assert_eq!(parse("Score: 4/5. Fresh angle").unwrap().novelty, 4);
        assert_eq!(
            parse("(2) incremental").unwrap().novelty_desc,
            "incremental"
        );
        assert!(matches!(
            parse("6 - wow"),
            Err(StructuredError::InvalidScore { .. })
        ));
        assert!(matches!(
            parse("0 - none"),
            Err(StructuredError::InvalidScore { .. })
        ));
        assert!(matches!(
            parse("4.5 - half"),
            Err(StructuredError::InvalidScore { .. })
        ));
        assert!(matches!(
            parse("-1 bad"),
            Err(StructuredError::InvalidScore { .. })
        ));
        assert!(matches!(
            parse("high"),
            Err(StructuredError::InvalidScore { .. })
        ));
        assert!(matches!(
            parse("4"),
            Err(StructuredError::EmptyField(NOVELTY))
        ));
        assert!(matches!(
            parse("99999999999 x"),
            Err(StructuredError::InvalidScore { .. })
        ));
    }

    #[test]
    fn multi_line_reason_and_markdown_labels() {
        let r = parse_selection(
            "Sure!\n**NEW_KEYWORD:** meta learning\n**CONNECTED_TO:** few-shot\nREASON_FOR_SELECTION:\nline one\nline two\n",
        )
        .unwrap();
        assert_eq!(r.new_keyword, "meta learning");
        assert_eq!(r.connected_to, "few-shot");
        assert_eq!(r.reason, "line one\nline two");
    }

    #[test]
    fn labels_are_case_sensitive() {
        assert_eq!(
            parse_selection("new_keyword: a\nCONNECTED_TO: b\nREASON_FOR_SELECTION: c")
                .unwrap_err(),
            StructuredError::MissingField(NEW_KEYWORD)
        );
    }

    #[test]
    fn replacement_requires_all_four() {
        let ok = "REPLACEMENT_KEYWORD: x\nCONNECTED_TO: a\nREPLACED_KEYWORD: c\nREASON_FOR_REPLACEMENT: r";
        let r = parse_replacement(ok).unwrap();
        assert_eq!(r.replaced_keyword, "c");
        let missing = ok.replace("REPLACED_KEYWORD: c\n", "");
        assert_eq!(
            parse_replacement(&missing).unwrap_err(),
            StructuredError::MissingField(REPLACED_KEYWORD)
        );
    }

    fn word() -> impl Strategy<Value = String> {
        "[a-z][a-z0-9 ,'()-]{0,30}[a-z]"
    }

    fn reply() -> impl Strategy<Value = StructuredReply> {
        prop_oneof![
            (word(), word(), word()).prop_map(|(a, b, c)| StructuredReply::Selection(Selection {
                new_keyword: a,
                connected_to: b,
                reason: c
            })),
            (word(), word(), word(), word()).prop_map(|(a, b, c, d)| {
                StructuredReply::Replacement(Replacement {
                    replacement_keyword: a,
                    connected_to: b,
                    replaced_keyword: c,
                    reason: d,
                })
            }),
            (any::<bool>(), word()).prop_map(|(k, r)| StructuredReply::Router(RouterReply {
                action: if k {
                    RouterAction::KeywordReplacement
                } else {
                    RouterAction::IdeaRewrite
                },
                reason: r
            })),
            (1u8..=5, word(), 1u8..=5, word()).prop_map(|(n, nd, f, fd)| {
                StructuredReply::Review(Review {
                    novelty: n,
                    novelty_desc: nd,
                    feasibility: f,
                    feasibility_desc: fd,
                })
            }),
        ]
    }

    proptest! {
        #[test]
        fn render_then_parse_is_identity(r in reply()) {
            let parsed = parse_structured(r.kind(), &r.to_text()).unwrap();
            prop_assert_eq!(parsed, r);
        }

        #[test]
        fn never_panics(text in "\\PC{0,200}", k in 0usize..4) {
            let _ = parse_structured(StructuredKind::ALL[k], &text);
        }
    }
}
