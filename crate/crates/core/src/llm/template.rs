//! Prompt templates with `{name}` placeholders.
//!
//! The built-in texts live in `templates/*.txt` next to this crate so they can
//! be audited line by line. Rendering is a single pass: substituted values are
//! copied verbatim and never re-scanned for placeholders.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TemplateError {
    #[error("unknown template {0:?}")]
    UnknownTemplate(String),
    #[error("template {template}: placeholder {{{placeholder}}} is not bound")]
    UnboundPlaceholder {
        template: TemplateId,
        placeholder: String,
    },
    #[error(
        "template {template}: placeholder {{{placeholder}}} is not declared for this template"
    )]
    UndeclaredPlaceholder {
        template: TemplateId,
        placeholder: String,
    },
    #[error("reading template {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    RelationAnalysis,
    KeywordSelection,
    KeywordReplacement,
    IdeaFormulation,
    Review,
    Router,
    Extraction,
}

impl TemplateId {
    pub const ALL: [TemplateId; 7] = [
        TemplateId::RelationAnalysis,
        TemplateId::KeywordSelection,
        TemplateId::KeywordReplacement,
        TemplateId::IdeaFormulation,
        TemplateId::Review,
        TemplateId::Router,
        TemplateId::Extraction,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::RelationAnalysis => "relation_analysis",
            TemplateId::KeywordSelection => "keyword_selection",
            TemplateId::KeywordReplacement => "keyword_replacement",
            TemplateId::IdeaFormulation => "idea_formulation",
            TemplateId::Review => "review",
            TemplateId::Router => "router",
            TemplateId::Extraction => "extraction",
        }
    }

    /// Placeholders a template of this kind may reference.
    pub fn placeholders(self) -> &'static [&'static str] {
        match self {
            TemplateId::RelationAnalysis => {
                &["keyword1", "keyword2", "title", "abstract", "introduction"]
            }
            TemplateId::KeywordSelection => &["idea_stack", "candidate_keywords_and_relationships"],
            TemplateId::KeywordReplacement => &[
                "keywords",
                "flexible_keywords",
                "idea_stack",
                "candidate_keywords_and_relationships",
            ],
            TemplateId::IdeaFormulation => &["keywords", "status_bar"],
            TemplateId::Review => &["research_idea", "keywords", "graph_features"],
            TemplateId::Router => &[
                "research_idea",
                "keywords",
                "novelty_score_desc",
                "feasibility_score_desc",
            ],
            TemplateId::Extraction => &["title", "abstract", "introduction"],
        }
    }

    fn builtin_text(self) -> &'static str {
        match self {
            TemplateId::RelationAnalysis => include_str!("../../templates/relation_analysis.txt"),
            TemplateId::KeywordSelection => include_str!("../../templates/keyword_selection.txt"),
            TemplateId::KeywordReplacement => {
                include_str!("../../templates/keyword_replacement.txt")
            }
            TemplateId::IdeaFormulation => include_str!("../../templates/idea_formulation.txt"),
            TemplateId::Review => include_str!("../../templates/review.txt"),
            TemplateId::Router => include_str!("../../templates/router.txt"),
            TemplateId::Extraction => include_str!("../../templates/extraction.txt"),
        }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateId {
    type Err = TemplateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TemplateId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| TemplateError::UnknownTemplate(s.to_string()))
    }
}

enum Piece<'a> {
    Literal(&'a str),
    Placeholder(&'a str),
}

/// Splits `text` into literals and `{ident}` placeholders. Any other brace
/// usage is literal.
fn pieces(text: &str) -> Vec<Piece<'_>> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut literal_start = 0;
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i] == b'{' {
            let mut j = i + 1;
            while j < bytes.len()
                && (bytes[j].is_ascii_lowercase() || bytes[j].is_ascii_digit() || bytes[j] == b'_')
            {
                j += 1;
            }
            if j > i + 1 && j < bytes.len() && bytes[j] == b'}' {
                if literal_start < i {
                    out.push(Piece::Literal(&text[literal_start..i]));
                }
                out.push(Piece::Placeholder(&text[i + 1..j]));
                i = j + 1;
                literal_start = i;
                continue;
            }
        }
        i += 1;
    }
    if literal_start < text.len() {
        out.push(Piece::Literal(&text[literal_start..]));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplate {
    id: TemplateId,
    text: String,
}

impl PromptTemplate {
    /// Fails if `text` references a placeholder not declared for `id`.
    pub fn new(id: TemplateId, text: impl Into<String>) -> Result<Self, TemplateError> {
        let text = text.into();
        for piece in pieces(&text) {
            if let Piece::Placeholder(name) = piece {
                if !id.placeholders().contains(&name) {
                    return Err(TemplateError::UndeclaredPlaceholder {
                        template: id,
                        placeholder: name.to_string(),
                    });
                }
            }
        }
        Ok(Self { id, text })
    }

    pub fn id(&self) -> TemplateId {
        self.id
    }

    pub fn text(&self) -> &str {
        &self.text
    }

    /// Placeholder names in order of first appearance.
    pub fn placeholders(&self) -> Vec<&str> {
        let mut seen = Vec::new();
        for piece in pieces(&self.text) {
            if let Piece::Placeholder(name) = piece {
                if !seen.contains(&name) {
                    seen.push(name);
                }
            }
        }
        seen
    }

    pub fn render(&self, bindings: &[(&str, &str)]) -> Result<String, TemplateError> {
        let mut out = String::with_capacity(self.text.len() + 256);
        for piece in pieces(&self.text) {
            match piece {
                Piece::Literal(s) => out.push_str(s),
                Piece::Placeholder(name) => {
                    let value = bindings
                        .iter()
                        .find(|(k, _)| *k == name)
                        .map(|(_, v)| *v)
                        .ok_or_else(|| TemplateError::UnboundPlaceholder {
                            template: self.id,
                            placeholder: name.to_string(),
                        })?;
                    out.push_str(value);
                }
            }
        }
        Ok(out)
    }
}

/// The full set of templates used by the gateway.
#[derive(Debug, Clone)]
pub struct PromptLibrary {
    templates: BTreeMap<TemplateId, PromptTemplate>,
}

impl Default for PromptLibrary {
    fn default() -> Self {
        Self::builtin()
    }
}

impl PromptLibrary {
    pub fn builtin() -> Self {
        let templates = TemplateId::ALL
            .into_iter()
            .map(|id| {
                let t = PromptTemplate::new(id, id.builtin_text())
                    .expect("built-in templates only use declared placeholders");
                (id, t)
            })
            .collect();
        Self { templates }
    }

    /// Built-in templates, overridden by any `<template_id>.txt` found in `dir`.
    pub fn with_overrides(dir: &Path) -> Result<Self, TemplateError> {
        let mut lib = Self::builtin();
        for id in TemplateId::ALL {
            let path = dir.join(format!("{}.txt", id.as_str()));
            if path.exists() {
                let text = std::fs::read_to_string(&path).map_err(|e| TemplateError::Io {
                    path: path.display().to_string(),
                    message: e.to_string(),
                })?;
                lib.templates.insert(id, PromptTemplate::new(id, text)?);
            }
        }
        Ok(lib)
    }

    pub fn get(&self, id: TemplateId) -> &PromptTemplate {
        &self.templates[&id]
    }

    pub fn render(
        &self,
        id: TemplateId,
        bindings: &[(&str, &str)],
    ) -> Result<String, TemplateError> {
        self.get(id).render(bindings)
    }
}

/// Renders a built-in template looked up by its string id.
pub fn render_prompt(
    template_id: &str,
    bindings: &[(&str, &str)],
) -> Result<String, TemplateError> {
    let id: TemplateId = template_id.parse()?;
    PromptLibrary::builtin().render(id, bindings)
}
