//! Idea proposals and the section splitter for formulation replies.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProposalError {
    #[error("proposal has no {0} section")]
    MissingSection(Section),
    #[error("proposal section {0} is empty")]
    EmptySection(Section),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Section {
    Background,
    Idea,
    Implementation,
}

impl Section {
    pub const ALL: [Section; 3] = [Section::Background, Section::Idea, Section::Implementation];

    pub fn heading(self) -> &'static str {
        match self {
            Section::Background => "Research Background",
            Section::Idea => "Research Idea",
            Section::Implementation => "Implementation Approach",
        }
    }
}

impl std::fmt::Display for Section {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.heading())
    }
}

/// Background, idea and implementation approach.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdeaProposal {
    pub background: String,
    pub idea: String,
    pub implementation: String,
    /// Papers whose relation texts were in the prompt that produced this proposal.
    #[serde(default)]
    pub cited_paper_ids: Vec<String>,
}

impl IdeaProposal {
    pub fn section(&self, s: Section) -> &str {
        match s {
            Section::Background => &self.background,
            Section::Idea => &self.idea,
            Section::Implementation => &self.implementation,
        }
    }

    /// Canonical text form: three headed paragraphs. [`parse_proposal`]
    /// reads it back.
    pub fn render(&self) -> String {
        Section::ALL
            .iter()
            .map(|s| format!("{}: {}", s.heading(), self.section(*s)))
            .collect::<Vec<_>>()
            .join("\n\n")
    }
}

/// Recognizes a heading line, returning its section and any inline content.
fn heading(line: &str) -> Option<(Section, &str)> {
    let trimmed = line
        .trim()
        .trim_start_matches(['#', '*', '_', ' '])
        .trim_start_matches(|c: char| c.is_ascii_digit())
        .trim_start_matches(['.', ')', ' ', '*']);
    let (head, rest) = match trimmed.find(':') {
        Some(i) => (&trimmed[..i], &trimmed[i + 1..]),
        None => (trimmed, ""),
    };
    let head = head.trim_matches(|c: char| c == '*' || c == '_' || c.is_whitespace());
    if head.is_empty() || head.split_whitespace().count() > 5 {
        return None;
    }
    let h = head.to_lowercase();
    let h = h
        .strip_prefix("the ")
        .or_else(|| h.strip_prefix("a "))
        .unwrap_or(&h);
    let section = if h.contains("implementation") {
        Section::Implementation
    } else if h.ends_with("background") {
        Section::Background
    } else if h.ends_with("research idea") || h == "idea" || h.ends_with(" idea") {
        Section::Idea
    } else {
        return None;
    };
    let rest = rest.trim_start_matches(['*', '_']).trim();
    Some((section, rest))
}

/// Splits a formulation reply into its three sections.
///
/// Headings may be markdown (`## Research Idea`, `**Research Idea:**`),
/// numbered, or inline (`Research Idea: ...`). Text before the first heading
/// is ignored; a repeated heading keeps the first occurrence.
pub fn parse_proposal(text: &str) -> Result<IdeaProposal, ProposalError> {
    let mut parts: [Option<Vec<&str>>; 3] = [None, None, None];
    let mut current: Option<usize> = None;
    for line in text.lines() {
        if let Some((section, inline)) = heading(line) {
            let i = section as usize;
            if parts[i].is_none() {
                parts[i] = Some(vec![inline]);
                current = Some(i);
            } else {
                current = None;
            }
            continue;
        }
        if let Some(i) = current {
            parts[i]
                .as_mut()
                .expect("current section exists")
                .push(line);
        }
    }
    let mut out: [String; 3] = Default::default();
    for s in Section::ALL {
        let lines = parts[s as usize]
            .as_ref()
            .ok_or(ProposalError::MissingSection(s))?;
        let body = lines.join("\n").trim().to_string();
        if body.is_empty() {
            return Err(ProposalError::EmptySection(s));
        }
        out[s as usize] = body;
    }
    let [background, idea, implementation] = out;
    Ok(IdeaProposal {
        background,
        idea,
        implementation,
        cited_paper_ids: Vec::new(),
    })
}
