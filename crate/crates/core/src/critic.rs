//! Novelty / feasibility scoring of idea proposals.
//!
//! The critic is any chat endpoint that answers the review prompt; a
//! fine-tuned model plugs in through its own [`Gateway`].

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Keyword;
use crate::llm::structured::parse_review;
use crate::llm::{
    AskError, Gateway, LlmError, PromptLibrary, StructuredError, TemplateError, TemplateId,
};
use crate::network::GraphFeatures;
use crate::proposal::IdeaProposal;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CriticError {
    #[error("critic needs at least one keyword")]
    NoKeywords,
    #[error("graph features do not describe the reviewed keyword set")]
    FeatureMismatch,
    #[error("review unavailable after {attempts} attempts: {last}")]
    ReviewUnavailable {
        attempts: usize,
        last: StructuredError,
    },
    #[error(transparent)]
    Llm(#[from] LlmError),
}

/// Integer scores in `1..=5` with their descriptions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Review {
    pub novelty: u8,
    pub novelty_desc: String,
    pub feasibility: u8,
    pub feasibility_desc: String,
}

impl Review {
    /// Exact mean of the two scores (always a multiple of 0.5).
    pub fn average(&self) -> f64 {
        f64::from(self.score_sum()) / 2.0
    }

    pub fn score_sum(&self) -> u8 {
        self.novelty + self.feasibility
    }

    pub fn novelty_line(&self) -> String {
        format!("{} - {}", self.novelty, self.novelty_desc)
    }

    pub fn feasibility_line(&self) -> String {
        format!("{} - {}", self.feasibility, self.feasibility_desc)
    }

    pub fn meets(&self, threshold: u8) -> bool {
        self.novelty >= threshold && self.feasibility >= threshold
    }
}

pub fn join_keywords(keywords: &[Keyword]) -> String {
    keywords
        .iter()
        .map(Keyword::as_str)
        .collect::<Vec<_>>()
        .join(", ")
}

/// The exact review prompt the critic sees. Training data for a critic model
/// must be built with this function so inputs match at inference time.
pub fn render_review_prompt(
    prompts: &PromptLibrary,
    idea_text: &str,
    keywords: &[Keyword],
    features: &GraphFeatures,
) -> Result<String, TemplateError> {
    prompts.render(
        TemplateId::Review,
        &[
            ("research_idea", idea_text),
            ("keywords", &join_keywords(keywords)),
            ("graph_features", &features.render()),
        ],
    )
}

/// Scores `idea` with the critic behind `llm`.
pub fn evaluate_idea(
    idea: &IdeaProposal,
    keywords: &[Keyword],
    features: &GraphFeatures,
    llm: &Gateway,
) -> Result<Review, CriticError> {
    if keywords.is_empty() {
        return Err(CriticError::NoKeywords);
    }
    let described: Vec<&Keyword> = features
        .neighbor_counts
        .iter()
        .map(|n| &n.keyword)
        .collect();
    if described.len() > keywords.len()
        || keywords.iter().any(|k| !described.contains(&k))
        || described.iter().any(|k| !keywords.contains(k))
    {
        return Err(CriticError::FeatureMismatch);
    }
    let idea_text = idea.render();
    let keyword_text = join_keywords(keywords);
    let features_text = features.render();
    let bindings = [
        ("research_idea", idea_text.as_str()),
        ("keywords", keyword_text.as_str()),
        ("graph_features", features_text.as_str()),
    ];
    llm.ask_parsed(TemplateId::Review, &bindings, parse_review)
        .map_err(|e| match e {
            AskError::Llm(e) => CriticError::Llm(e),
            AskError::Rejected { attempts, last } => {
                CriticError::ReviewUnavailable { attempts, last }
            }
        })
}
