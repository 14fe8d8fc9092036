//! Individual workflow steps. Each step either appends exactly one round to
//! the stack or leaves it untouched and returns an error.

use thiserror::Error;

use super::explore::{explore, render_candidates, CandidateKeyword};
use super::stack::{IdeaStack, KeywordChange, RoundRecord, RouteDecision, RouteSource};
use super::{WorkflowConfig, WorkflowError};
use crate::corpus::{normalize_keyword, Keyword};
use crate::critic::{evaluate_idea, join_keywords, CriticError, Review};
use crate::llm::structured::{parse_replacement, parse_router, parse_selection};
use crate::llm::{AskError, Gateway, RouterAction, StructuredError, TemplateId};
use crate::network::SciNetwork;
use crate::proposal::{parse_proposal, IdeaProposal};

/// Why a selection or replacement reply was rejected.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ChoiceError {
    #[error(transparent)]
    Parse(#[from] StructuredError),
    #[error("{0:?} is not one of the candidate keywords")]
    NotACandidate(String),
    #[error("candidate {keyword:?} is connected to {expected:?}, reply said {got:?}")]
    WrongAnchor {
        keyword: String,
        expected: String,
        got: String,
    },
    #[error("{0:?} is not a flexible keyword")]
    NotFlexible(String),
    #[error("candidate {0:?} would lose its only link: its anchor is the keyword being replaced")]
    AnchorReplaced(String),
}

/// Model answers sometimes wrap values in quotes, brackets or bold markers.
fn clean(value: &str) -> Option<Keyword> {
    let v = value
        .trim()
        .trim_matches(|c: char| matches!(c, '"' | '\'' | '`' | '*' | '(' | ')' | '[' | ']' | '.'));
    normalize_keyword(v).ok()
}

fn find_candidate<'a>(
    candidates: &'a [CandidateKeyword],
    name: &str,
) -> Result<&'a CandidateKeyword, ChoiceError> {
    let k = clean(name).ok_or_else(|| ChoiceError::NotACandidate(name.to_string()))?;
    candidates
        .iter()
        .find(|c| c.keyword == k)
        .ok_or_else(|| ChoiceError::NotACandidate(name.to_string()))
}

fn check_anchor(c: &CandidateKeyword, got: &str) -> Result<(), ChoiceError> {
    if clean(got).as_ref() == Some(&c.connected_to) {
        Ok(())
    } else {
        Err(ChoiceError::WrongAnchor {
            keyword: c.keyword.to_string(),
            expected: c.connected_to.to_string(),
            got: got.to_string(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionDecision {
    pub candidate: CandidateKeyword,
    pub reason: String,
}

/// Asks the model to pick one candidate to add.
pub fn select_keyword(
    candidates: &[CandidateKeyword],
    stack: &IdeaStack,
    llm: &Gateway,
) -> Result<SelectionDecision, WorkflowError> {
    if candidates.is_empty() {
        return Err(WorkflowError::NoCandidates);
    }
    let history = stack.render_for_prompt();
    let listing = render_candidates(candidates);
    let bindings = [
        ("idea_stack", history.as_str()),
        ("candidate_keywords_and_relationships", listing.as_str()),
    ];
    llm.ask_parsed(TemplateId::KeywordSelection, &bindings, |reply| {
        let sel = parse_selection(reply)?;
        let c = find_candidate(candidates, &sel.new_keyword)?;
        check_anchor(c, &sel.connected_to)?;
        Ok::<_, ChoiceError>(SelectionDecision {
            candidate: c.clone(),
            reason: sel.reason,
        })
    })
    .map_err(|e| match e {
        AskError::Llm(e) => WorkflowError::Llm(e),
        AskError::Rejected { attempts, last } => WorkflowError::InvalidSelection { attempts, last },
    })
}

/// Text for `{keywords}`: the list, plus the relation of a newly introduced
/// keyword when there is one.
fn keyword_binding(keywords: &[Keyword], introduced: Option<&CandidateKeyword>) -> String {
    let mut s = join_keywords(keywords);
    if let Some(c) = introduced {
        s.push_str(&format!(
            "\n\nThe new keyword \"{}\" is connected to \"{}\" in the scientific network:\n{}",
            c.keyword, c.connected_to, c.relation.text
        ));
    }
    s
}

/// Writes a proposal for `keywords` given the history so far.
pub fn formulate_idea(
    keywords: &[Keyword],
    stack: &IdeaStack,
    llm: &Gateway,
    introduced: Option<&CandidateKeyword>,
) -> Result<IdeaProposal, WorkflowError> {
    if keywords.is_empty() {
        return Err(WorkflowError::Precondition(
            "cannot formulate an idea without keywords".into(),
        ));
    }
    let keyword_text = keyword_binding(keywords, introduced);
    let history = stack.render_for_prompt();
    let bindings = [
        ("keywords", keyword_text.as_str()),
        ("status_bar", history.as_str()),
    ];
    let mut idea = llm
        .ask_parsed(TemplateId::IdeaFormulation, &bindings, parse_proposal)
        .map_err(|e| match e {
            AskError::Llm(e) => WorkflowError::Llm(e),
            AskError::Rejected { attempts, last } => WorkflowError::Format { attempts, last },
        })?;
    idea.cited_paper_ids = introduced
        .map(|c| c.relation.paper_ids.clone())
        .unwrap_or_default();
    Ok(idea)
}

/// Reviews a proposal when the critic is enabled. A reply that never parses
/// yields `(None, Some(error))` rather than failing the round.
pub(super) fn review_round(
    net: &SciNetwork,
    keywords: &[Keyword],
    idea: &IdeaProposal,
    critic: Option<&Gateway>,
    cfg: &WorkflowConfig,
) -> Result<(Option<Review>, Option<String>), WorkflowError> {
    let Some(critic) = critic.filter(|_| cfg.critic_enabled) else {
        return Ok((None, None));
    };
    let features = net.graph_features(keywords)?;
    match evaluate_idea(idea, keywords, &features, critic) {
        Ok(r) => Ok((Some(r), None)),
        Err(e @ CriticError::ReviewUnavailable { .. }) => Ok((None, Some(e.to_string()))),
        Err(e) => Err(WorkflowError::Critic(e)),
    }
}

/// Seed round: formulate and review on the seed keywords.
pub fn seed_step(
    stack: &mut IdeaStack,
    net: &SciNetwork,
    llm: &Gateway,
    critic: Option<&Gateway>,
) -> Result<(), WorkflowError> {
    if !stack.is_empty() {
        return Err(WorkflowError::Precondition(
            "seed round must come first".into(),
        ));
    }
    let keywords = stack.seeds().to_vec();
    let cfg = stack.config().clone();
    let idea = formulate_idea(&keywords, stack, llm, None)?;
    let (review, review_error) = review_round(net, &keywords, &idea, critic, &cfg)?;
    stack.push(RoundRecord {
        round_no: stack.next_round_no(),
        keywords,
        change: KeywordChange::Seed,
        idea,
        review,
        review_error,
        route: None,
    })
}

/// Adds one neighbor to the keyword set and reformulates.
pub fn expand_step(
    stack: &mut IdeaStack,
    net: &SciNetwork,
    llm: &Gateway,
    critic: Option<&Gateway>,
) -> Result<(), WorkflowError> {
    let cfg = stack.config().clone();
    let current = stack.current_keywords().to_vec();
    if current.len() >= cfg.l_max {
        return Err(WorkflowError::Precondition(format!(
            "keyword set already holds {} keywords (limit {})",
            current.len(),
            cfg.l_max
        )));
    }
    let candidates = explore(net, &current, &cfg, llm)?;
    let choice = select_keyword(&candidates, stack, llm)?;
    let new = choice.candidate.keyword.clone();
    assert!(
        !current.contains(&new),
        "explore never offers current members"
    );
    let mut keywords = current;
    keywords.push(new.clone());
    let idea = formulate_idea(&keywords, stack, llm, Some(&choice.candidate))?;
    let (review, review_error) = review_round(net, &keywords, &idea, critic, &cfg)?;
    stack.push(RoundRecord {
        round_no: stack.next_round_no(),
        keywords,
        change: KeywordChange::Added {
            keyword: new,
            connected_to: choice.candidate.connected_to.clone(),
            reason: choice.reason,
        },
        idea,
        review,
        review_error,
        route: None,
    })
}

/// Asks the router for the next evolve action. Falls back to
/// [`RouterAction::IdeaRewrite`] when the latest round has no review or the
/// reply never parses.
pub fn route(stack: &IdeaStack, llm: &Gateway) -> Result<RouteDecision, WorkflowError> {
    let latest = stack
        .latest()
        .ok_or_else(|| WorkflowError::Precondition("router needs at least one round".into()))?;
    let Some(review) = &latest.review else {
        return Ok(RouteDecision {
            action: RouterAction::IdeaRewrite,
            reason: "latest round has no review".into(),
            source: RouteSource::Defaulted,
        });
    };
    let idea = latest.idea.render();
    let keywords = join_keywords(&latest.keywords);
    let novelty = review.novelty_line();
    let feasibility = review.feasibility_line();
    let bindings = [
        ("research_idea", idea.as_str()),
        ("keywords", keywords.as_str()),
        ("novelty_score_desc", novelty.as_str()),
        ("feasibility_score_desc", feasibility.as_str()),
    ];
    match llm.ask_parsed(TemplateId::Router, &bindings, parse_router) {
        Ok(r) => Ok(RouteDecision {
            action: r.action,
            reason: r.reason,
            source: RouteSource::Router,
        }),
        Err(AskError::Rejected { attempts, last }) => Ok(RouteDecision {
            action: RouterAction::IdeaRewrite,
            reason: format!("router reply rejected after {attempts} attempts: {last}"),
            source: RouteSource::Defaulted,
        }),
        Err(AskError::Llm(e)) => Err(WorkflowError::Llm(e)),
    }
}

/// Replaces one flexible keyword with a neighbor and reformulates.
pub fn evolve_keywords(
    stack: &mut IdeaStack,
    net: &SciNetwork,
    llm: &Gateway,
    critic: Option<&Gateway>,
    decision: RouteDecision,
) -> Result<(), WorkflowError> {
    let cfg = stack.config().clone();
    let current = stack.current_keywords().to_vec();
    if current.len() != cfg.l_max {
        return Err(WorkflowError::Precondition(format!(
            "keyword replacement needs a full set of {} keywords, have {}",
            cfg.l_max,
            current.len()
        )));
    }
    let flexible = stack.flexible_keywords();
    if flexible.is_empty() {
        return Err(WorkflowError::NoFlexibleKeywords);
    }
    let candidates = explore(net, &current, &cfg, llm)?;
    if candidates.is_empty() {
        return Err(WorkflowError::NoCandidates);
    }
    let history = stack.render_for_prompt();
    let listing = render_candidates(&candidates);
    let keywords_text = join_keywords(&current);
    let flexible_text = join_keywords(&flexible);
    let bindings = [
        ("keywords", keywords_text.as_str()),
        ("flexible_keywords", flexible_text.as_str()),
        ("idea_stack", history.as_str()),
        ("candidate_keywords_and_relationships", listing.as_str()),
    ];
    let (candidate, old, reason) = llm
        .ask_parsed(TemplateId::KeywordReplacement, &bindings, |reply| {
            let r = parse_replacement(reply)?;
            let c = find_candidate(&candidates, &r.replacement_keyword)?;
            check_anchor(c, &r.connected_to)?;
            let old = clean(&r.replaced_keyword)
                .filter(|k| flexible.contains(k))
                .ok_or_else(|| ChoiceError::NotFlexible(r.replaced_keyword.clone()))?;
            if old == c.connected_to {
                return Err(ChoiceError::AnchorReplaced(c.keyword.to_string()));
            }
            Ok((c.clone(), old, r.reason))
        })
        .map_err(|e| match e {
            AskError::Llm(e) => WorkflowError::Llm(e),
            AskError::Rejected { attempts, last } => {
                WorkflowError::InvalidReplacement { attempts, last }
            }
        })?;

    let keywords: Vec<Keyword> = current
        .iter()
        .map(|k| {
            if *k == old {
                candidate.keyword.clone()
            } else {
                k.clone()
            }
        })
        .collect();
    let idea = formulate_idea(&keywords, stack, llm, Some(&candidate))?;
    let (review, review_error) = review_round(net, &keywords, &idea, critic, &cfg)?;
    stack.push(RoundRecord {
        round_no: stack.next_round_no(),
        keywords,
        change: KeywordChange::Replaced {
            new: candidate.keyword.clone(),
            old,
            connected_to: candidate.connected_to.clone(),
            reason,
        },
        idea,
        review,
        review_error,
        route: Some(decision),
    })
}

/// Rewrites the proposal on the unchanged keyword set.
pub fn evolve_idea(
    stack: &mut IdeaStack,
    net: &SciNetwork,
    llm: &Gateway,
    critic: Option<&Gateway>,
    decision: RouteDecision,
) -> Result<(), WorkflowError> {
    if stack.is_empty() {
        return Err(WorkflowError::Precondition(
            "idea rewrite needs a prior round".into(),
        ));
    }
    let cfg = stack.config().clone();
    let keywords = stack.current_keywords().to_vec();
    let idea = formulate_idea(&keywords, stack, llm, None)?;
    let (review, review_error) = review_round(net, &keywords, &idea, critic, &cfg)?;
    stack.push(RoundRecord {
        round_no: stack.next_round_no(),
        keywords,
        change: KeywordChange::Rewrite,
        idea,
        review,
        review_error,
        route: Some(decision),
    })
}
