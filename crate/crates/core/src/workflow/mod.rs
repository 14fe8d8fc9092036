//! Explore, expand and evolve: the round-by-round ideation loop.
//!
//! A run starts from seed keywords, grows the keyword set one neighbor at a
//! time up to `l_max`, then alternates keyword replacement and idea rewrites
//! until both review scores reach the threshold or the evolve budget is spent.

mod explore;
mod report;
mod stack;
mod steps;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Keyword;
use crate::critic::CriticError;
use crate::llm::{Gateway, LlmError, RouterAction};
use crate::network::{NetworkError, SciNetwork, DEFAULT_CAP_PAPERS};
use crate::proposal::ProposalError;

pub use explore::{explore, render_candidates, CandidateKeyword};
pub use report::{render_markdown, RunRecord, RunRecordError};
pub use stack::{
    IdeaStack, KeywordChange, RoundRecord, RouteDecision, RouteSource, EMPTY_STACK_SENTINEL,
    RUN_FORMAT, RUN_VERSION,
};
pub use steps::{
    evolve_idea, evolve_keywords, expand_step, formulate_idea, route, seed_step, select_keyword,
    ChoiceError, SelectionDecision,
};

/// Which keywords may be swapped out during evolution.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlexiblePolicy {
    /// Keywords that entered through expansion or replacement; seeds stay.
    #[default]
    AddedOnly,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorkflowConfig {
    /// Neighbors offered per current keyword.
    pub m: usize,
    /// Largest keyword set.
    pub l_max: usize,
    pub max_evolve_rounds: usize,
    /// Both scores must reach this for an early stop.
    pub stop_threshold: u8,
    pub flexible_policy: FlexiblePolicy,
    /// Recorded with the run. Nothing in the loop samples, so it has no effect yet.
    pub seed: u64,
    pub evolve_enabled: bool,
    pub critic_enabled: bool,
    /// Papers summarized per relation.
    pub cap_papers: usize,
}

impl Default for WorkflowConfig {
    fn default() -> Self {
        Self {
            m: 12,
            l_max: 4,
            max_evolve_rounds: 5,
            stop_threshold: 4,
            flexible_policy: FlexiblePolicy::AddedOnly,
            seed: 0,
            evolve_enabled: true,
            critic_enabled: true,
            cap_papers: DEFAULT_CAP_PAPERS,
        }
    }
}

impl WorkflowConfig {
    pub fn validate(&self) -> Result<(), WorkflowError> {
        let bad = |msg: &str| Err(WorkflowError::Config(msg.to_string()));
        if self.m == 0 {
            return bad("m must be at least 1");
        }
        if self.l_max == 0 {
            return bad("l_max must be at least 1");
        }
        if self.cap_papers == 0 {
            return bad("cap_papers must be at least 1");
        }
        if !(1..=5).contains(&self.stop_threshold) {
            return bad("stop_threshold must be between 1 and 5");
        }
        Ok(())
    }

    /// Checks the config against a concrete seed list.
    pub fn validate_seeds(&self, seeds: &[Keyword]) -> Result<(), WorkflowError> {
        self.validate()?;
        if seeds.is_empty() {
            return Err(WorkflowError::Config(
                "at least one seed keyword is required".into(),
            ));
        }
        if seeds.len() > self.l_max {
            return Err(WorkflowError::Config(format!(
                "{} seed keywords exceed l_max = {}",
                seeds.len(),
                self.l_max
            )));
        }
        for (i, s) in seeds.iter().enumerate() {
            if seeds[..i].contains(s) {
                return Err(WorkflowError::Config(format!("seed {s:?} given twice")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WorkflowError {
    #[error("invalid workflow config: {0}")]
    Config(String),
    #[error("seed keyword {0:?} is not in the network")]
    UnknownSeed(String),
    #[error(transparent)]
    Network(#[from] NetworkError),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("keyword selection rejected after {attempts} attempts: {last}")]
    InvalidSelection { attempts: usize, last: ChoiceError },
    #[error("keyword replacement rejected after {attempts} attempts: {last}")]
    InvalidReplacement { attempts: usize, last: ChoiceError },
    #[error("idea proposal rejected after {attempts} attempts: {last}")]
    Format {
        attempts: usize,
        last: ProposalError,
    },
    #[error("no candidate keywords: the current set has no outside neighbors")]
    NoCandidates,
    #[error("no flexible keywords to replace")]
    NoFlexibleKeywords,
    #[error("{0}")]
    Precondition(String),
    #[error(transparent)]
    Critic(#[from] CriticError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// A review met the stop threshold on both scores.
    ThresholdReached,
    /// The evolve budget was spent.
    MaxRounds,
    /// Evolution is switched off and the keyword set is full.
    EvolveDisabled,
    /// Expansion found no outside neighbors before the set was full.
    CandidatesExhausted,
    /// A step failed; see `error`.
    Aborted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunOutcome {
    pub stack: IdeaStack,
    pub best_round: Option<u32>,
    pub stop: StopReason,
    pub error: Option<String>,
}

impl RunOutcome {
    fn finish(stack: IdeaStack, stop: StopReason, error: Option<String>) -> Self {
        let best_round = stack.best_round().map(|r| r.round_no);
        Self {
            stack,
            best_round,
            stop,
            error,
        }
    }

    /// Run record: stack lines followed by one outcome line.
    pub fn to_record(&self) -> String {
        RunRecord::from_outcome(self).to_jsonl()
    }
}

fn threshold_met(stack: &IdeaStack) -> bool {
    let t = stack.config().stop_threshold;
    stack
        .latest()
        .and_then(|r| r.review.as_ref())
        .is_some_and(|r| r.meets(t))
}

/// Runs the full loop. Configuration and seed problems are returned as
/// errors; a step that fails mid-run ends the run with
/// [`StopReason::Aborted`] and the rounds completed so far.
pub fn run(
    cfg: &WorkflowConfig,
    seeds: &[Keyword],
    net: &SciNetwork,
    llm: &Gateway,
    critic: Option<&Gateway>,
) -> Result<RunOutcome, WorkflowError> {
    cfg.validate_seeds(seeds)?;
    if cfg.critic_enabled && critic.is_none() {
        return Err(WorkflowError::Config(
            "critic is enabled but no critic model was given".into(),
        ));
    }
    if let Some(s) = seeds.iter().find(|s| !net.contains(s)) {
        return Err(WorkflowError::UnknownSeed(s.to_string()));
    }
    let mut stack = IdeaStack::new(cfg.clone(), seeds.to_vec());
    let abort = |stack: IdeaStack, e: WorkflowError| {
        RunOutcome::finish(stack, StopReason::Aborted, Some(e.to_string()))
    };

    if let Err(e) = seed_step(&mut stack, net, llm, critic) {
        return Ok(abort(stack, e));
    }
    if threshold_met(&stack) {
        return Ok(RunOutcome::finish(
            stack,
            StopReason::ThresholdReached,
            None,
        ));
    }

    while stack.current_keywords().len() < cfg.l_max {
        match expand_step(&mut stack, net, llm, critic) {
            Ok(()) => {}
            Err(WorkflowError::NoCandidates) => {
                return Ok(RunOutcome::finish(
                    stack,
                    StopReason::CandidatesExhausted,
                    None,
                ));
            }
            Err(e) => return Ok(abort(stack, e)),
        }
        if threshold_met(&stack) {
            return Ok(RunOutcome::finish(
                stack,
                StopReason::ThresholdReached,
                None,
            ));
        }
    }

    if !cfg.evolve_enabled {
        return Ok(RunOutcome::finish(stack, StopReason::EvolveDisabled, None));
    }

    for i in 0..cfg.max_evolve_rounds {
        if let Err(e) = evolve_round(&mut stack, net, llm, critic, i) {
            return Ok(abort(stack, e));
        }
        if threshold_met(&stack) {
            return Ok(RunOutcome::finish(
                stack,
                StopReason::ThresholdReached,
                None,
            ));
        }
    }
    Ok(RunOutcome::finish(stack, StopReason::MaxRounds, None))
}

/// One evolve round: pick an action, then apply it. Replacement falls back to
/// a rewrite when nothing can be replaced or nothing can replace it.
fn evolve_round(
    stack: &mut IdeaStack,
    net: &SciNetwork,
    llm: &Gateway,
    critic: Option<&Gateway>,
    index: usize,
) -> Result<(), WorkflowError> {
    let forced = |reason: &str| RouteDecision {
        action: RouterAction::IdeaRewrite,
        reason: reason.to_string(),
        source: RouteSource::Forced,
    };
    let decision = if stack.flexible_keywords().is_empty() {
        forced("every keyword is a seed; nothing can be replaced")
    } else if stack.config().critic_enabled {
        route(stack, llm)?
    } else {
        let action = if index.is_multiple_of(2) {
            RouterAction::KeywordReplacement
        } else {
            RouterAction::IdeaRewrite
        };
        RouteDecision {
            action,
            reason: "critic disabled; actions alternate".into(),
            source: RouteSource::RoundRobin,
        }
    };
    match decision.action {
        RouterAction::IdeaRewrite => evolve_idea(stack, net, llm, critic, decision),
        RouterAction::KeywordReplacement => {
            match evolve_keywords(stack, net, llm, critic, decision.clone()) {
                Err(WorkflowError::NoCandidates) => {
                    let d = forced(&format!(
                        "{} requested but there are no replacement candidates",
                        decision.action
                    ));
                    evolve_idea(stack, net, llm, critic, d)
                }
                other => other,
            }
        }
    }
}
