//! The idea stack: an append-only record of every round.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{WorkflowConfig, WorkflowError};
use crate::corpus::Keyword;
use crate::critic::{join_keywords, Review};
use crate::llm::RouterAction;
use crate::proposal::IdeaProposal;

pub const RUN_FORMAT: &str = "ideagraph-run";
pub const RUN_VERSION: u32 = 1;

/// Shown in place of the history before the first round exists.
pub const EMPTY_STACK_SENTINEL: &str =
    "No prior rounds: this is the first round of the research process.";

/// How a round's keyword set differs from the previous one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum KeywordChange {
    Seed,
    Added {
        keyword: Keyword,
        connected_to: Keyword,
        reason: String,
    },
    Replaced {
        new: Keyword,
        old: Keyword,
        connected_to: Keyword,
        reason: String,
    },
    Rewrite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RouteSource {
    /// The router prompt answered.
    Router,
    /// The router could not be used or its reply never parsed.
    Defaulted,
    /// Critic disabled: actions alternate.
    RoundRobin,
    /// Only one action was possible (no flexible keywords or no candidates).
    Forced,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteDecision {
    pub action: RouterAction,
    pub reason: String,
    pub source: RouteSource,
}

impl RouteDecision {
    pub fn defaulted(&self) -> bool {
        self.source == RouteSource::Defaulted
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round_no: u32,
    pub keywords: Vec<Keyword>,
    pub change: KeywordChange,
    pub idea: IdeaProposal,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub review: Option<Review>,
    /// Set when the critic ran but its reply never parsed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub review_error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub route: Option<RouteDecision>,
}

impl RoundRecord {
    fn describe_change(&self) -> String {
        match &self.change {
            KeywordChange::Seed => "initial seed keywords".to_string(),
            KeywordChange::Added {
                keyword,
                connected_to,
                reason,
            } => format!("added \"{keyword}\" (connected to \"{connected_to}\"); reason: {reason}"),
            KeywordChange::Replaced {
                new,
                old,
                connected_to,
                reason,
            } => format!(
                "replaced \"{old}\" with \"{new}\" (connected to \"{connected_to}\"); reason: {reason}"
            ),
            KeywordChange::Rewrite => "none; the idea proposal was rewritten".to_string(),
        }
    }

    /// Text block used for this round inside prompts.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "=== Round {} ===", self.round_no);
        let _ = writeln!(s, "Keywords: {}", join_keywords(&self.keywords));
        let _ = writeln!(s, "Keyword change: {}", self.describe_change());
        if let Some(route) = &self.route {
            let _ = writeln!(s, "Next-step decision: {} ({})", route.action, route.reason);
        }
        let _ = writeln!(s, "Research idea:\n{}", self.idea.render());
        match &self.review {
            Some(r) => {
                let _ = writeln!(s, "Novelty score and description: {}", r.novelty_line());
                let _ = write!(
                    s,
                    "Feasibility score and description: {}",
                    r.feasibility_line()
                );
            }
            None => s.push_str("Novelty and feasibility: not reviewed"),
        }
        s
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    config: WorkflowConfig,
    seeds: Vec<Keyword>,
}

/// Append-only history of a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdeaStack {
    config: WorkflowConfig,
    seeds: Vec<Keyword>,
    rounds: Vec<RoundRecord>,
}

impl IdeaStack {
    pub fn new(config: WorkflowConfig, seeds: Vec<Keyword>) -> Self {
        Self {
            config,
            seeds,
            rounds: Vec::new(),
        }
    }

    pub fn config(&self) -> &WorkflowConfig {
        &self.config
    }

    pub fn seeds(&self) -> &[Keyword] {
        &self.seeds
    }

    pub fn rounds(&self) -> &[RoundRecord] {
        &self.rounds
    }

    pub fn len(&self) -> usize {
        self.rounds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rounds.is_empty()
    }

    pub fn latest(&self) -> Option<&RoundRecord> {
        self.rounds.last()
    }

    /// Current keyword set: the latest round's, or the seeds before round 1.
    pub fn current_keywords(&self) -> &[Keyword] {
        self.latest().map_or(&self.seeds, |r| &r.keywords)
    }

    /// Keywords that may be replaced: everything that is not a seed.
    pub fn flexible_keywords(&self) -> Vec<Keyword> {
        self.current_keywords()
            .iter()
            .filter(|k| !self.seeds.contains(k))
            .cloned()
            .collect()
    }

    pub fn next_round_no(&self) -> u32 {
        self.rounds.len() as u32 + 1
    }

    /// Appends a round after checking numbering and keyword-set size.
    pub fn push(&mut self, round: RoundRecord) -> Result<(), WorkflowError> {
        if round.round_no != self.next_round_no() {
            return Err(WorkflowError::Precondition(format!(
                "round {} appended where round {} was expected",
                round.round_no,
                self.next_round_no()
            )));
        }
        if round.keywords.is_empty() || round.keywords.len() > self.config.l_max {
            return Err(WorkflowError::Precondition(format!(
                "round {} has {} keywords (limit {})",
                round.round_no,
                round.keywords.len(),
                self.config.l_max
            )));
        }
        self.rounds.push(round);
        Ok(())
    }

    /// History text bound to the `{idea_stack}` / `{status_bar}` placeholders.
    pub fn render_for_prompt(&self) -> String {
        if self.rounds.is_empty() {
            return EMPTY_STACK_SENTINEL.to_string();
        }
        self.rounds
            .iter()
            .map(RoundRecord::render)
            .collect::<Vec<_>>()
            .join("\n\n")
    }

    /// Line-delimited JSON: a header with config and seeds, then one line per
    /// round. Appending a round only appends a line.
    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&Header {
            format: RUN_FORMAT.into(),
            version: RUN_VERSION,
            config: self.config.clone(),
            seeds: self.seeds.clone(),
        })
        .expect("stack header serializes");
        out.push('\n');
        for r in &self.rounds {
            out.push_str(&serde_json::to_string(r).expect("rounds serialize"));
            out.push('\n');
        }
        out
    }

    /// Best reviewed round: highest average, later round on ties.
    pub fn best_round(&self) -> Option<&RoundRecord> {
        self.rounds
            .iter()
            .filter_map(|r| r.review.as_ref().map(|rev| (rev.score_sum(), r)))
            .max_by_key(|(sum, r)| (*sum, r.round_no))
            .map(|(_, r)| r)
    }
}

pub(super) fn parse_header(line: &str) -> Result<(WorkflowConfig, Vec<Keyword>), String> {
    let h: Header = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if h.format != RUN_FORMAT {
        return Err(format!("unexpected format {:?}", h.format));
    }
    if h.version != RUN_VERSION {
        return Err(format!("unsupported run record version {}", h.version));
    }
    Ok((h.config, h.seeds))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kw(s: &str) -> Keyword {
        Keyword::new(s).unwrap()
    }

    fn idea(tag: &str) -> IdeaProposal {
        IdeaProposal {
            background: format!("bg {tag}"),
            idea: format!("idea {tag}"),
            implementation: format!("impl {tag}"),
            cited_paper_ids: vec![],
        }
    }

    fn review(n: u8, f: u8) -> Review {
        Review {
            novelty: n,
            novelty_desc: "n".into(),
            feasibility: f,
            feasibility_desc: "f".into(),
        }
    }

    fn round(no: u32, keywords: &[&str], review_scores: Option<(u8, u8)>) -> RoundRecord {
        RoundRecord {
            round_no: no,
            keywords: keywords.iter().map(|k| kw(k)).collect(),
            change: if no == 1 {
                KeywordChange::Seed
            } else {
                KeywordChange::Rewrite
            },
            idea: idea(&no.to_string()),
            review: review_scores.map(|(n, f)| review(n, f)),
            review_error: None,
            route: None,
        }
    }

    #[test]
    fn sentinel_when_empty() {
        let s = IdeaStack::new(WorkflowConfig::default(), vec![kw("a")]);
        assert_eq!(s.render_for_prompt(), EMPTY_STACK_SENTINEL);
        assert_eq!(s.current_keywords(), [kw("a")]);
    }

    #[test]
    fn push_checks_numbering_and_size() {
        let cfg = WorkflowConfig {
            l_max: 2,
            ..Default::default()
        };
        let mut s = IdeaStack::new(cfg, vec![kw("a")]);
        assert!(s.push(round(2, &["a"], None)).is_err());
        s.push(round(1, &["a"], None)).unwrap();
        assert!(s.push(round(2, &["a", "b", "c"], None)).is_err());
        s.push(round(2, &["a", "b"], None)).unwrap();
        assert_eq!(s.flexible_keywords(), [kw("b")]);
    }

    #[test]
    fn jsonl_is_prefix_preserving() {
        let mut s = IdeaStack::new(WorkflowConfig::default(), vec![kw("a")]);
        let mut prev = s.to_jsonl();
        let mut prev_prompt = String::new();
        for no in 1..=3 {
            s.push(round(no, &["a"], Some((3, 3)))).unwrap();
            let next = s.to_jsonl();
            assert!(next.starts_with(&prev));
            let prompt = s.render_for_prompt();
            assert!(prompt.starts_with(&prev_prompt));
            prev = next;
            prev_prompt = prompt;
        }
    }

    #[test]
    fn best_round_prefers_later_on_ties() {
        let mut s = IdeaStack::new(WorkflowConfig::default(), vec![kw("a")]);
        s.push(round(1, &["a"], Some((3, 4)))).unwrap();
        s.push(round(2, &["a"], Some((5, 2)))).unwrap();
        s.push(round(3, &["a"], None)).unwrap();
        s.push(round(4, &["a"], Some((2, 3)))).unwrap();
        assert_eq!(s.best_round().unwrap().round_no, 2);
    }

    #[test]
    fn round_render_layout() {
        let mut r = round(2, &["a", "b"], Some((4, 3)));
        r.change = KeywordChange::Added {
            keyword: kw("b"),
            connected_to: kw("a"),
            reason: "why".into(),
        };
        assert_eq!(
            r.render(),
            "=== Round 2 ===\nKeywords: a, b\nKeyword change: added \"b\" (connected to \"a\"); reason: why\nResearch idea:\nResearch Background: bg 2\n\nResearch Idea: idea 2\n\nImplementation Approach: impl 2\nNovelty score and description: 4 - n\nFeasibility score and description: 3 - f"
        );
    }
}
