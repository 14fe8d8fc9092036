//! Run records on disk and their markdown rendering.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::stack::{parse_header, IdeaStack, KeywordChange, RoundRecord};
use super::{RunOutcome, StopReason};
use crate::critic::join_keywords;
use crate::proposal::Section;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RunRecordError {
    #[error("run record is empty")]
    Empty,
    #[error("line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("run record has no outcome line")]
    MissingOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct OutcomeLine {
    outcome: OutcomeSummary,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeSummary {
    pub stop: StopReason,
    pub best_round: Option<u32>,
    pub rounds: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// A finished run as stored on disk: the stack lines then one outcome line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunRecord {
    pub stack: IdeaStack,
    pub outcome: OutcomeSummary,
}

impl RunRecord {
    pub fn from_outcome(o: &RunOutcome) -> Self {
        Self {
            stack: o.stack.clone(),
            outcome: OutcomeSummary {
                stop: o.stop,
                best_round: o.best_round,
                rounds: o.stack.len(),
                error: o.error.clone(),
            },
        }
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = self.stack.to_jsonl();
        let line = OutcomeLine {
            outcome: self.outcome.clone(),
        };
        out.push_str(&serde_json::to_string(&line).expect("outcome serializes"));
        out.push('\n');
        out
    }

    pub fn parse(text: &str) -> Result<Self, RunRecordError> {
        let lines: Vec<(usize, &str)> = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l))
            .filter(|(_, l)| !l.trim().is_empty())
            .collect();
        let Some(((hline, header), rest)) = lines.split_first() else {
            return Err(RunRecordError::Empty);
        };
        let (config, seeds) = parse_header(header).map_err(|message| RunRecordError::Line {
            line: *hline,
            message,
        })?;
        let Some(((oline, outcome), rounds)) = rest.split_last() else {
            return Err(RunRecordError::MissingOutcome);
        };
        let outcome: OutcomeLine =
            serde_json::from_str(outcome).map_err(|_| RunRecordError::MissingOutcome)?;
        let mut stack = IdeaStack::new(config, seeds);
        for (line, text) in rounds {
            let round: RoundRecord =
                serde_json::from_str(text).map_err(|e| RunRecordError::Line {
                    line: *line,
                    message: e.to_string(),
                })?;
            stack.push(round).map_err(|e| RunRecordError::Line {
                line: *line,
                message: e.to_string(),
            })?;
        }
        if outcome.outcome.rounds != stack.len() {
            return Err(RunRecordError::Line {
                line: *oline,
                message: format!(
                    "outcome counts {} rounds but the record holds {}",
                    outcome.outcome.rounds,
                    stack.len()
                ),
            });
        }
        Ok(Self {
            stack,
            outcome: outcome.outcome,
        })
    }
}

fn stop_text(stop: StopReason) -> &'static str {
    match stop {
        StopReason::ThresholdReached => "both review scores reached the threshold",
        StopReason::MaxRounds => "evolve round budget spent",
        StopReason::EvolveDisabled => "keyword set full and evolution disabled",
        StopReason::CandidatesExhausted => "no further candidate keywords",
        StopReason::Aborted => "aborted",
    }
}

fn change_text(r: &RoundRecord) -> String {
    match &r.change {
        KeywordChange::Seed => "seed keywords".into(),
        KeywordChange::Added {
            keyword,
            connected_to,
            reason,
        } => format!("added `{keyword}` (via `{connected_to}`): {reason}"),
        KeywordChange::Replaced {
            new,
            old,
            connected_to,
            reason,
        } => format!("replaced `{old}` with `{new}` (via `{connected_to}`): {reason}"),
        KeywordChange::Rewrite => "idea rewritten".into(),
    }
}

/// Human-readable report of a run.
pub fn render_markdown(record: &RunRecord) -> String {
    let stack = &record.stack;
    let cfg = stack.config();
    let mut s = String::new();
    let _ = writeln!(s, "# Ideation run\n");
    let _ = writeln!(s, "- Seeds: {}", join_keywords(stack.seeds()));
    let _ = writeln!(
        s,
        "- Config: m = {}, l_max = {}, max evolve rounds = {}, stop threshold = {}, evolve {}, critic {}",
        cfg.m,
        cfg.l_max,
        cfg.max_evolve_rounds,
        cfg.stop_threshold,
        if cfg.evolve_enabled { "on" } else { "off" },
        if cfg.critic_enabled { "on" } else { "off" },
    );
    let _ = writeln!(s, "- Rounds: {}", record.outcome.rounds);
    let _ = writeln!(s, "- Stopped: {}", stop_text(record.outcome.stop));
    if let Some(e) = &record.outcome.error {
        let _ = writeln!(s, "- Error: {e}");
    }
    match record.outcome.best_round {
        Some(b) => {
            let _ = writeln!(s, "- Best round: {b}");
        }
        None => {
            let _ = writeln!(s, "- Best round: none (no reviewed rounds)");
        }
    }

    let _ = writeln!(s, "\n## Keyword changes\n");
    let _ = writeln!(s, "| Round | Keywords | Change | Novelty | Feasibility |");
    let _ = writeln!(s, "|---|---|---|---|---|");
    for r in stack.rounds() {
        let (n, f) = r
            .review
            .as_ref()
            .map_or(("-".to_string(), "-".to_string()), |v| {
                (v.novelty.to_string(), v.feasibility.to_string())
            });
        let _ = writeln!(
            s,
            "| {} | {} | {} | {} | {} |",
            r.round_no,
            join_keywords(&r.keywords),
            change_text(r).replace('|', "\\|").replace('\n', " "),
            n,
            f
        );
    }

    for r in stack.rounds() {
        let _ = writeln!(s, "\n## Round {}\n", r.round_no);
        let _ = writeln!(s, "Keywords: {}\n", join_keywords(&r.keywords));
        if let Some(route) = &r.route {
            let _ = writeln!(s, "Action: {} ({})\n", route.action, route.reason);
        }
        for sec in Section::ALL {
            let _ = writeln!(
                s,
                "### {}\n\n{}\n",
                sec.heading(),
                r.idea.section(sec).trim()
            );
        }
        if !r.idea.cited_paper_ids.is_empty() {
            let _ = writeln!(
                s,
                "Papers drawn on: {}\n",
                r.idea.cited_paper_ids.join(", ")
            );
        }
        match (&r.review, &r.review_error) {
            (Some(v), _) => {
                let _ = writeln!(s, "- Novelty: {}", v.novelty_line());
                let _ = writeln!(s, "- Feasibility: {}", v.feasibility_line());
            }
            (None, Some(e)) => {
                let _ = writeln!(s, "- Review failed: {e}");
            }
            (None, None) => {
                let _ = writeln!(s, "- Not reviewed");
            }
        }
    }
    s
}
