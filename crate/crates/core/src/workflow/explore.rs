use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{WorkflowConfig, WorkflowError};
use crate::corpus::Keyword;
use crate::llm::Gateway;
use crate::network::{RelationSummary, SciNetwork};

/// A neighbor of the current keyword set offered to the model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateKeyword {
    pub keyword: Keyword,
    /// Member of the current set this candidate neighbors.
    pub connected_to: Keyword,
    pub relation: RelationSummary,
    /// Shortest-path length to every other current member (`None` = not connected).
    pub paths: Vec<(Keyword, Option<usize>)>,
}

/// Gathers up to `cfg.m` outside neighbors per current keyword.
///
/// A keyword reachable from several members is kept once, under the member
/// where it ranks highest (earlier member on ties). Output is ordered by
/// member, then by rank.
pub fn explore(
    net: &SciNetwork,
    current: &[Keyword],
    cfg: &WorkflowConfig,
    llm: &Gateway,
) -> Result<Vec<CandidateKeyword>, WorkflowError> {
    if current.is_empty() {
        return Err(WorkflowError::Precondition(
            "explore needs a nonempty keyword set".into(),
        ));
    }
    // candidate -> (rank, source index)
    let mut best: BTreeMap<&Keyword, (usize, usize)> = BTreeMap::new();
    let ranked: Vec<Vec<(&Keyword, usize)>> = current
        .iter()
        .map(|k| net.ranked_neighbors(k))
        .collect::<Result<_, _>>()?;
    for (src, neighbors) in ranked.iter().enumerate() {
        let outside = neighbors
            .iter()
            .filter(|(n, _)| !current.contains(n))
            .take(cfg.m);
        for (rank, (n, _)) in outside.enumerate() {
            best.entry(n)
                .and_modify(|e| {
                    if rank < e.0 {
                        *e = (rank, src);
                    }
                })
                .or_insert((rank, src));
        }
    }
    let mut ordered: Vec<(usize, usize, &Keyword)> = best
        .into_iter()
        .map(|(k, (rank, src))| (src, rank, k))
        .collect();
    ordered.sort();

    ordered
        .into_iter()
        .map(|(src, _, k)| {
            let anchor = &current[src];
            let relation = net.summarize_relation(anchor, k, llm, cfg.cap_papers)?;
            let paths = current
                .iter()
                .filter(|other| *other != anchor)
                .map(|other| Ok((other.clone(), net.shortest_path_len(k, other)?)))
                .collect::<Result<_, WorkflowError>>()?;
            Ok(CandidateKeyword {
                keyword: k.clone(),
                connected_to: anchor.clone(),
                relation,
                paths,
            })
        })
        .collect()
}

/// Text bound to `{candidate_keywords_and_relationships}`.
pub fn render_candidates(candidates: &[CandidateKeyword]) -> String {
    let mut s = String::new();
    for (i, c) in candidates.iter().enumerate() {
        if i > 0 {
            s.push('\n');
        }
        let _ = writeln!(s, "{}. Candidate keyword: {}", i + 1, c.keyword);
        let _ = writeln!(s, "   Connected to: {}", c.connected_to);
        let _ = writeln!(
            s,
            "   Relationship between \"{}\" and \"{}\":",
            c.connected_to, c.keyword
        );
        for line in c.relation.text.lines() {
            let _ = writeln!(s, "   {line}");
        }
        s.push_str("   Shortest paths to other current keywords: ");
        if c.paths.is_empty() {
            s.push_str("none (no other keywords in the current set)");
        } else {
            let parts: Vec<String> = c
                .paths
                .iter()
                .map(|(k, len)| match len {
                    Some(n) => format!("{k}: {n}"),
                    None => format!("{k}: not connected"),
                })
                .collect();
            s.push_str(&parts.join("; "));
        }
        s.push('\n');
    }
    s.trim_end().to_string()
}
