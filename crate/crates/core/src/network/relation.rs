use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{NetworkError, SciNetwork};
use crate::corpus::Keyword;
use crate::llm::{AskError, Gateway, TemplateId};

/// Papers per edge that get summarized (most recent first).
pub const DEFAULT_CAP_PAPERS: usize = 3;

/// Aggregated relation between two keywords.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RelationSummary {
    /// Papers whose texts make up `text`, in the order they appear.
    pub paper_ids: Vec<String>,
    /// One `[paper-id] text` line per paper.
    pub text: String,
}

#[derive(Debug, Error)]
#[error("empty reply")]
struct EmptyReply;

impl SciNetwork {
    /// Returns the relation text for edge `(a, b)`, asking the model for any
    /// of the `cap_papers` most recent papers not yet cached.
    ///
    /// Calls for the same edge are serialized; calls for different edges may
    /// run in parallel.
    pub fn summarize_relation(
        &self,
        a: &Keyword,
        b: &Keyword,
        llm: &Gateway,
        cap_papers: usize,
    ) -> Result<RelationSummary, NetworkError> {
        let (ia, ib) = (self.id_of(a)?, self.id_of(b)?);
        let edge = self
            .edge_between(ia, ib)
            .ok_or_else(|| NetworkError::MissingEdge(a.to_string(), b.to_string()))?;

        let mut chosen: Vec<(&str, i32)> = edge
            .paper_ids
            .iter()
            .map(|id| {
                (
                    id.as_str(),
                    self.papers.get(id).map_or(i32::MIN, |p| p.year),
                )
            })
            .collect();
        chosen.sort_by(|x, y| y.1.cmp(&x.1).then_with(|| x.0.cmp(y.0)));
        chosen.truncate(cap_papers.max(1));

        let mut cache = edge.relations();
        for &(paper_id, _) in &chosen {
            if cache.contains_key(paper_id) {
                continue;
            }
            let paper = self
                .papers
                .get(paper_id)
                .ok_or_else(|| NetworkError::Relation {
                    paper_id: paper_id.to_string(),
                    message: "paper record missing from network".into(),
                })?;
            let bindings = [
                ("keyword1", a.as_str()),
                ("keyword2", b.as_str()),
                ("title", paper.title.as_str()),
                ("abstract", paper.abstract_text.as_str()),
                ("introduction", paper.introduction.as_str()),
            ];
            let text = llm
                .ask_parsed(TemplateId::RelationAnalysis, &bindings, |reply| {
                    let t = reply.trim();
                    if t.is_empty() {
                        Err(EmptyReply)
                    } else {
                        Ok(t.to_string())
                    }
                })
                .map_err(|e| NetworkError::Relation {
                    paper_id: paper_id.to_string(),
                    message: match e {
                        AskError::Llm(e) => e.to_string(),
                        e @ AskError::Rejected { .. } => e.to_string(),
                    },
                })?;
            cache.insert(paper_id.to_string(), text);
        }

        let lines: Vec<String> = chosen
            .iter()
            .map(|(id, _)| format!("[{id}] {}", cache[*id]))
            .collect();
        Ok(RelationSummary {
            paper_ids: chosen.iter().map(|(id, _)| id.to_string()).collect(),
            text: lines.join("\n"),
        })
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::super::tests::{build, kw};
    use super::*;
    use crate::llm::{Script, ScriptedProvider};

    fn gateway(replies: &[&str]) -> (Arc<ScriptedProvider>, Gateway) {
        let mut s = Script::default();
        for r in replies {
            s.push(TemplateId::RelationAnalysis, *r);
        }
        let p = Arc::new(ScriptedProvider::new(s));
        (p.clone(), Gateway::new(p))
    }

    #[test]
    fn fills_cache_once() {
        let net = build(&[("p1", &["a", "b"])]);
        let (p, g) = gateway(&["A enables B."]);
        let first = net.summarize_relation(&kw("a"), &kw("b"), &g, 3).unwrap();
        assert_eq!(first.text, "[p1] A enables B.");
        assert_eq!(first.paper_ids, ["p1"]);
        assert_eq!(p.calls(TemplateId::RelationAnalysis), 1);
        let prompt = &p.requests()[0].messages[0].content;
        assert!(prompt.contains("- Keyword 1: a\n\n- Keyword 2: b"));
        assert!(prompt.contains("Title: Title p1"));

        let again = net.summarize_relation(&kw("b"), &kw("a"), &g, 3).unwrap();
        assert_eq!(again, first);
        assert_eq!(p.total_calls(), 1);
    }

    #[test]
    fn caps_to_most_recent() {
        // build() assigns years 2015.. in order, so p5 is the newest
        let net = build(&[
            ("p1", &["a", "b"]),
            ("p2", &["a", "b"]),
            ("p3", &["a", "b"]),
            ("p4", &["a", "b"]),
            ("p5", &["a", "b"]),
        ]);
        let (p, g) = gateway(&["t5", "t4", "t3"]);
        let s = net.summarize_relation(&kw("a"), &kw("b"), &g, 3).unwrap();
        assert_eq!(p.total_calls(), 3);
        assert_eq!(s.paper_ids, ["p5", "p4", "p3"]);
        assert_eq!(s.text, "[p5] t5\n[p4] t4\n[p3] t3");
        let cached = net
            .edge(&kw("a"), &kw("b"))
            .unwrap()
            .unwrap()
            .relation_texts;
        assert_eq!(cached.len(), 3);
    }

    #[test]
    fn missing_edge_and_failures() {
        let net = build(&[("p1", &["a", "b"]), ("p2", &["c", "b"])]);
        let (_, g) = gateway(&[]);
        assert!(matches!(
            net.summarize_relation(&kw("a"), &kw("c"), &g, 3),
            Err(NetworkError::MissingEdge(..))
        ));
        match net.summarize_relation(&kw("a"), &kw("b"), &g, 3) {
            Err(NetworkError::Relation { paper_id, .. }) => assert_eq!(paper_id, "p1"),
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(net.cached_relation_count(), 0);
    }

    #[test]
    fn concurrent_edges() {
        let net = build(&[("p1", &["a", "b", "c", "d"])]);
        let mut s = Script::default();
        s.set_default(TemplateId::RelationAnalysis, "linked");
        let g = Gateway::new(Arc::new(ScriptedProvider::new(s)));
        let pairs = [
            ("a", "b"),
            ("a", "c"),
            ("a", "d"),
            ("b", "c"),
            ("b", "d"),
            ("c", "d"),
        ];
        std::thread::scope(|scope| {
            for (x, y) in pairs {
                let (net, g) = (&net, &g);
                scope.spawn(move || net.summarize_relation(&kw(x), &kw(y), g, 3).unwrap());
            }
        });
        assert_eq!(net.cached_relation_count(), 6);
    }
}
