//! Keyword co-occurrence network.
//!
//! Nodes are keywords; an undirected edge joins two keywords that appear
//! together in at least one paper. Each edge remembers which papers produced
//! it and caches one model-written relation text per paper.
//!
//! Both directions of an edge share a single [`EdgeData`] record, so the
//! adjacency is symmetric by construction.

mod paths;
mod relation;
mod snapshot;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Mutex, MutexGuard};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Keyword, PaperRecord};

pub use paths::{GraphFeatures, NeighborCount, PathEntry};
pub use relation::{RelationSummary, DEFAULT_CAP_PAPERS};
pub use snapshot::{SnapshotError, SNAPSHOT_FORMAT, SNAPSHOT_VERSION};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NetworkError {
    #[error("unknown keyword {0:?}")]
    UnknownKeyword(String),
    #[error("paper {0:?} is already in the network")]
    DuplicatePaper(String),
    #[error("paper {paper_id:?} lists keyword {keyword:?} more than once")]
    DuplicateKeyword { paper_id: String, keyword: String },
    #[error("paper {0:?} has no keywords")]
    NoKeywords(String),
    #[error("no edge between {0:?} and {1:?}")]
    MissingEdge(String, String),
    #[error("neighbor limit must be positive")]
    ZeroLimit,
    #[error("relation analysis for paper {paper_id:?} failed: {message}")]
    Relation { paper_id: String, message: String },
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
}

impl NetworkError {
    fn unknown(k: &Keyword) -> Self {
        NetworkError::UnknownKeyword(k.as_str().to_string())
    }
}

/// Papers behind an edge plus their cached relation texts.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeData {
    pub paper_ids: BTreeSet<String>,
    /// paper id → relation text; keys are always a subset of `paper_ids`.
    pub relation_texts: BTreeMap<String, String>,
}

#[derive(Debug)]
struct Edge {
    /// Node ids, smaller first.
    ends: (usize, usize),
    paper_ids: BTreeSet<String>,
    relations: Mutex<BTreeMap<String, String>>,
}

impl Edge {
    fn relations(&self) -> MutexGuard<'_, BTreeMap<String, String>> {
        self.relations.lock().unwrap_or_else(|e| e.into_inner())
    }

    fn data(&self) -> EdgeData {
        EdgeData {
            paper_ids: self.paper_ids.clone(),
            relation_texts: self.relations().clone(),
        }
    }
}

impl Clone for Edge {
    fn clone(&self) -> Self {
        Self {
            ends: self.ends,
            paper_ids: self.paper_ids.clone(),
            relations: Mutex::new(self.relations().clone()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkStats {
    pub nodes: usize,
    pub edges: usize,
    pub papers: usize,
    pub cached_relations: usize,
    pub components: usize,
    pub isolated_nodes: usize,
    pub max_degree: usize,
}

/// The co-occurrence graph.
///
/// Construction (`add_paper`) needs `&mut self`. Everything else, including
/// filling the relation cache, works through `&self` and may run from many
/// threads; cache writes are serialized per edge.
#[derive(Debug, Clone, Default)]
pub struct SciNetwork {
    nodes: Vec<Keyword>,
    index: HashMap<Keyword, usize>,
    adjacency: Vec<BTreeMap<usize, usize>>,
    edges: Vec<Edge>,
    papers: BTreeMap<String, PaperRecord>,
    paper_keywords: BTreeMap<String, Vec<Keyword>>,
}

impl SciNetwork {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn paper_count(&self) -> usize {
        self.papers.len()
    }

    /// Keywords in insertion order.
    pub fn keywords(&self) -> &[Keyword] {
        &self.nodes
    }

    pub fn contains(&self, k: &Keyword) -> bool {
        self.index.contains_key(k)
    }

    pub fn paper(&self, id: &str) -> Option<&PaperRecord> {
        self.papers.get(id)
    }

    pub fn papers(&self) -> impl Iterator<Item = &PaperRecord> {
        self.papers.values()
    }

    /// Keywords a paper was ingested with.
    pub fn paper_keywords(&self, id: &str) -> Option<&[Keyword]> {
        self.paper_keywords.get(id).map(Vec::as_slice)
    }

    fn id_of(&self, k: &Keyword) -> Result<usize, NetworkError> {
        self.index
            .get(k)
            .copied()
            .ok_or_else(|| NetworkError::unknown(k))
    }

    fn intern(&mut self, k: &Keyword) -> usize {
        if let Some(&id) = self.index.get(k) {
            return id;
        }
        let id = self.nodes.len();
        self.nodes.push(k.clone());
        self.index.insert(k.clone(), id);
        self.adjacency.push(BTreeMap::new());
        id
    }

    fn edge_between(&self, a: usize, b: usize) -> Option<&Edge> {
        self.adjacency[a].get(&b).map(|&e| &self.edges[e])
    }

    fn link(&mut self, a: usize, b: usize) -> usize {
        if let Some(&e) = self.adjacency[a].get(&b) {
            return e;
        }
        let e = self.edges.len();
        self.edges.push(Edge {
            ends: (a.min(b), a.max(b)),
            paper_ids: BTreeSet::new(),
            relations: Mutex::default(),
        });
        self.adjacency[a].insert(b, e);
        self.adjacency[b].insert(a, e);
        e
    }

    /// Adds a paper and connects every pair of its keywords.
    pub fn add_paper(
        &mut self,
        paper: PaperRecord,
        keywords: &[Keyword],
    ) -> Result<(), NetworkError> {
        if self.papers.contains_key(&paper.id) {
            return Err(NetworkError::DuplicatePaper(paper.id));
        }
        if keywords.is_empty() {
            return Err(NetworkError::NoKeywords(paper.id));
        }
        for (i, k) in keywords.iter().enumerate() {
            if keywords[..i].contains(k) {
                return Err(NetworkError::DuplicateKeyword {
                    paper_id: paper.id,
                    keyword: k.as_str().to_string(),
                });
            }
        }
        let ids: Vec<usize> = keywords.iter().map(|k| self.intern(k)).collect();
        for (i, &a) in ids.iter().enumerate() {
            for &b in &ids[i + 1..] {
                let e = self.link(a, b);
                self.edges[e].paper_ids.insert(paper.id.clone());
            }
        }
        self.paper_keywords
            .insert(paper.id.clone(), keywords.to_vec());
        self.papers.insert(paper.id.clone(), paper);
        Ok(())
    }

    /// Snapshot of the edge between `a` and `b`, if any.
    pub fn edge(&self, a: &Keyword, b: &Keyword) -> Result<Option<EdgeData>, NetworkError> {
        let (ia, ib) = (self.id_of(a)?, self.id_of(b)?);
        Ok(self.edge_between(ia, ib).map(Edge::data))
    }

    /// All edges as `(a, b, data)` with endpoints in insertion order of nodes.
    pub fn edges(&self) -> impl Iterator<Item = (&Keyword, &Keyword, EdgeData)> {
        self.edges
            .iter()
            .map(|e| (&self.nodes[e.ends.0], &self.nodes[e.ends.1], e.data()))
    }

    pub fn degree(&self, k: &Keyword) -> Result<usize, NetworkError> {
        Ok(self.adjacency[self.id_of(k)?].len())
    }

    /// Neighbors with their co-occurrence paper counts, most papers first,
    /// ties in ascending keyword order.
    pub fn ranked_neighbors(&self, k: &Keyword) -> Result<Vec<(&Keyword, usize)>, NetworkError> {
        let id = self.id_of(k)?;
        let mut out: Vec<(&Keyword, usize)> = self.adjacency[id]
            .iter()
            .map(|(&n, &e)| (&self.nodes[n], self.edges[e].paper_ids.len()))
            .collect();
        out.sort_by(|x, y| y.1.cmp(&x.1).then_with(|| x.0.cmp(y.0)));
        Ok(out)
    }

    /// Up to `m` neighbors of `k`, ranked as in [`SciNetwork::ranked_neighbors`].
    pub fn neighbors(&self, k: &Keyword, m: usize) -> Result<Vec<Keyword>, NetworkError> {
        if m == 0 {
            return Err(NetworkError::ZeroLimit);
        }
        let mut ranked = self.ranked_neighbors(k)?;
        ranked.truncate(m);
        Ok(ranked.into_iter().map(|(n, _)| n.clone()).collect())
    }

    /// Papers in which both keywords occur; empty when there is no edge.
    pub fn co_papers(&self, a: &Keyword, b: &Keyword) -> Result<BTreeSet<String>, NetworkError> {
        Ok(self.edge(a, b)?.map(|e| e.paper_ids).unwrap_or_default())
    }

    pub fn cached_relation_count(&self) -> usize {
        self.edges.iter().map(|e| e.relations().len()).sum()
    }

    /// Stores a relation text for one paper on an existing edge.
    pub fn set_relation_text(
        &self,
        a: &Keyword,
        b: &Keyword,
        paper_id: &str,
        text: impl Into<String>,
    ) -> Result<(), NetworkError> {
        let (ia, ib) = (self.id_of(a)?, self.id_of(b)?);
        let edge = self
            .edge_between(ia, ib)
            .ok_or_else(|| NetworkError::MissingEdge(a.to_string(), b.to_string()))?;
        if !edge.paper_ids.contains(paper_id) {
            return Err(NetworkError::Relation {
                paper_id: paper_id.to_string(),
                message: format!("paper is not on edge {a} -- {b}"),
            });
        }
        edge.relations().insert(paper_id.to_string(), text.into());
        Ok(())
    }

    pub fn stats(&self) -> NetworkStats {
        NetworkStats {
            nodes: self.nodes.len(),
            edges: self.edges.len(),
            papers: self.papers.len(),
            cached_relations: self.cached_relation_count(),
            components: self.component_count(),
            isolated_nodes: self.adjacency.iter().filter(|a| a.is_empty()).count(),
            max_degree: self.adjacency.iter().map(BTreeMap::len).max().unwrap_or(0),
        }
    }
}

/// Graph equality: same keywords, papers, edges and relation caches,
/// irrespective of insertion order.
impl PartialEq for SciNetwork {
    fn eq(&self, other: &Self) -> bool {
        if self.nodes.len() != other.nodes.len()
            || self.edges.len() != other.edges.len()
            || self.papers != other.papers
            || self.paper_keywords != other.paper_keywords
        {
            return false;
        }
        if !self.nodes.iter().all(|k| other.contains(k)) {
            return false;
        }
        self.edges()
            .all(|(a, b, data)| matches!(other.edge(a, b), Ok(Some(d)) if d == data))
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::corpus::Category;

    pub(crate) fn kw(s: &str) -> Keyword {
        Keyword::new(s).unwrap()
    }

    pub(crate) fn paper(id: &str, year: i32) -> PaperRecord {
        PaperRecord {
            id: id.into(),
            venue: "ICML".into(),
            year,
            category: Category::DeepLearning,
            title: format!("Title {id}"),
            abstract_text: format!("Abstract {id}"),
            introduction: format!("Intro {id}"),
            keywords: None,
        }
    }

    pub(crate) fn build(papers: &[(&str, &[&str])]) -> SciNetwork {
        let mut net = SciNetwork::new();
        for (i, (id, ks)) in papers.iter().enumerate() {
            let ks: Vec<Keyword> = ks.iter().map(|s| kw(s)).collect();
            net.add_paper(paper(id, 2015 + i as i32), &ks).unwrap();
        }
        net
    }

    fn ids(set: BTreeSet<String>) -> Vec<String> {
        set.into_iter().collect()
    }

    #[test]
    fn triangle_from_one_paper() {
        let net = build(&[("p1", &["a", "b", "c"])]);
        assert_eq!(net.edge_count(), 3);
        for (x, y) in [("a", "b"), ("a", "c"), ("b", "c")] {
            assert_eq!(ids(net.co_papers(&kw(x), &kw(y)).unwrap()), ["p1"]);
        }
    }

    #[test]
    fn second_paper_extends_one_edge() {
        let net = build(&[("p1", &["a", "b", "c"]), ("p2", &["b", "c"])]);
        assert_eq!(
            ids(net.co_papers(&kw("c"), &kw("b")).unwrap()),
            ["p1", "p2"]
        );
        assert_eq!(ids(net.co_papers(&kw("a"), &kw("b")).unwrap()), ["p1"]);
        assert_eq!(ids(net.co_papers(&kw("a"), &kw("c")).unwrap()), ["p1"]);
    }

    #[test]
    fn single_keyword_paper_adds_isolated_node() {
        let net = build(&[("p1", &["solo"])]);
        assert_eq!((net.node_count(), net.edge_count()), (1, 0));
        assert!(net.neighbors(&kw("solo"), 5).unwrap().is_empty());
    }

    #[test]
    fn add_paper_errors() {
        let mut net = build(&[("p1", &["a", "b"])]);
        assert!(matches!(
            net.add_paper(paper("p1", 2020), &[kw("c")]),
            Err(NetworkError::DuplicatePaper(_))
        ));
        assert!(matches!(
            net.add_paper(paper("p2", 2020), &[kw("c"), kw("c")]),
            Err(NetworkError::DuplicateKeyword { .. })
        ));
        assert!(matches!(
            net.add_paper(paper("p3", 2020), &[]),
            Err(NetworkError::NoKeywords(_))
        ));
        // failed adds leave no trace
        assert_eq!((net.node_count(), net.paper_count()), (2, 1));
    }

    #[test]
    fn neighbors_ranked_by_count_then_name() {
        // k-x in 3 papers, k-y in 2, k-z in 1
        let net = build(&[
            ("p1", &["k", "x", "y", "z"]),
            ("p2", &["k", "x", "y"]),
            ("p3", &["k", "x"]),
        ]);
        assert_eq!(net.neighbors(&kw("k"), 2).unwrap(), [kw("x"), kw("y")]);
        assert_eq!(
            net.neighbors(&kw("k"), 12).unwrap(),
            [kw("x"), kw("y"), kw("z")]
        );
        assert!(matches!(
            net.neighbors(&kw("k"), 0),
            Err(NetworkError::ZeroLimit)
        ));
        assert!(matches!(
            net.neighbors(&kw("nope"), 1),
            Err(NetworkError::UnknownKeyword(_))
        ));
    }

    #[test]
    fn neighbor_ties_break_lexicographically() {
        let net = build(&[
            ("p1", &["k", "beta", "alpha"]),
            ("p2", &["k", "beta", "alpha"]),
        ]);
        assert_eq!(net.neighbors(&kw("k"), 1).unwrap(), [kw("alpha")]);
    }

    #[test]
    fn co_papers_empty_and_symmetric() {
        let net = build(&[("p1", &["a", "b"]), ("p2", &["b", "c"])]);
        assert!(net.co_papers(&kw("a"), &kw("c")).unwrap().is_empty());
        assert_eq!(
            net.co_papers(&kw("a"), &kw("b")).unwrap(),
            net.co_papers(&kw("b"), &kw("a")).unwrap()
        );
        assert!(net.co_papers(&kw("a"), &kw("zzz")).is_err());
    }

    #[test]
    fn relation_text_must_belong_to_edge() {
        let net = build(&[("p1", &["a", "b"]), ("p2", &["b", "c"])]);
        net.set_relation_text(&kw("b"), &kw("a"), "p1", "t")
            .unwrap();
        assert_eq!(
            net.edge(&kw("a"), &kw("b"))
                .unwrap()
                .unwrap()
                .relation_texts["p1"],
            "t"
        );
        assert!(net
            .set_relation_text(&kw("a"), &kw("b"), "p2", "t")
            .is_err());
        assert!(matches!(
            net.set_relation_text(&kw("a"), &kw("c"), "p1", "t"),
            Err(NetworkError::MissingEdge(..))
        ));
    }

    #[test]
    fn equality_ignores_insertion_order() {
        let a = build(&[("p1", &["a", "b"]), ("p2", &["c", "b"])]);
        let mut b = SciNetwork::new();
        b.add_paper(paper("p2", 2016), &[kw("c"), kw("b")]).unwrap();
        b.add_paper(paper("p1", 2015), &[kw("a"), kw("b")]).unwrap();
        assert_eq!(a, b);
        b.set_relation_text(&kw("a"), &kw("b"), "p1", "x").unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn stats_counts() {
        let net = build(&[
            ("p1", &["a", "b", "c"]),
            ("p2", &["d"]),
            ("p3", &["e", "f"]),
        ]);
        let s = net.stats();
        assert_eq!((s.nodes, s.edges, s.papers), (6, 4, 3));
        assert_eq!((s.components, s.isolated_nodes, s.max_degree), (3, 1, 2));
    }
}
