//! Versioned line-delimited JSON snapshots.
//!
//! Layout: a header line, then one line per paper, node, edge and cached
//! relation text (in that order), then an end marker. The header carries the
//! section sizes so truncated files are detected even at line boundaries.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::SciNetwork;
use crate::corpus::{Keyword, PaperRecord};

pub const SNAPSHOT_FORMAT: &str = "ideagraph-snapshot";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SnapshotError {
    #[error("snapshot version {found} is not supported (expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("corrupt snapshot at line {line}: {message}")]
    Corrupt { line: usize, message: String },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "section", rename_all = "snake_case")]
enum Line {
    Header {
        format: String,
        version: u32,
        papers: usize,
        nodes: usize,
        edges: usize,
        relations: usize,
    },
    Paper {
        record: PaperRecord,
        keywords: Vec<Keyword>,
    },
    Node {
        keyword: Keyword,
    },
    Edge {
        a: Keyword,
        b: Keyword,
        papers: BTreeSet<String>,
    },
    Relation {
        a: Keyword,
        b: Keyword,
        paper_id: String,
        text: String,
    },
    End,
}

fn push(out: &mut String, line: &Line) {
    out.push_str(&serde_json::to_string(line).expect("snapshot lines always serialize"));
    out.push('\n');
}

impl SciNetwork {
    pub fn snapshot_save(&self) -> Vec<u8> {
        let mut out = String::new();
        let relations: Vec<(usize, BTreeMap<String, String>)> = self
            .edges
            .iter()
            .enumerate()
            .map(|(i, e)| (i, e.relations().clone()))
            .collect();
        push(
            &mut out,
            &Line::Header {
                format: SNAPSHOT_FORMAT.into(),
                version: SNAPSHOT_VERSION,
                papers: self.papers.len(),
                nodes: self.nodes.len(),
                edges: self.edges.len(),
                relations: relations.iter().map(|(_, r)| r.len()).sum(),
            },
        );
        for (id, record) in &self.papers {
            push(
                &mut out,
                &Line::Paper {
                    record: record.clone(),
                    keywords: self.paper_keywords[id].clone(),
                },
            );
        }
        for k in &self.nodes {
            push(&mut out, &Line::Node { keyword: k.clone() });
        }
        for e in &self.edges {
            push(
                &mut out,
                &Line::Edge {
                    a: self.nodes[e.ends.0].clone(),
                    b: self.nodes[e.ends.1].clone(),
                    papers: e.paper_ids.clone(),
                },
            );
        }
        for (i, texts) in relations {
            let (a, b) = self.edges[i].ends;
            for (paper_id, text) in texts {
                push(
                    &mut out,
                    &Line::Relation {
                        a: self.nodes[a].clone(),
                        b: self.nodes[b].clone(),
                        paper_id,
                        text,
                    },
                );
            }
        }
        push(&mut out, &Line::End);
        out.into_bytes()
    }

    pub fn snapshot_load(bytes: &[u8]) -> Result<SciNetwork, SnapshotError> {
        let text = std::str::from_utf8(bytes).map_err(|e| SnapshotError::Corrupt {
            line: 0,
            message: format!("not UTF-8: {e}"),
        })?;
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let corrupt = |line: usize, message: String| SnapshotError::Corrupt { line, message };
        let parse = |line: usize, raw: &str| -> Result<Line, SnapshotError> {
            serde_json::from_str(raw).map_err(|e| corrupt(line, e.to_string()))
        };

        let (n, raw) = lines
            .next()
            .ok_or_else(|| corrupt(1, "empty snapshot".into()))?;
        let Line::Header {
            format,
            version,
            papers,
            nodes,
            edges,
            relations,
        } = parse(n, raw)?
        else {
            return Err(corrupt(n, "missing header".into()));
        };
        if format != SNAPSHOT_FORMAT {
            return Err(corrupt(n, format!("unexpected format {format:?}")));
        }
        if version != SNAPSHOT_VERSION {
            return Err(SnapshotError::VersionMismatch {
                found: version,
                expected: SNAPSHOT_VERSION,
            });
        }

        let mut net = SciNetwork::new();
        let mut counts = [0usize; 4];
        let mut ended = false;
        for (n, raw) in lines.by_ref() {
            match parse(n, raw)? {
                Line::Header { .. } => return Err(corrupt(n, "second header".into())),
                Line::Paper { record, keywords } => {
                    if net.papers.contains_key(&record.id) {
                        return Err(corrupt(n, format!("duplicate paper {:?}", record.id)));
                    }
                    net.paper_keywords.insert(record.id.clone(), keywords);
                    net.papers.insert(record.id.clone(), record);
                    counts[0] += 1;
                }
                Line::Node { keyword } => {
                    if net.contains(&keyword) {
                        return Err(corrupt(n, format!("duplicate node {keyword:?}")));
                    }
                    net.intern(&keyword);
                    counts[1] += 1;
                }
                Line::Edge { a, b, papers } => {
                    let (Some(&ia), Some(&ib)) = (net.index.get(&a), net.index.get(&b)) else {
                        return Err(corrupt(
                            n,
                            format!("edge {a} -- {b} references unknown node"),
                        ));
                    };
                    if ia == ib || net.adjacency[ia].contains_key(&ib) {
                        return Err(corrupt(n, format!("invalid or repeated edge {a} -- {b}")));
                    }
                    if papers.is_empty() {
                        return Err(corrupt(n, format!("edge {a} -- {b} has no papers")));
                    }
                    if let Some(p) = papers.iter().find(|p| !net.papers.contains_key(*p)) {
                        return Err(corrupt(n, format!("edge references unknown paper {p:?}")));
                    }
                    let e = net.link(ia, ib);
                    net.edges[e].paper_ids = papers;
                    counts[2] += 1;
                }
                Line::Relation {
                    a,
                    b,
                    paper_id,
                    text,
                } => {
                    net.set_relation_text(&a, &b, &paper_id, text)
                        .map_err(|e| corrupt(n, e.to_string()))?;
                    counts[3] += 1;
                }
                Line::End => {
                    ended = true;
                    break;
                }
            }
        }
        if !ended {
            return Err(corrupt(
                text.lines().count(),
                "missing end marker (truncated?)".into(),
            ));
        }
        if let Some((n, _)) = lines.find(|(_, l)| !l.trim().is_empty()) {
            return Err(corrupt(n, "data after end marker".into()));
        }
        if counts != [papers, nodes, edges, relations] {
            return Err(corrupt(
                0,
                format!(
                    "section sizes {counts:?} do not match header {:?}",
                    [papers, nodes, edges, relations]
                ),
            ));
        }
        Ok(net)
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::{build, kw};
    use super::*;

    #[test]
    fn empty_round_trip() {
        let net = SciNetwork::new();
        let back = SciNetwork::snapshot_load(&net.snapshot_save()).unwrap();
        assert_eq!(back, net);
        assert_eq!(back.node_count(), 0);
    }

    #[test]
    fn round_trip_keeps_relations() {
        let net = build(&[
            ("p1", &["a", "b", "c"]),
            ("p2", &["c", "d"]),
            ("p3", &["e"]),
        ]);
        net.set_relation_text(&kw("a"), &kw("c"), "p1", "A feeds C\nacross lines")
            .unwrap();
        let back = SciNetwork::snapshot_load(&net.snapshot_save()).unwrap();
        assert_eq!(back, net);
        assert_eq!(back.keywords(), net.keywords());
        assert_eq!(back.snapshot_save(), net.snapshot_save());
    }

    #[test]
    fn truncation_is_detected() {
        let net = build(&[("p1", &["a", "b", "c"]), ("p2", &["c", "d"])]);
        let bytes = net.snapshot_save();
        let text = String::from_utf8(bytes.clone()).unwrap();
        // every proper prefix must be rejected, whether cut mid-line or not
        for cut in (0..bytes.len())
            .step_by(7)
            .chain([text.rfind("{\"section\":\"end\"").unwrap()])
        {
            let r = SciNetwork::snapshot_load(&bytes[..cut]);
            assert!(
                matches!(r, Err(SnapshotError::Corrupt { .. })),
                "cut at {cut}"
            );
        }
    }

    #[test]
    fn version_mismatch() {
        let text = String::from_utf8(SciNetwork::new().snapshot_save()).unwrap();
        let bumped = text.replace("\"version\":1", "\"version\":99");
        assert_eq!(
            SciNetwork::snapshot_load(bumped.as_bytes()).unwrap_err(),
            SnapshotError::VersionMismatch {
                found: 99,
                expected: SNAPSHOT_VERSION
            }
        );
    }

    #[test]
    fn garbage_is_corrupt() {
        assert!(matches!(
            SciNetwork::snapshot_load(b"\xff\xfe"),
            Err(SnapshotError::Corrupt { .. })
        ));
        assert!(matches!(
            SciNetwork::snapshot_load(b"{\"section\":\"end\"}\n"),
            Err(SnapshotError::Corrupt { .. })
        ));
    }
}
