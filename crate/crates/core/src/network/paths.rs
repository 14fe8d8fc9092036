use std::collections::VecDeque;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{NetworkError, SciNetwork};
use crate::corpus::Keyword;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NeighborCount {
    pub keyword: Keyword,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathEntry {
    pub a: Keyword,
    pub b: Keyword,
    /// Hop count; `None` when the two keywords are in different components.
    pub length: Option<usize>,
}

/// Structural context for a keyword set, as shown to the critic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphFeatures {
    /// Full degree of every keyword, in query order.
    pub neighbor_counts: Vec<NeighborCount>,
    /// True when every pair of query keywords is mutually reachable.
    pub connected: bool,
    /// One entry per unordered pair, `(i, j)` with `i < j` in query order.
    pub pairwise_paths: Vec<PathEntry>,
}

impl GraphFeatures {
    pub fn path(&self, a: &Keyword, b: &Keyword) -> Option<Option<usize>> {
        if a == b {
            return Some(Some(0));
        }
        self.pairwise_paths
            .iter()
            .find(|p| (&p.a == a && &p.b == b) || (&p.a == b && &p.b == a))
            .map(|p| p.length)
    }

    /// Fixed text layout used inside review prompts and critic training data.
    ///
    /// ```text
    /// Neighbor count:
    /// - <keyword>: <n>
    /// Connectivity: connected | not connected
    /// Shortest paths:
    /// - <a> <-> <b>: <n> | not connected
    /// ```
    ///
    /// With a single keyword the path block reads `- none (single keyword)`.
    pub fn render(&self) -> String {
        let mut s = String::from("Neighbor count:\n");
        for n in &self.neighbor_counts {
            let _ = writeln!(s, "- {}: {}", n.keyword, n.count);
        }
        let _ = writeln!(
            s,
            "Connectivity: {}",
            if self.connected {
                "connected"
            } else {
                "not connected"
            }
        );
        s.push_str("Shortest paths:");
        if self.pairwise_paths.is_empty() {
            s.push_str("\n- none (single keyword)");
        }
        for p in &self.pairwise_paths {
            let _ = write!(s, "\n- {} <-> {}: ", p.a, p.b);
            match p.length {
                Some(n) => {
                    let _ = write!(s, "{n}");
                }
                None => s.push_str("not connected"),
            }
        }
        s
    }
}

impl SciNetwork {
    /// Unweighted shortest-path length; `Some(0)` for `a == b`, `None` when
    /// disconnected.
    pub fn shortest_path_len(
        &self,
        a: &Keyword,
        b: &Keyword,
    ) -> Result<Option<usize>, NetworkError> {
        let (src, dst) = (self.id_of(a)?, self.id_of(b)?);
        if src == dst {
            return Ok(Some(0));
        }
        let mut dist = vec![usize::MAX; self.nodes.len()];
        let mut queue = VecDeque::from([src]);
        dist[src] = 0;
        while let Some(u) = queue.pop_front() {
            for &v in self.adjacency[u].keys() {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    if v == dst {
                        return Ok(Some(dist[v]));
                    }
                    queue.push_back(v);
                }
            }
        }
        Ok(None)
    }

    /// Degrees, connectivity and pairwise distances for `keywords`.
    /// Duplicate entries are ignored.
    pub fn graph_features(&self, keywords: &[Keyword]) -> Result<GraphFeatures, NetworkError> {
        let mut unique: Vec<&Keyword> = Vec::with_capacity(keywords.len());
        for k in keywords {
            self.id_of(k)?;
            if !unique.contains(&k) {
                unique.push(k);
            }
        }
        let neighbor_counts = unique
            .iter()
            .map(|k| NeighborCount {
                keyword: (*k).clone(),
                count: self.adjacency[self.index[*k]].len(),
            })
            .collect();
        let mut pairwise_paths = Vec::new();
        for (i, a) in unique.iter().enumerate() {
            for b in &unique[i + 1..] {
                pairwise_paths.push(PathEntry {
                    a: (*a).clone(),
                    b: (*b).clone(),
                    length: self.shortest_path_len(a, b)?,
                });
            }
        }
        let connected = pairwise_paths.iter().all(|p| p.length.is_some());
        Ok(GraphFeatures {
            neighbor_counts,
            connected,
            pairwise_paths,
        })
    }

    /// Number of connected components.
    pub fn component_count(&self) -> usize {
        let mut seen = vec![false; self.nodes.len()];
        let mut count = 0;
        for start in 0..self.nodes.len() {
            if seen[start] {
                continue;
            }
            count += 1;
            seen[start] = true;
            let mut stack = vec![start];
            while let Some(u) = stack.pop() {
                for &v in self.adjacency[u].keys() {
                    if !seen[v] {
                        seen[v] = true;
                        stack.push(v);
                    }
                }
            }
        }
        count
    }
}

#[cfg(test)]
mod tests {
    use super::super::tests::{build, kw};

    #[test]
    fn identity_and_two_hops() {
        let net = build(&[
            ("p1", &["a", "b"]),
            ("p2", &["b", "c"]),
            ("p3", &["d", "e"]),
        ]);
        assert_eq!(net.shortest_path_len(&kw("a"), &kw("a")).unwrap(), Some(0));
        assert_eq!(net.shortest_path_len(&kw("a"), &kw("c")).unwrap(), Some(2));
        assert_eq!(net.shortest_path_len(&kw("c"), &kw("a")).unwrap(), Some(2));
        assert_eq!(net.shortest_path_len(&kw("a"), &kw("d")).unwrap(), None);
        assert!(net.shortest_path_len(&kw("a"), &kw("q")).is_err());
    }

    #[test]
    fn features_single_keyword() {
        let net = build(&[("p1", &["a", "b", "c"])]);
        let f = net.graph_features(&[kw("a")]).unwrap();
        assert!(f.connected);
        assert!(f.pairwise_paths.is_empty());
        assert_eq!(f.neighbor_counts[0].count, 2);
        assert_eq!(
            f.render(),
            "Neighbor count:\n- a: 2\nConnectivity: connected\nShortest paths:\n- none (single keyword)"
        );
    }

    #[test]
    fn features_across_components() {
        let net = build(&[
            ("p1", &["a", "b"]),
            ("p2", &["b", "c"]),
            ("p3", &["d", "e"]),
        ]);
        let f = net
            .graph_features(&[kw("a"), kw("c"), kw("d"), kw("a")])
            .unwrap();
        assert!(!f.connected);
        assert_eq!(f.neighbor_counts.len(), 3);
        assert_eq!(f.pairwise_paths.len(), 3);
        assert_eq!(f.path(&kw("c"), &kw("a")), Some(Some(2)));
        assert_eq!(f.path(&kw("a"), &kw("d")), Some(None));
        assert_eq!(
            f.render(),
            "Neighbor count:\n- a: 1\n- c: 1\n- d: 1\nConnectivity: not connected\nShortest paths:\n- a <-> c: 2\n- a <-> d: not connected\n- c <-> d: not connected"
        );
    }
}
