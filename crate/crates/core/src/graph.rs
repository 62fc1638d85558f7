//! Immutable directed graph with forward and reverse adjacency, the edge-list
//! loader and the synthetic generators used by the experiment protocol.
//!
//! Nodes are dense `0..n` indices. Loaded graphs keep an [`IdMap`] back to the
//! ids found in the input file.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt::{self, Write as _};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::seq::index;

use crate::error::{invalid, Error, Result};
use crate::rng;

/// Dense node index in `[0, n)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, serde::Serialize, serde::Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl From<usize> for NodeId {
    #[inline]
    fn from(i: usize) -> Self {
        NodeId(i as u32)
    }
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Compressed adjacency in both directions. Neighbor lists are sorted.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectedGraph {
    n: usize,
    out_offsets: Vec<usize>,
    out_targets: Vec<NodeId>,
    in_offsets: Vec<usize>,
    in_sources: Vec<NodeId>,
}

fn build_csr(n: usize, pairs: impl Iterator<Item = (usize, NodeId)>, m: usize) -> (Vec<usize>, Vec<NodeId>) {
    let mut buckets: Vec<Vec<NodeId>> = vec![Vec::new(); n];
    for (from, to) in pairs {
        buckets[from].push(to);
    }
    let mut offsets = Vec::with_capacity(n + 1);
    let mut flat = Vec::with_capacity(m);
    offsets.push(0);
    for mut b in buckets {
        b.sort_unstable();
        flat.extend_from_slice(&b);
        offsets.push(flat.len());
    }
    (offsets, flat)
}

impl DirectedGraph {
    /// Builds a graph from `n` and a list of edges. Self-loops, duplicates and
    /// out-of-range endpoints are rejected.
    pub fn from_edges(n: usize, edges: &[(NodeId, NodeId)]) -> Result<Self> {
        if n > u32::MAX as usize {
            return Err(invalid("node count exceeds u32 range"));
        }
        let mut seen = HashSet::with_capacity(edges.len());
        for &(u, v) in edges {
            if u.index() >= n || v.index() >= n {
                return Err(invalid(format!("edge {u} -> {v} out of range for n = {n}")));
            }
            if u == v {
                return Err(invalid(format!("self-loop on node {u}")));
            }
            if !seen.insert((u, v)) {
                return Err(invalid(format!("duplicate edge {u} -> {v}")));
            }
        }
        Ok(Self::from_checked_edges(n, edges))
    }

    fn from_checked_edges(n: usize, edges: &[(NodeId, NodeId)]) -> Self {
        let m = edges.len();
        let (out_offsets, out_targets) = build_csr(n, edges.iter().map(|&(u, v)| (u.index(), v)), m);
        let (in_offsets, in_sources) = build_csr(n, edges.iter().map(|&(u, v)| (v.index(), u)), m);
        DirectedGraph {
            n,
            out_offsets,
            out_targets,
            in_offsets,
            in_sources,
        }
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.out_targets.len()
    }

    #[inline]
    pub fn out_neighbors(&self, u: NodeId) -> &[NodeId] {
        &self.out_targets[self.out_offsets[u.index()]..self.out_offsets[u.index() + 1]]
    }

    #[inline]
    pub fn in_neighbors(&self, v: NodeId) -> &[NodeId] {
        &self.in_sources[self.in_offsets[v.index()]..self.in_offsets[v.index() + 1]]
    }

    pub fn out_degree(&self, u: NodeId) -> usize {
        self.out_neighbors(u).len()
    }

    pub fn in_degree(&self, v: NodeId) -> usize {
        self.in_neighbors(v).len()
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> {
        (0..self.n).map(NodeId::from)
    }

    /// All edges in `(source, target)` order, grouped by source.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.nodes()
            .flat_map(move |u| self.out_neighbors(u).iter().map(move |&v| (u, v)))
    }

    /// Nodes reachable from `sources` along out-edges, sources included.
    pub fn forward_reachable(&self, sources: impl IntoIterator<Item = NodeId>, max_depth: Option<u64>) -> BTreeSet<NodeId> {
        bfs(self.n, sources, max_depth, |u| self.out_neighbors(u))
    }

    /// Nodes that can reach `targets` along out-edges, targets included.
    pub fn reverse_reachable(&self, targets: impl IntoIterator<Item = NodeId>, max_depth: Option<u64>) -> BTreeSet<NodeId> {
        bfs(self.n, targets, max_depth, |v| self.in_neighbors(v))
    }

    /// Serializes to the edge-list text format, dense ids, with a `# nodes:`
    /// directive so isolated nodes survive a reload.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::with_capacity(self.edge_count() * 12 + 16);
        let _ = writeln!(out, "# nodes: {}", self.n);
        for (u, v) in self.edges() {
            let _ = writeln!(out, "{u} {v}");
        }
        out
    }
}

fn bfs<'g, F>(n: usize, starts: impl IntoIterator<Item = NodeId>, max_depth: Option<u64>, next: F) -> BTreeSet<NodeId>
where
    F: Fn(NodeId) -> &'g [NodeId],
{
    let mut depth = vec![u64::MAX; n];
    let mut queue = std::collections::VecDeque::new();
    for s in starts {
        if depth[s.index()] == u64::MAX {
            depth[s.index()] = 0;
            queue.push_back(s);
        }
    }
    let mut out = BTreeSet::new();
    while let Some(u) = queue.pop_front() {
        out.insert(u);
        let d = depth[u.index()];
        if max_depth.is_some_and(|cap| d >= cap) {
            continue;
        }
        for &w in next(u) {
            if depth[w.index()] == u64::MAX {
                depth[w.index()] = d + 1;
                queue.push_back(w);
            }
        }
    }
    out
}

/// Mapping between the ids of an input file and dense [`NodeId`]s.
///
/// Dense ids follow the ascending order of external ids.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdMap {
    external: Vec<u64>,
    lookup: HashMap<u64, NodeId>,
}

impl IdMap {
    pub fn identity(n: usize) -> Self {
        let external: Vec<u64> = (0..n as u64).collect();
        Self::from_sorted(external)
    }

    fn from_sorted(external: Vec<u64>) -> Self {
        let lookup = external.iter().enumerate().map(|(i, &e)| (e, NodeId::from(i))).collect();
        IdMap { external, lookup }
    }

    pub fn external(&self, id: NodeId) -> u64 {
        self.external[id.index()]
    }

    pub fn internal(&self, external: u64) -> Option<NodeId> {
        self.lookup.get(&external).copied()
    }

    pub fn len(&self) -> usize {
        self.external.len()
    }

    pub fn is_empty(&self) -> bool {
        self.external.is_empty()
    }
}

fn parse_node_directive(comment: &str) -> Option<&str> {
    comment.trim_start_matches('#').trim().strip_prefix("nodes:").map(str::trim)
}

/// Reads the edge-list format: one `u v` pair per line meaning `u -> v`.
/// Blank lines and `#` comments are skipped; the optional comment
/// `# nodes: N` pre-registers ids `0..N`.
pub fn load_edge_list<R: BufRead>(reader: R) -> Result<(DirectedGraph, IdMap)> {
    let mut raw: Vec<(u64, u64)> = Vec::new();
    let mut ids: BTreeSet<u64> = BTreeSet::new();
    let mut seen: HashSet<(u64, u64)> = HashSet::new();

    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if text.starts_with('#') {
            if let Some(count) = parse_node_directive(text) {
                let count: u64 = count.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("bad node count {count:?}"),
                })?;
                ids.extend(0..count);
            }
            continue;
        }
        let mut fields = text.split_whitespace();
        let (Some(a), Some(b), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected two node ids, got {text:?}"),
            });
        };
        let parse = |s: &str| {
            s.parse::<u64>().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("bad node id {s:?}"),
            })
        };
        let (u, v) = (parse(a)?, parse(b)?);
        if u == v {
            return Err(Error::SelfLoop { line: line_no, node: u });
        }
        if !seen.insert((u, v)) {
            return Err(Error::DuplicateEdge {
                line: line_no,
                from: u,
                to: v,
            });
        }
        ids.insert(u);
        ids.insert(v);
        raw.push((u, v));
    }

    if ids.len() > u32::MAX as usize {
        return Err(invalid("too many nodes"));
    }
    let map = IdMap::from_sorted(ids.into_iter().collect());
    let edges: Vec<(NodeId, NodeId)> = raw
        .into_iter()
        .map(|(u, v)| (map.lookup[&u], map.lookup[&v]))
        .collect();
    Ok((DirectedGraph::from_checked_edges(map.len(), &edges), map))
}

pub fn load_edge_list_file(path: impl AsRef<Path>) -> Result<(DirectedGraph, IdMap)> {
    load_edge_list(BufReader::new(File::open(path)?))
}

/// 4-neighbour lattice; node `(r, c)` has id `r * cols + c` and every lattice
/// adjacency becomes two opposite directed edges.
pub fn gen_grid(rows: usize, cols: usize) -> Result<DirectedGraph> {
    if rows == 0 || cols == 0 {
        return Err(invalid(format!("grid dimensions must be positive, got {rows}x{cols}")));
    }
    let id = |r: usize, c: usize| NodeId::from(r * cols + c);
    let mut edges = Vec::with_capacity(2 * (rows * (cols - 1) + cols * (rows - 1)));
    for r in 0..rows {
        for c in 0..cols {
            if c + 1 < cols {
                edges.push((id(r, c), id(r, c + 1)));
                edges.push((id(r, c + 1), id(r, c)));
            }
            if r + 1 < rows {
                edges.push((id(r, c), id(r + 1, c)));
                edges.push((id(r + 1, c), id(r, c)));
            }
        }
    }
    Ok(DirectedGraph::from_checked_edges(rows * cols, &edges))
}

/// `m` distinct non-loop directed edges drawn uniformly without replacement.
pub fn gen_random_graph(n: usize, m: usize, seed: u64) -> Result<DirectedGraph> {
    let capacity = n.checked_mul(n.saturating_sub(1)).ok_or_else(|| invalid("n too large"))?;
    if m > capacity {
        return Err(invalid(format!("{m} edges requested but only {capacity} are possible on {n} nodes")));
    }
    let mut rng = rng::from_seed(seed);
    let mut edges: Vec<(NodeId, NodeId)> = index::sample(&mut rng, capacity, m)
        .into_iter()
        .map(|slot| {
            // slot enumerates (u, w) with w indexing the n-1 nodes other than u
            let u = slot / (n - 1);
            let w = slot % (n - 1);
            let v = if w < u { w } else { w + 1 };
            (NodeId::from(u), NodeId::from(v))
        })
        .collect();
    edges.sort_unstable();
    Ok(DirectedGraph::from_checked_edges(n, &edges))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn load(text: &str) -> Result<(DirectedGraph, IdMap)> {
        load_edge_list(text.as_bytes())
    }

    #[test]
    fn loads_path() {
        let (g, _) = load("0 1\n1 2").unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.in_neighbors(NodeId(2)), &[NodeId(1)]);
    }

    #[test]
    fn rejects_self_loop() {
        assert!(matches!(load("5 5"), Err(Error::SelfLoop { line: 1, node: 5 })));
    }

    #[test]
    fn rejects_duplicate_with_line_number() {
        assert!(matches!(load("0 1\n0 1"), Err(Error::DuplicateEdge { line: 2, .. })));
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(matches!(load("0 1\n# fine\n\n2"), Err(Error::Parse { line: 4, .. })));
        assert!(matches!(load("0 x"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(load("0 1 2"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn sparse_ids_are_remapped_in_order() {
        let (g, ids) = load("# comment\n100 7\n7 42\n").unwrap();
        assert_eq!(g.node_count(), 3);
        assert_eq!(ids.internal(7), Some(NodeId(0)));
        assert_eq!(ids.internal(42), Some(NodeId(1)));
        assert_eq!(ids.external(NodeId(2)), 100);
        assert_eq!(g.out_neighbors(NodeId(2)), &[NodeId(0)]);
    }

    #[test]
    fn grid_counts() {
        let g = gen_grid(2, 2).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (4, 8));
        let g = gen_grid(1, 3).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (3, 4));
        // 2 * (60*59 + 60*59)
        let g = gen_grid(60, 60).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (3600, 14160));
        assert!(gen_grid(0, 3).is_err());
    }

    #[test]
    fn grid_degrees_are_symmetric_and_bounded() {
        let g = gen_grid(5, 7).unwrap();
        for u in g.nodes() {
            assert_eq!(g.in_degree(u), g.out_degree(u));
            assert!((2..=4).contains(&g.out_degree(u)));
        }
    }

    #[test]
    fn random_graph_edge_cases() {
        let g = gen_random_graph(2, 2, 9).unwrap();
        let edges: Vec<_> = g.edges().collect();
        assert_eq!(edges, vec![(NodeId(0), NodeId(1)), (NodeId(1), NodeId(0))]);
        let g = gen_random_graph(10, 0, 1).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (10, 0));
        assert!(gen_random_graph(5, 25, 1).is_err());
        assert_eq!(gen_random_graph(30, 100, 4).unwrap(), gen_random_graph(30, 100, 4).unwrap());
    }

    #[test]
    fn isolated_nodes_survive_round_trip() {
        let g = gen_random_graph(10, 0, 1).unwrap();
        let (back, _) = load(&g.to_edge_list()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn bounded_reachability() {
        let (g, _) = load("0 1\n1 2\n2 3").unwrap();
        let r = g.forward_reachable([NodeId(0)], Some(2));
        assert_eq!(r.into_iter().collect::<Vec<_>>(), vec![NodeId(0), NodeId(1), NodeId(2)]);
        let r = g.reverse_reachable([NodeId(3)], None);
        assert_eq!(r.len(), 4);
    }

    proptest! {
        #[test]
        fn adjacency_views_agree(n in 2usize..25, density in 0.0f64..1.0, seed in any::<u64>()) {
            let m = ((n * (n - 1)) as f64 * density) as usize;
            let g = gen_random_graph(n, m, seed).unwrap();
            prop_assert_eq!(g.edge_count(), m);
            let mut from_in = 0;
            for v in g.nodes() {
                for &u in g.in_neighbors(v) {
                    prop_assert!(g.out_neighbors(u).binary_search(&v).is_ok());
                    from_in += 1;
                }
            }
            prop_assert_eq!(from_in, m);
        }

        #[test]
        fn edge_list_round_trip(n in 1usize..25, density in 0.0f64..1.0, seed in any::<u64>()) {
            let m = ((n * (n - 1)) as f64 * density) as usize;
            let g = gen_random_graph(n, m, seed).unwrap();
            let (back, ids) = load(&g.to_edge_list()).unwrap();
            prop_assert_eq!(&back, &g);
            prop_assert_eq!(ids, IdMap::identity(n));
        }
    }
}
