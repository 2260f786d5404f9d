//! Watts–Strogatz small-world topology and per-round edge activation.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{derive_seed, rng_from_seed};

/// How many times a rewire redraws its endpoint before giving up and keeping
/// the original edge. Keeping the edge preserves the edge count either way.
const REWIRE_RETRIES: u32 = 64;

/// Undirected simple graph over nodes `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Graph {
    n: u32,
    /// Normalized (u < v) pairs, sorted.
    edges: Vec<(u32, u32)>,
    adjacency: Vec<Vec<u32>>,
}

impl Graph {
    /// Builds a graph from an explicit edge list, normalizing pairs and
    /// rejecting self-loops, duplicates, and out-of-range endpoints.
    pub fn from_edges(n: u32, raw_edges: &[(u32, u32)]) -> Result<Self> {
        let mut set = BTreeSet::new();
        for &(a, b) in raw_edges {
            if a == b {
                return Err(Error::InvalidParameters(format!("self-loop at node {a}")));
            }
            if a >= n || b >= n {
                return Err(Error::InvalidParameters(format!(
                    "edge ({a}, {b}) outside node range 0..{n}"
                )));
            }
            if !set.insert((a.min(b), a.max(b))) {
                return Err(Error::InvalidParameters(format!("duplicate edge ({a}, {b})")));
            }
        }
        Ok(Self::from_edge_set(n, set))
    }

    fn from_edge_set(n: u32, set: BTreeSet<(u32, u32)>) -> Self {
        let mut adjacency = vec![Vec::new(); n as usize];
        for &(u, v) in &set {
            adjacency[u as usize].push(v);
            adjacency[v as usize].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Self { n, edges: set.into_iter().collect(), adjacency }
    }

    pub fn node_count(&self) -> u32 {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Normalized edge pairs in sorted order.
    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn neighbors(&self, node: u32) -> Result<&[u32]> {
        self.adjacency
            .get(node as usize)
            .map(Vec::as_slice)
            .ok_or(Error::NodeOutOfRange { node, n: self.n })
    }

    pub fn degree(&self, node: u32) -> Result<usize> {
        self.neighbors(node).map(<[u32]>::len)
    }

    pub fn contains_edge(&self, a: u32, b: u32) -> bool {
        self.edges.binary_search(&(a.min(b), a.max(b))).is_ok()
    }

    /// Average local clustering coefficient: for each node, the fraction of
    /// its neighbor pairs that are themselves connected (0 for degree < 2),
    /// averaged over all nodes.
    pub fn average_clustering(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let mut total = 0.0;
        for node in 0..self.n {
            let neighbors = &self.adjacency[node as usize];
            let d = neighbors.len();
            if d < 2 {
                continue;
            }
            let mut closed = 0usize;
            for i in 0..d {
                for j in (i + 1)..d {
                    if self.contains_edge(neighbors[i], neighbors[j]) {
                        closed += 1;
                    }
                }
            }
            total += 2.0 * closed as f64 / (d * (d - 1)) as f64;
        }
        total / self.n as f64
    }

    /// True when every node can reach every other node.
    pub fn is_connected(&self) -> bool {
        if self.n == 0 {
            return true;
        }
        let mut seen = vec![false; self.n as usize];
        let mut stack = vec![0u32];
        seen[0] = true;
        let mut count = 1u32;
        while let Some(node) = stack.pop() {
            for &next in &self.adjacency[node as usize] {
                if !seen[next as usize] {
                    seen[next as usize] = true;
                    count += 1;
                    stack.push(next);
                }
            }
        }
        count == self.n
    }

    /// Edge-list text: one `u v` pair per line, sorted.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::with_capacity(self.edges.len() * 8);
        for (u, v) in &self.edges {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }
}

/// The activated edges of one round; observation flows only along these.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSubset {
    pub round: u32,
    /// Normalized (u < v) pairs, sorted; always a subset of the graph edges.
    pub active: Vec<(u32, u32)>,
}

impl EdgeSubset {
    pub fn contains(&self, a: u32, b: u32) -> bool {
        self.active.binary_search(&(a.min(b), a.max(b))).is_ok()
    }
}

/// Builds the Watts–Strogatz graph: a ring lattice where every node connects
/// to its `k/2` nearest neighbors on each side, then each lattice edge is
/// rewired with probability `p` to a uniformly drawn new endpoint. Rewires
/// that would create a self-loop or duplicate are redrawn a bounded number of
/// times and then left in place, so the edge count is always `n * k / 2`.
pub fn watts_strogatz(n: u32, k: u32, p: f64, seed: u64) -> Result<Graph> {
    if k < 2 || k % 2 != 0 {
        return Err(Error::InvalidParameters(format!(
            "neighborhood size k must be even and at least 2, got {k}"
        )));
    }
    if n <= k {
        return Err(Error::InvalidParameters(format!(
            "node count must exceed neighborhood size, got n={n}, k={k}"
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameters(format!(
            "rewiring probability must lie in [0, 1], got {p}"
        )));
    }

    let mut set = BTreeSet::new();
    for offset in 1..=(k / 2) {
        for node in 0..n {
            let other = (node + offset) % n;
            set.insert((node.min(other), node.max(other)));
        }
    }

    let mut rng = rng_from_seed(seed);
    for offset in 1..=(k / 2) {
        for node in 0..n {
            if !rng.random_bool(p) {
                continue;
            }
            let other = (node + offset) % n;
            let original = (node.min(other), node.max(other));
            if !set.contains(&original) {
                // Already rewired away by an earlier pass.
                continue;
            }
            for _ in 0..REWIRE_RETRIES {
                let target = rng.random_range(0..n);
                if target == node {
                    continue;
                }
                let candidate = (node.min(target), node.max(target));
                if set.contains(&candidate) {
                    continue;
                }
                set.remove(&original);
                set.insert(candidate);
                break;
            }
        }
    }

    let graph = Graph::from_edge_set(n, set);
    debug_assert_eq!(graph.edge_count(), (n as usize) * (k as usize) / 2);
    if !graph.is_connected() {
        log::warn!(
            "watts_strogatz(n={n}, k={k}, p={p}, seed={seed}) produced a disconnected graph"
        );
    }
    Ok(graph)
}

/// Samples `floor(fraction * |edges|)` edges (at least 1) uniformly without
/// replacement. Deterministic in `(seed, round)`; distinct rounds draw from
/// independent streams.
pub fn activate_edges(graph: &Graph, fraction: f64, round: u32, seed: u64) -> Result<EdgeSubset> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::InvalidParameters(format!(
            "activation fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let total = graph.edge_count();
    if total == 0 {
        return Err(Error::InvalidParameters("graph has no edges to activate".into()));
    }
    let count = (((fraction * total as f64).floor() as usize).max(1)).min(total);
    let mut rng = rng_from_seed(derive_seed(seed, &format!("round-{round}")));
    let mut indices = rand::seq::index::sample(&mut rng, total, count).into_vec();
    indices.sort_unstable();
    let active = indices.into_iter().map(|i| graph.edges[i]).collect();
    Ok(EdgeSubset { round, active })
}

/// Nodes sharing an active edge with `node`, sorted by id. Possibly empty.
pub fn active_neighbors(graph: &Graph, subset: &EdgeSubset, node: u32) -> Result<Vec<u32>> {
    if node >= graph.node_count() {
        return Err(Error::NodeOutOfRange { node, n: graph.node_count() });
    }
    let mut neighbors: Vec<u32> = subset
        .active
        .iter()
        .filter_map(|&(u, v)| {
            if u == node {
                Some(v)
            } else if v == node {
                Some(u)
            } else {
                None
            }
        })
        .collect();
    neighbors.sort_unstable();
    Ok(neighbors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent clustering oracle: counts triangles by testing every node
    /// triple against the raw edge set, never touching adjacency lists.
    fn clustering_by_triangle_count(graph: &Graph) -> f64 {
        let n = graph.node_count();
        let has = |a: u32, b: u32| graph.edges().contains(&(a.min(b), a.max(b)));
        let mut triangles = vec![0usize; n as usize];
        for a in 0..n {
            for b in (a + 1)..n {
                if !has(a, b) {
                    continue;
                }
                for c in (b + 1)..n {
                    if has(a, c) && has(b, c) {
                        triangles[a as usize] += 1;
                        triangles[b as usize] += 1;
                        triangles[c as usize] += 1;
                    }
                }
            }
        }
        let mut total = 0.0;
        for node in 0..n {
            let d = graph.degree(node).unwrap();
            if d >= 2 {
                total += 2.0 * triangles[node as usize] as f64 / (d * (d - 1)) as f64;
            }
        }
        total / n as f64
    }

    /// BFS characteristic path length over all ordered reachable pairs.
    fn characteristic_path_length(graph: &Graph) -> f64 {
        let n = graph.node_count() as usize;
        let mut sum = 0u64;
        let mut pairs = 0u64;
        for start in 0..n as u32 {
            let mut dist = vec![u32::MAX; n];
            dist[start as usize] = 0;
            let mut queue = std::collections::VecDeque::from([start]);
            while let Some(node) = queue.pop_front() {
                for &next in graph.neighbors(node).unwrap() {
                    if dist[next as usize] == u32::MAX {
                        dist[next as usize] = dist[node as usize] + 1;
                        queue.push_back(next);
                    }
                }
            }
            for (other, d) in dist.iter().enumerate() {
                if other as u32 != start && *d != u32::MAX {
                    sum += u64::from(*d);
                    pairs += 1;
                }
            }
        }
        sum as f64 / pairs as f64
    }

    #[test]
    fn edge_count_is_nk_over_2() {
        for p in [0.0, 0.2, 1.0] {
            let g = watts_strogatz(104, 6, p, 42).unwrap();
            assert_eq!(g.edge_count(), 312);
            let degree_sum: usize = (0..104).map(|v| g.degree(v).unwrap()).sum();
            assert_eq!(degree_sum, 624);
        }
    }

    #[test]
    fn lattice_clustering_matches_oracle_and_closed_form() {
        let g = watts_strogatz(104, 6, 0.0, 1).unwrap();
        for node in 0..104 {
            assert_eq!(g.degree(node).unwrap(), 6);
        }
        let implementation = g.average_clustering();
        let oracle = clustering_by_triangle_count(&g);
        assert!((implementation - oracle).abs() < 1e-9);
        // Ring lattice value 3(k-2)/(4(k-1)) for k = 6.
        assert!((implementation - 0.6).abs() < 1e-12);
    }

    #[test]
    fn full_rewiring_shrinks_clustering_and_path_length() {
        let lattice = watts_strogatz(104, 6, 0.0, 0).unwrap();
        let c0 = clustering_by_triangle_count(&lattice);
        let l0 = characteristic_path_length(&lattice);
        let mut c_sum = 0.0;
        let mut l_sum = 0.0;
        for seed in 0..100 {
            let g = watts_strogatz(104, 6, 1.0, seed).unwrap();
            c_sum += clustering_by_triangle_count(&g);
            l_sum += characteristic_path_length(&g);
        }
        assert!(c_sum / 100.0 < c0);
        assert!(l_sum / 100.0 < l0);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(watts_strogatz(104, 5, 0.2, 1).is_err());
        assert!(watts_strogatz(6, 6, 0.2, 1).is_err());
        assert!(watts_strogatz(104, 6, 1.5, 1).is_err());
        assert!(watts_strogatz(104, 6, -0.1, 1).is_err());
    }

    #[test]
    fn activation_count_and_replay() {
        let g = watts_strogatz(104, 6, 0.2, 42).unwrap();
        let s1 = activate_edges(&g, 0.1, 1, 7).unwrap();
        assert_eq!(s1.active.len(), 31);
        assert_eq!(activate_edges(&g, 0.1, 1, 7).unwrap(), s1);
        let s2 = activate_edges(&g, 0.1, 2, 7).unwrap();
        assert_ne!(s1.active, s2.active);

        let full = activate_edges(&g, 1.0, 1, 7).unwrap();
        assert_eq!(full.active, g.edges());

        // floor would give 0; the minimum of one edge applies
        let tiny = activate_edges(&g, 1e-6, 1, 7).unwrap();
        assert_eq!(tiny.active.len(), 1);
    }

    #[test]
    fn active_neighbors_cases() {
        let g = watts_strogatz(104, 6, 0.0, 3).unwrap();
        let empty = EdgeSubset { round: 1, active: Vec::new() };
        for node in 0..104 {
            assert!(active_neighbors(&g, &empty, node).unwrap().is_empty());
        }

        let full = activate_edges(&g, 1.0, 1, 3).unwrap();
        let lattice_neighbors = |node: i64| -> Vec<u32> {
            let mut v: Vec<u32> = [-3i64, -2, -1, 1, 2, 3]
                .iter()
                .map(|d| ((node + d).rem_euclid(104)) as u32)
                .collect();
            v.sort_unstable();
            v
        };
        for node in 0..104 {
            assert_eq!(
                active_neighbors(&g, &full, node).unwrap(),
                lattice_neighbors(node as i64)
            );
        }

        assert!(matches!(
            active_neighbors(&g, &full, 104),
            Err(Error::NodeOutOfRange { node: 104, n: 104 })
        ));
    }

    #[test]
    fn path_graph_from_edges() {
        let g = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        assert_eq!(g.neighbors(1).unwrap(), &[0, 2]);
        assert!(Graph::from_edges(3, &[(0, 0)]).is_err());
        assert!(Graph::from_edges(3, &[(0, 1), (1, 0)]).is_err());
        assert!(Graph::from_edges(3, &[(0, 5)]).is_err());
    }

    #[test]
    fn edge_list_round_trip() {
        let g = watts_strogatz(10, 4, 0.3, 5).unwrap();
        let text = g.to_edge_list();
        let parsed: Vec<(u32, u32)> = text
            .lines()
            .map(|line| {
                let mut it = line.split_whitespace();
                (it.next().unwrap().parse().unwrap(), it.next().unwrap().parse().unwrap())
            })
            .collect();
        assert_eq!(Graph::from_edges(10, &parsed).unwrap(), g);
    }

    proptest! {
        #[test]
        fn rewiring_conserves_edge_count(
            n in 8u32..60,
            half_k in 1u32..3,
            p in 0.0f64..=1.0,
            seed in any::<u64>(),
        ) {
            let k = half_k * 2;
            prop_assume!(n > k);
            let g = watts_strogatz(n, k, p, seed).unwrap();
            prop_assert_eq!(g.edge_count(), (n as usize) * (k as usize) / 2);
        }

        #[test]
        fn activation_is_symmetric_and_matches_scan(
            fraction in 0.01f64..=1.0,
            round in 1u32..50,
            seed in any::<u64>(),
        ) {
            let g = watts_strogatz(30, 4, 0.2, 11).unwrap();
            let subset = activate_edges(&g, fraction, round, seed).unwrap();
            for node in 0..30 {
                let neighbors = active_neighbors(&g, &subset, node).unwrap();
                // brute-force scan over the active edge list
                let mut expected: Vec<u32> = subset
                    .active
                    .iter()
                    .flat_map(|&(u, v)| {
                        if u == node { Some(v) } else if v == node { Some(u) } else { None }
                    })
                    .collect();
                expected.sort_unstable();
                prop_assert_eq!(&neighbors, &expected);
                for other in neighbors {
                    let back = active_neighbors(&g, &subset, other).unwrap();
                    prop_assert!(back.contains(&node));
                }
            }
        }
    }
}
