//! Graph primitives shared by the embedding and roadmap layers: k-nearest
//! neighbour edge construction, symmetric adjacency lists, deterministic
//! Dijkstra, connected components, and hop-limited breadth-first search.

use crate::error::{Error, Result};
use crate::Real;
use rayon::prelude::*;
use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// For each node, the `k` nearest other nodes under `dist`, ties broken by
/// the smaller index. Rows are computed independently, so parallel execution
/// matches the sequential result.
pub fn knn_neighbors(
    n: usize,
    k: usize,
    dist: &(impl Fn(usize, usize) -> Real + Sync),
) -> Result<Vec<Vec<usize>>> {
    if k == 0 || k >= n {
        return Err(Error::Domain(format!(
            "k-NN needs 1 <= k < n, got k={k} with n={n}"
        )));
    }
    let rows: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut cand: Vec<(Real, usize)> =
                (0..n).filter(|&j| j != i).map(|j| (dist(i, j), j)).collect();
            cand.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            cand.truncate(k);
            cand.into_iter().map(|(_, j)| j).collect()
        })
        .collect();
    Ok(rows)
}

/// Undirected k-NN edges under the union rule: (i, j) is an edge when either
/// node lists the other among its `k` nearest. Returned sorted with i < j.
pub fn knn_edge_list(
    n: usize,
    k: usize,
    dist: &(impl Fn(usize, usize) -> Real + Sync),
) -> Result<Vec<(usize, usize, Real)>> {
    let neighbors = knn_neighbors(n, k, dist)?;
    let mut edges = Vec::new();
    for (i, row) in neighbors.iter().enumerate() {
        for &j in row {
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            edges.push((a, b));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    Ok(edges.into_iter().map(|(a, b)| (a, b, dist(a, b))).collect())
}

/// Symmetric weighted adjacency lists; neighbour lists stay sorted by node id.
#[derive(Debug, Clone, Default)]
pub struct Adjacency {
    lists: Vec<Vec<(usize, Real)>>,
}

impl Adjacency {
    pub fn new(n: usize) -> Self {
        Adjacency { lists: vec![Vec::new(); n] }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize, Real)]) -> Result<Self> {
        let mut adj = Self::new(n);
        for &(a, b, w) in edges {
            if a >= n || b >= n {
                return Err(Error::Domain(format!("edge ({a},{b}) out of range for n={n}")));
            }
            if a == b {
                return Err(Error::Domain(format!("self-loop at node {a}")));
            }
            if !(w >= 0.0) {
                return Err(Error::Domain(format!("edge ({a},{b}) has invalid weight {w}")));
            }
            adj.lists[a].push((b, w));
            adj.lists[b].push((a, w));
        }
        for list in &mut adj.lists {
            list.sort_by(|x, y| x.0.cmp(&y.0));
        }
        Ok(adj)
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, Real)] {
        &self.lists[i]
    }

    pub fn edge_count(&self) -> usize {
        self.lists.iter().map(Vec::len).sum::<usize>() / 2
    }
}

/// Single-source shortest-path distances and predecessors. Unreachable nodes
/// get `Real::INFINITY` and no predecessor. Heap ties pop the smaller node id
/// first and equal-length paths keep the smaller predecessor, so the result
/// does not depend on incidental iteration order.
pub fn dijkstra(adj: &Adjacency, source: usize) -> (Vec<Real>, Vec<Option<usize>>) {
    let n = adj.len();
    let mut dist = vec![Real::INFINITY; n];
    let mut pred: Vec<Option<usize>> = vec![None; n];
    let mut done = vec![false; n];
    // Nonnegative finite f64 keys compare correctly through their bit patterns.
    let mut heap: BinaryHeap<Reverse<(u64, usize)>> = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Reverse((0u64, source)));
    while let Some(Reverse((dbits, u))) = heap.pop() {
        if done[u] || Real::from_bits(dbits) > dist[u] {
            continue;
        }
        done[u] = true;
        let du = dist[u];
        for &(v, w) in adj.neighbors(u) {
            let nd = du + w;
            if nd < dist[v] {
                dist[v] = nd;
                pred[v] = Some(u);
                heap.push(Reverse((nd.to_bits(), v)));
            } else if nd == dist[v] {
                if let Some(p) = pred[v] {
                    if u < p {
                        pred[v] = Some(u);
                    }
                }
            }
        }
    }
    (dist, pred)
}

/// Shortest path from `s` to `t` as (nodes, total weight); `None` when `t` is
/// unreachable. `s == t` yields the single-node path with weight zero.
pub fn dijkstra_path(adj: &Adjacency, s: usize, t: usize) -> Option<(Vec<usize>, Real)> {
    if s == t {
        return Some((vec![s], 0.0));
    }
    let (dist, pred) = dijkstra(adj, s);
    if !dist[t].is_finite() {
        return None;
    }
    let mut path = vec![t];
    let mut cur = t;
    while let Some(p) = pred[cur] {
        path.push(p);
        cur = p;
    }
    path.reverse();
    debug_assert_eq!(path[0], s);
    Some((path, dist[t]))
}

/// Connected components as sorted node lists, ordered by their smallest node.
pub fn connected_components(adj: &Adjacency) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut seen = vec![false; n];
    let mut comps = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        let mut comp = Vec::new();
        let mut stack = vec![start];
        seen[start] = true;
        while let Some(u) = stack.pop() {
            comp.push(u);
            for &(v, _) in adj.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        comp.sort_unstable();
        comps.push(comp);
    }
    comps
}

/// Nodes within `hops` edges of any seed (seeds included), sorted. A hop
/// budget of `usize::MAX` returns everything reachable.
pub fn bfs_within_hops(adj: &Adjacency, seeds: &[usize], hops: usize) -> Vec<usize> {
    let n = adj.len();
    let mut depth = vec![usize::MAX; n];
    let mut queue = std::collections::VecDeque::new();
    for &s in seeds {
        if s < n && depth[s] == usize::MAX {
            depth[s] = 0;
            queue.push_back(s);
        }
    }
    while let Some(u) = queue.pop_front() {
        if depth[u] >= hops {
            continue;
        }
        for &(v, _) in adj.neighbors(u) {
            if depth[v] == usize::MAX {
                depth[v] = depth[u] + 1;
                queue.push_back(v);
            }
        }
    }
    (0..n).filter(|&i| depth[i] != usize::MAX).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_positions(n: usize) -> Vec<Real> {
        (0..n).map(|i| i as Real).collect()
    }

    #[test]
    fn knn_union_rule_connects_asymmetric_neighbors() {
        // Points 0,1,2 clustered; point 3 far away. 3's nearest is 2, but 2's
        // nearest two are 0,1. Union rule must still create edge (2,3).
        let pos: [Real; 4] = [0.0, 0.4, 0.8, 10.0];
        let dist = |i: usize, j: usize| (pos[i] - pos[j]).abs();
        let edges = knn_edge_list(4, 2, &dist).unwrap();
        assert!(edges.iter().any(|&(a, b, _)| (a, b) == (2, 3)));
        // Weight equals the metric distance.
        let e = edges.iter().find(|&&(a, b, _)| (a, b) == (2, 3)).unwrap();
        assert_eq!(e.2, 9.2);
    }

    #[test]
    fn knn_rejects_bad_k() {
        let dist = |_i: usize, _j: usize| 1.0;
        assert!(knn_neighbors(3, 0, &dist).is_err());
        assert!(knn_neighbors(3, 3, &dist).is_err());
    }

    #[test]
    fn dijkstra_matches_floyd_warshall_exactly_on_dyadic_weights() {
        // Dyadic weights make float addition exact, so the two algorithms
        // must agree bit for bit.
        let n = 12;
        let mut edges = Vec::new();
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            state
        };
        for a in 0..n {
            for b in a + 1..n {
                if next() % 3 == 0 {
                    let w = ((next() % 16) + 1) as Real * 0.25;
                    edges.push((a, b, w));
                }
            }
        }
        let adj = Adjacency::from_edges(n, &edges).unwrap();
        let mut fw = vec![vec![Real::INFINITY; n]; n];
        for i in 0..n {
            fw[i][i] = 0.0;
        }
        for &(a, b, w) in &edges {
            fw[a][b] = fw[a][b].min(w);
            fw[b][a] = fw[b][a].min(w);
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = fw[i][k] + fw[k][j];
                    if via < fw[i][j] {
                        fw[i][j] = via;
                    }
                }
            }
        }
        for s in 0..n {
            let (dist, _) = dijkstra(&adj, s);
            for t in 0..n {
                assert_eq!(dist[t], fw[s][t], "source {s} target {t}");
            }
        }
    }

    #[test]
    fn dijkstra_path_reconstruction() {
        let edges = [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 5.0), (2, 3, 1.0)];
        let adj = Adjacency::from_edges(4, &edges).unwrap();
        let (path, w) = dijkstra_path(&adj, 0, 3).unwrap();
        assert_eq!(path, vec![0, 1, 2, 3]);
        assert_eq!(w, 3.0);
        assert_eq!(dijkstra_path(&adj, 2, 2), Some((vec![2], 0.0)));
    }

    #[test]
    fn unreachable_target_returns_none() {
        let edges = [(0, 1, 1.0)];
        let adj = Adjacency::from_edges(3, &edges).unwrap();
        assert!(dijkstra_path(&adj, 0, 2).is_none());
    }

    #[test]
    fn components_and_bfs_hops() {
        let edges = [(0, 1, 1.0), (1, 2, 1.0), (3, 4, 1.0)];
        let adj = Adjacency::from_edges(6, &edges).unwrap();
        let comps = connected_components(&adj);
        assert_eq!(comps, vec![vec![0, 1, 2], vec![3, 4], vec![5]]);
        assert_eq!(bfs_within_hops(&adj, &[0], 1), vec![0, 1]);
        assert_eq!(bfs_within_hops(&adj, &[0], usize::MAX), vec![0, 1, 2]);
        assert_eq!(bfs_within_hops(&adj, &[5], 4), vec![5]);
        assert_eq!(bfs_within_hops(&adj, &[0, 3], 1), vec![0, 1, 3, 4]);
    }

    #[test]
    fn knn_on_line_preserves_chain() {
        let pos = line_positions(10);
        let dist = |i: usize, j: usize| (pos[i] - pos[j]).abs();
        let edges = knn_edge_list(10, 2, &dist).unwrap();
        let adj = Adjacency::from_edges(10, &edges).unwrap();
        assert_eq!(connected_components(&adj).len(), 1);
        let (path, w) = dijkstra_path(&adj, 0, 9).unwrap();
        // Any monotone path costs exactly the span; the chain plus the two
        // endpoint skip-edges gives this unique predecessor chain.
        assert_eq!(w, 9.0);
        assert_eq!(path, vec![0, 2, 3, 4, 5, 6, 7, 9]);
    }
}
