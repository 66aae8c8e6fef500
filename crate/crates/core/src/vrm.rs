//! The visual roadmap: a k-nearest-neighbour graph over rendered pose
//! records. Nodes carry cached per-view RLEs so collision marking runs on
//! intervals, not pixels. Collision marking flags nodes instead of deleting
//! them, which keeps the base graph intact for hop-limited dynamic updates
//! and local-planner neighbourhood queries.

use crate::error::{Error, Result};
use crate::graph::{dijkstra, knn_edge_list, Adjacency};
use crate::manifold::pairwise_distances;
use crate::metrics::{Metric, MetricKind};
use crate::rle::IntervalRle;
use crate::simworld::PoseRecord;
use crate::Real;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeStatus {
    Free,
    Collision,
}

#[derive(Debug, Clone)]
pub struct VrmNode {
    pub record: Arc<PoseRecord>,
    pub status: NodeStatus,
    pub category: Option<String>,
    /// Endpoint nodes are temporary: excluded from persistence and removable
    /// without touching the base graph.
    pub temporary: bool,
    /// Per-view robot silhouettes as interval RLEs.
    pub rles: Vec<IntervalRle>,
}

/// A planned path over the free subgraph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathResult {
    pub nodes: Vec<usize>,
    pub weight: Real,
    /// Filled by the local-planner layer when the path is safety-checked;
    /// one entry per consecutive node pair.
    pub edge_safety: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlanOutcome {
    Path(PathResult),
    Unreachable,
}

#[derive(Debug, Clone)]
pub struct Vrm {
    nodes: Vec<VrmNode>,
    /// Union-rule k-NN edges over permanent nodes, sorted (i < j), fixed at
    /// build time.
    base_edges: Vec<(usize, usize, Real)>,
    /// Parallel to `base_edges`: false once a local planner prunes the edge.
    edge_active: Vec<bool>,
    /// Unweighted view of the base graph, kept for hop-limited updates.
    base_adjacency: Adjacency,
    /// Edges attached to temporary endpoint nodes.
    endpoint_edges: Vec<(usize, usize, Real)>,
    permanent_count: usize,
    metric: Metric,
    k: usize,
    /// Per-node metric caches (projection coordinates) for endpoint queries.
    node_caches: Vec<Option<Vec<Real>>>,
    /// Obstacle RLEs from the most recent marking, one per view.
    active_obstacles: Option<Vec<IntervalRle>>,
}

fn node_rles(record: &PoseRecord) -> Vec<IntervalRle> {
    record.views.iter().map(IntervalRle::encode).collect()
}

/// Collision under the multi-view rule: a pose is free if at least one view
/// shows no overlap, in collision only when every view overlaps.
fn collides_every_view(rles: &[IntervalRle], obstacles: &[IntervalRle]) -> Result<bool> {
    for (r, o) in rles.iter().zip(obstacles) {
        if !r.collide(o)? {
            return Ok(false);
        }
    }
    Ok(true)
}

impl Vrm {
    /// Builds the roadmap: nodes from `records`, union-rule k-NN edges
    /// weighted by metric distance. Distances are computed in parallel;
    /// ties fall to the lower index, so the graph is reproducible.
    pub fn build(records: Vec<PoseRecord>, k: usize, metric: Metric) -> Result<Self> {
        let n = records.len();
        if n <= k || k == 0 {
            return Err(Error::Domain(format!("roadmap needs n > k >= 1, got n={n}, k={k}")));
        }
        let view_count = records.first().map_or(0, |r| r.views.len());
        if records.iter().any(|r| r.views.len() != view_count) {
            return Err(Error::DimensionMismatch("records disagree on view count".into()));
        }
        let d = pairwise_distances(&metric, &records)?;
        let base_edges = knn_edge_list(n, k, &|i, j| d.get(i, j))?;
        let edge_active = vec![true; base_edges.len()];
        let base_adjacency = Adjacency::from_edges(n, &base_edges)?;
        let node_caches: Vec<Option<Vec<Real>>> = records
            .par_iter()
            .map(|r| metric.cache(r))
            .collect::<Result<_>>()?;
        let nodes: Vec<VrmNode> = records
            .into_par_iter()
            .map(|record| {
                let rles = node_rles(&record);
                VrmNode {
                    record: Arc::new(record),
                    status: NodeStatus::Free,
                    category: None,
                    temporary: false,
                    rles,
                }
            })
            .collect();
        Ok(Vrm {
            nodes,
            base_edges,
            edge_active,
            base_adjacency,
            endpoint_edges: Vec::new(),
            permanent_count: n,
            metric,
            k,
            node_caches,
            active_obstacles: None,
        })
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn permanent_count(&self) -> usize {
        self.permanent_count
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn metric(&self) -> &Metric {
        &self.metric
    }

    pub fn node(&self, id: usize) -> &VrmNode {
        &self.nodes[id]
    }

    pub fn status(&self, id: usize) -> NodeStatus {
        self.nodes[id].status
    }

    pub(crate) fn set_status(&mut self, id: usize, status: NodeStatus) {
        self.nodes[id].status = status;
    }

    /// Records the obstacles the current statuses were evaluated against
    /// without re-running a full mark. Used by incremental updates.
    pub(crate) fn set_active_obstacles(&mut self, obstacles: Vec<IntervalRle>) {
        self.active_obstacles = Some(obstacles);
    }

    pub fn base_edges(&self) -> &[(usize, usize, Real)] {
        &self.base_edges
    }

    pub fn edge_active(&self, idx: usize) -> bool {
        self.edge_active[idx]
    }

    pub fn prune_edge(&mut self, idx: usize) {
        self.edge_active[idx] = false;
    }

    /// Reactivates every pruned base edge; node statuses are untouched.
    /// Lets one roadmap be scored under several local planners in turn.
    pub fn restore_all_edges(&mut self) {
        self.edge_active.iter_mut().for_each(|a| *a = true);
    }

    pub fn base_adjacency(&self) -> &Adjacency {
        &self.base_adjacency
    }

    pub fn active_obstacles(&self) -> Option<&[IntervalRle]> {
        self.active_obstacles.as_deref()
    }

    /// Base-graph neighbours of a node, regardless of collision status or
    /// pruning. Local planners superimpose these neighbourhoods, and a
    /// colliding sample in them is exactly what lets the superimposition
    /// witness an obstacle, so statuses must not filter the set. Temporary
    /// endpoints report the permanents they were attached to.
    pub fn base_neighbors(&self, id: usize) -> Vec<usize> {
        if id >= self.permanent_count {
            let mut out: Vec<usize> = self
                .endpoint_edges
                .iter()
                .filter(|&&(_, j, _)| j == id)
                .map(|&(i, _, _)| i)
                .collect();
            out.sort_unstable();
            return out;
        }
        self.base_adjacency.neighbors(id).iter().map(|&(v, _)| v).collect()
    }

    pub fn collision_nodes(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].status == NodeStatus::Collision)
            .collect()
    }

    /// The traversable graph: active un-pruned edges whose endpoints are both
    /// free, plus endpoint attachments under the same condition.
    pub fn active_adjacency(&self) -> Adjacency {
        let mut edges = Vec::with_capacity(self.base_edges.len() + self.endpoint_edges.len());
        for (idx, &(i, j, w)) in self.base_edges.iter().enumerate() {
            if self.edge_active[idx]
                && self.nodes[i].status == NodeStatus::Free
                && self.nodes[j].status == NodeStatus::Free
            {
                edges.push((i, j, w));
            }
        }
        for &(i, j, w) in &self.endpoint_edges {
            if self.nodes[i].status == NodeStatus::Free
                && self.nodes[j].status == NodeStatus::Free
            {
                edges.push((i, j, w));
            }
        }
        Adjacency::from_edges(self.nodes.len(), &edges)
            .expect("internal edges are valid by construction")
    }

    /// Re-evaluates every node against per-view obstacle RLEs and flags those
    /// that overlap in all views. Returns the sorted set of collision nodes.
    pub fn mark_collision_nodes(&mut self, obstacles: &[IntervalRle]) -> Result<Vec<usize>> {
        let view_count = self.nodes.first().map_or(0, |n| n.rles.len());
        if obstacles.len() != view_count {
            return Err(Error::DimensionMismatch(format!(
                "{} obstacle views for {view_count}-view records",
                obstacles.len()
            )));
        }
        let statuses: Vec<NodeStatus> = self
            .nodes
            .par_iter()
            .map(|node| {
                Ok(if collides_every_view(&node.rles, obstacles)? {
                    NodeStatus::Collision
                } else {
                    NodeStatus::Free
                })
            })
            .collect::<Result<_>>()?;
        for (node, status) in self.nodes.iter_mut().zip(&statuses) {
            node.status = *status;
        }
        self.active_obstacles = Some(obstacles.to_vec());
        Ok(self.collision_nodes())
    }

    /// Inserts a start/goal record as a temporary node. The pose itself is
    /// collision-checked against the active obstacles first; a blocked pose
    /// is refused. The node connects to at most `k` nearest free permanent
    /// nodes.
    pub fn insert_endpoint(&mut self, record: PoseRecord) -> Result<usize> {
        let view_count = self.nodes.first().map_or(0, |n| n.rles.len());
        if record.views.len() != view_count {
            return Err(Error::DimensionMismatch(format!(
                "endpoint has {} views, roadmap has {view_count}",
                record.views.len()
            )));
        }
        let rles = node_rles(&record);
        if let Some(obstacles) = &self.active_obstacles {
            if collides_every_view(&rles, obstacles)? {
                return Err(Error::EndpointBlocked(
                    "endpoint pose overlaps the obstacles in every view".into(),
                ));
            }
        }
        let cache = self.metric.cache(&record)?;
        let mut cand: Vec<(Real, usize)> = Vec::new();
        for i in 0..self.permanent_count {
            if self.nodes[i].status != NodeStatus::Free {
                continue;
            }
            let d = self.metric.eval_cached(
                &record,
                cache.as_deref(),
                &self.nodes[i].record,
                self.node_caches[i].as_deref(),
            )?;
            cand.push((d, i));
        }
        cand.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
        cand.truncate(self.k);
        let id = self.nodes.len();
        for &(w, i) in &cand {
            self.endpoint_edges.push((i, id, w));
        }
        self.node_caches.push(cache);
        self.nodes.push(VrmNode {
            record: Arc::new(record),
            status: NodeStatus::Free,
            category: None,
            temporary: true,
            rles,
        });
        Ok(id)
    }

    /// Drops all temporary endpoint nodes and their edges.
    pub fn remove_endpoints(&mut self) {
        self.nodes.truncate(self.permanent_count);
        self.node_caches.truncate(self.permanent_count);
        self.endpoint_edges.clear();
    }

    /// Shortest path over the free subgraph. Both endpoints must be free.
    /// Among equal-weight paths the lexicographically smallest node sequence
    /// wins (realised by a smallest-next-node walk over the shortest-path
    /// DAG rooted at the target).
    pub fn shortest_path(&self, s: usize, t: usize) -> Result<PlanOutcome> {
        let n = self.nodes.len();
        if s >= n || t >= n {
            return Err(Error::Domain(format!("endpoint id out of range ({s}, {t})")));
        }
        for id in [s, t] {
            if self.nodes[id].status != NodeStatus::Free {
                return Err(Error::Domain(format!("node {id} is in collision")));
            }
        }
        if s == t {
            return Ok(PlanOutcome::Path(PathResult {
                nodes: vec![s],
                weight: 0.0,
                edge_safety: Vec::new(),
            }));
        }
        let adj = self.active_adjacency();
        let (dist_t, pred_t) = dijkstra(&adj, t);
        if !dist_t[s].is_finite() {
            return Ok(PlanOutcome::Unreachable);
        }
        // Walk from s, always taking the smallest neighbour that stays on a
        // shortest path to t. Zero-weight edges could revisit a node; the
        // visited guard plus the predecessor chain fallback keeps the walk
        // finite and deterministic.
        let mut path = vec![s];
        let mut visited = vec![false; n];
        visited[s] = true;
        let mut u = s;
        while u != t {
            let mut next = None;
            for &(v, w) in adj.neighbors(u) {
                if visited[v] || dist_t[v] + w != dist_t[u] {
                    continue;
                }
                next = Some(v);
                break;
            }
            match next {
                Some(v) => {
                    visited[v] = true;
                    path.push(v);
                    u = v;
                }
                None => {
                    // Fall back to the Dijkstra tree from the current node.
                    let mut cur = u;
                    while let Some(p) = pred_t[cur] {
                        path.push(p);
                        cur = p;
                        if cur == t {
                            break;
                        }
                    }
                    u = t;
                }
            }
        }
        Ok(PlanOutcome::Path(PathResult {
            nodes: path,
            weight: dist_t[s],
            edge_safety: Vec::new(),
        }))
    }

    /// Labels every node with the majority category among its `k_c` nearest
    /// exemplars under the roadmap metric; exemplars keep their own label.
    /// Ties pick the lexicographically smaller label.
    pub fn assign_categories(
        &mut self,
        exemplars: &BTreeMap<String, Vec<usize>>,
        k_c: usize,
    ) -> Result<()> {
        if exemplars.is_empty() || exemplars.values().any(Vec::is_empty) {
            return Err(Error::Domain("every category needs at least one exemplar".into()));
        }
        if k_c == 0 {
            return Err(Error::Domain("k_c must be positive".into()));
        }
        let mut exemplar_label: BTreeMap<usize, &str> = BTreeMap::new();
        for (label, ids) in exemplars {
            for &id in ids {
                if id >= self.nodes.len() {
                    return Err(Error::Domain(format!("exemplar id {id} out of range")));
                }
                if exemplar_label.insert(id, label).is_some() {
                    return Err(Error::Domain(format!("node {id} appears under two labels")));
                }
            }
        }
        let flat: Vec<(usize, &str)> = exemplar_label.iter().map(|(&i, &l)| (i, l)).collect();
        let labels: Vec<String> = (0..self.nodes.len())
            .into_par_iter()
            .map(|i| -> Result<String> {
                if let Some(l) = exemplar_label.get(&i) {
                    return Ok((*l).to_string());
                }
                let mut near: Vec<(Real, usize, &str)> = flat
                    .iter()
                    .map(|&(e, l)| -> Result<(Real, usize, &str)> {
                        let d = self.metric.eval_cached(
                            &self.nodes[i].record,
                            self.node_caches[i].as_deref(),
                            &self.nodes[e].record,
                            self.node_caches[e].as_deref(),
                        )?;
                        Ok((d, e, l))
                    })
                    .collect::<Result<_>>()?;
                near.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
                near.truncate(k_c);
                let mut votes: BTreeMap<&str, usize> = BTreeMap::new();
                for &(_, _, l) in &near {
                    *votes.entry(l).or_insert(0) += 1;
                }
                // BTreeMap iterates labels in order, so ties keep the first.
                let mut best: (&str, usize) = ("", 0);
                for (l, c) in votes {
                    if c > best.1 {
                        best = (l, c);
                    }
                }
                Ok(best.0.to_string())
            })
            .collect::<Result<_>>()?;
        for (node, label) in self.nodes.iter_mut().zip(labels) {
            node.category = Some(label);
        }
        Ok(())
    }

    /// Empirical category probabilities over all labeled nodes.
    pub fn category_distribution(&self) -> Result<BTreeMap<String, Real>> {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for (i, node) in self.nodes.iter().enumerate() {
            match &node.category {
                Some(label) => *counts.entry(label.clone()).or_insert(0) += 1,
                None => return Err(Error::Domain(format!("node {i} has no category"))),
            }
        }
        let n = self.nodes.len() as Real;
        Ok(counts.into_iter().map(|(l, c)| (l, c as Real / n)).collect())
    }

    /// Serialises the permanent graph with stable field order. Temporary
    /// endpoints are excluded.
    pub fn to_json(&self) -> Result<String> {
        let file = VrmFile {
            k: self.k,
            metric: self.metric.kind().name(),
            nodes: self
                .nodes
                .iter()
                .take(self.permanent_count)
                .enumerate()
                .map(|(id, n)| NodeEntry {
                    id,
                    status: n.status,
                    config: n.record.config.as_slice().to_vec(),
                    category: n.category.clone(),
                })
                .collect(),
            edges: self
                .base_edges
                .iter()
                .zip(&self.edge_active)
                .map(|(&(i, j, w), &active)| EdgeEntry { i, j, w, pruned: !active })
                .collect(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    /// Rebuilds a roadmap from its JSON form plus the original records (in
    /// dataset order) and metric. Validates structure: matching configs, no
    /// self-loops, sorted unique edges, nonnegative finite weights that match
    /// the metric, and no active edge touching a collision node.
    pub fn from_json(json: &str, records: Vec<PoseRecord>, metric: Metric) -> Result<Self> {
        let file: VrmFile = serde_json::from_str(json)?;
        if MetricKind::parse(&file.metric)? != metric.kind() {
            return Err(Error::Format(format!(
                "file metric {} does not match supplied {}",
                file.metric,
                metric.kind().name()
            )));
        }
        if records.len() != file.nodes.len() {
            return Err(Error::Format(format!(
                "{} records for {} stored nodes",
                records.len(),
                file.nodes.len()
            )));
        }
        if file.nodes.len() <= file.k || file.k == 0 {
            return Err(Error::Format("stored k inconsistent with node count".into()));
        }
        for (idx, node) in file.nodes.iter().enumerate() {
            if node.id != idx {
                return Err(Error::Format(format!("node ids not contiguous at {idx}")));
            }
            if records[idx].config.as_slice() != node.config.as_slice() {
                return Err(Error::Format(format!("record {idx} config mismatch")));
            }
        }
        let n = file.nodes.len();
        let mut prev: Option<(usize, usize)> = None;
        for e in &file.edges {
            if e.i >= e.j || e.j >= n {
                return Err(Error::Format(format!("bad edge ({}, {})", e.i, e.j)));
            }
            if let Some(p) = prev {
                if (e.i, e.j) <= p {
                    return Err(Error::Format("edges not sorted/unique".into()));
                }
            }
            prev = Some((e.i, e.j));
            if !e.w.is_finite() || e.w < 0.0 {
                return Err(Error::Format(format!("bad weight on edge ({}, {})", e.i, e.j)));
            }
        }
        let weight_errors: Vec<String> = file
            .edges
            .par_iter()
            .filter_map(|e| {
                match metric.eval(&records[e.i], &records[e.j]) {
                    Ok(d) if (d - e.w).abs() <= 1e-12 => None,
                    Ok(d) => Some(format!("edge ({}, {}) weight {} vs metric {d}", e.i, e.j, e.w)),
                    Err(err) => Some(format!("edge ({}, {}): {err}", e.i, e.j)),
                }
            })
            .collect();
        if let Some(first) = weight_errors.first() {
            return Err(Error::Format(first.clone()));
        }

        let base_edges: Vec<(usize, usize, Real)> =
            file.edges.iter().map(|e| (e.i, e.j, e.w)).collect();
        let edge_active: Vec<bool> = file.edges.iter().map(|e| !e.pruned).collect();
        let base_adjacency = Adjacency::from_edges(n, &base_edges)?;
        let node_caches: Vec<Option<Vec<Real>>> = records
            .par_iter()
            .map(|r| metric.cache(r))
            .collect::<Result<_>>()?;
        let nodes: Vec<VrmNode> = records
            .into_iter()
            .zip(file.nodes)
            .map(|(record, entry)| {
                let rles = node_rles(&record);
                VrmNode {
                    record: Arc::new(record),
                    status: entry.status,
                    category: entry.category,
                    temporary: false,
                    rles,
                }
            })
            .collect();
        Ok(Vrm {
            nodes,
            base_edges,
            edge_active,
            base_adjacency,
            endpoint_edges: Vec::new(),
            permanent_count: n,
            metric,
            k: file.k,
            node_caches,
            active_obstacles: None,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct VrmFile {
    k: usize,
    metric: String,
    nodes: Vec<NodeEntry>,
    edges: Vec<EdgeEntry>,
}

#[derive(Serialize, Deserialize)]
struct NodeEntry {
    id: usize,
    status: NodeStatus,
    config: Vec<Real>,
    category: Option<String>,
}

/// Edges persist the planner-pruning flag; collision masking is the node
/// status's job, so a pruned=false edge may still be absent from the active
/// graph while one of its endpoints is marked.
#[derive(Serialize, Deserialize)]
struct EdgeEntry {
    i: usize,
    j: usize,
    w: Real,
    pruned: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{Point2, ViewTransform};
    use crate::image::BinaryImage;
    use crate::simworld::{
        fk_render, render_obstacles, sample_configs, Canvas, JointVector, RobotModel, Scene,
        Shape,
    };

    fn arm_model() -> RobotModel {
        RobotModel::arm(Point2::new(32.0, 32.0), vec![14.0, 10.0])
    }

    fn render_all(model: &RobotModel, canvas: &Canvas, configs: &[JointVector]) -> Vec<PoseRecord> {
        configs
            .iter()
            .map(|q| fk_render(model, q, canvas).unwrap())
            .collect()
    }

    fn rect_obstacle(canvas: &Canvas, x0: Real, y0: Real, x1: Real, y1: Real) -> IntervalRle {
        let scene = Scene { obstacles: vec![Shape::Rect { x0, y0, x1, y1 }] };
        let img = render_obstacles(&scene, canvas, &ViewTransform::identity()).unwrap();
        IntervalRle::encode(&img)
    }

    fn small_corpus(n: usize, seed: u64) -> (RobotModel, Canvas, Vec<PoseRecord>) {
        let model = arm_model();
        let canvas = Canvas { width: 64, height: 64 };
        let configs = sample_configs(&model, n, seed).unwrap();
        let records = render_all(&model, &canvas, &configs);
        (model, canvas, records)
    }

    #[test]
    fn build_three_collinear_chain() {
        // Angle-geodesic distances make the three configs collinear in
        // C-space; k=1 yields the chain.
        let model = arm_model();
        let canvas = Canvas { width: 64, height: 64 };
        let configs = vec![
            JointVector::new(vec![0.0, 0.0]),
            JointVector::new(vec![0.1, 0.0]),
            JointVector::new(vec![0.2, 0.0]),
        ];
        let records = render_all(&model, &canvas, &configs);
        let vrm = Vrm::build(records, 1, Metric::AngleGeodesic).unwrap();
        let edges: Vec<(usize, usize)> =
            vrm.base_edges().iter().map(|&(i, j, _)| (i, j)).collect();
        assert_eq!(edges, vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn every_node_has_degree_at_least_k() {
        let (_, _, records) = small_corpus(40, 5);
        let k = 4;
        let vrm = Vrm::build(records, k, Metric::ImageL2).unwrap();
        let adj = vrm.base_adjacency();
        for i in 0..vrm.len() {
            assert!(adj.neighbors(i).len() >= k, "node {i} degree {}", adj.neighbors(i).len());
        }
    }

    #[test]
    fn edge_weights_match_metric() {
        let (_, _, records) = small_corpus(25, 9);
        let vrm = Vrm::build(records, 3, Metric::ItpL2).unwrap();
        for &(i, j, w) in vrm.base_edges() {
            let d = vrm
                .metric
                .eval(&vrm.node(i).record, &vrm.node(j).record)
                .unwrap();
            assert!((w - d).abs() <= 1e-12);
        }
    }

    #[test]
    fn build_is_permutation_invariant_up_to_relabeling() {
        // Needs generically distinct distances: image-l2 values are square
        // roots of integers and tie often, which would make the index
        // tie-break order-dependent.
        let (_, _, records) = small_corpus(30, 11);
        let vrm_a = Vrm::build(records.clone(), 3, Metric::AngleGeodesic).unwrap();
        let rot = 7usize;
        let permuted: Vec<PoseRecord> = (0..records.len())
            .map(|i| records[(i + rot) % records.len()].clone())
            .collect();
        let vrm_b = Vrm::build(permuted, 3, Metric::AngleGeodesic).unwrap();
        // New index i holds old record (i + rot) % n.
        let map = |i: usize| (i + rot) % records.len();
        let mut edges_a: Vec<(usize, usize)> =
            vrm_a.base_edges().iter().map(|&(i, j, _)| (i, j)).collect();
        let mut edges_b: Vec<(usize, usize)> = vrm_b
            .base_edges()
            .iter()
            .map(|&(i, j, _)| {
                let (a, b) = (map(i), map(j));
                (a.min(b), a.max(b))
            })
            .collect();
        edges_a.sort_unstable();
        edges_b.sort_unstable();
        assert_eq!(edges_a, edges_b);
    }

    #[test]
    fn build_rejects_small_n() {
        let (_, _, records) = small_corpus(3, 2);
        assert!(Vrm::build(records, 3, Metric::ImageL2).is_err());
    }

    #[test]
    fn marking_follows_every_view_rule() {
        let model = arm_model();
        let canvas = Canvas { width: 64, height: 64 };
        let configs = sample_configs(&model, 12, 3).unwrap();
        let records = render_all(&model, &canvas, &configs);
        let mut vrm = Vrm::build(records, 2, Metric::ImageL2).unwrap();

        // Empty obstacle: nothing marked.
        let empty = vec![IntervalRle::encode(&BinaryImage::new(64, 64))];
        assert!(vrm.mark_collision_nodes(&empty).unwrap().is_empty());

        // Full-canvas obstacle: everything marked, no active edges remain.
        let obstacles = vec![rect_obstacle(&canvas, 0.0, 0.0, 64.0, 64.0)];
        let marked = vrm.mark_collision_nodes(&obstacles).unwrap();
        assert_eq!(marked.len(), vrm.len());
        let adj = vrm.active_adjacency();
        for i in 0..vrm.len() {
            assert!(adj.neighbors(i).is_empty());
        }
    }

    #[test]
    fn collision_nodes_lose_all_edges() {
        let (_, canvas, records) = small_corpus(30, 17);
        let mut vrm = Vrm::build(records, 3, Metric::ImageL2).unwrap();
        // Obstacle off to the side of the base so only some poses reach it.
        let marked = vrm
            .mark_collision_nodes(&[rect_obstacle(&canvas, 44.0, 44.0, 62.0, 62.0)])
            .unwrap();
        assert!(!marked.is_empty(), "central obstacle should hit some poses");
        assert!(marked.len() < vrm.len(), "not every pose overlaps");
        let adj = vrm.active_adjacency();
        for &c in &marked {
            assert!(adj.neighbors(c).is_empty(), "collision node {c} still has edges");
        }
    }

    #[test]
    fn endpoint_insertion_and_removal() {
        let (model, canvas, records) = small_corpus(20, 23);
        let mut vrm = Vrm::build(records, 3, Metric::ImageL2).unwrap();
        // Identical to node 0: zero-weight edge to it.
        let dup = fk_render(&model, &vrm.node(0).record.config.clone(), &canvas).unwrap();
        let id = vrm.insert_endpoint(dup).unwrap();
        assert_eq!(id, 20);
        assert!(vrm.node(id).temporary);
        let zero_edge = vrm
            .endpoint_edges
            .iter()
            .find(|&&(i, _, w)| i == 0 && w == 0.0);
        assert!(zero_edge.is_some(), "expected zero-weight edge to the duplicate");
        let degree = vrm.endpoint_edges.iter().filter(|&&(_, j, _)| j == id).count();
        assert!(degree <= 3);
        for &(i, _, w) in &vrm.endpoint_edges {
            let d = vrm
                .metric
                .eval(&vrm.node(id).record, &vrm.node(i).record)
                .unwrap();
            assert!((w - d).abs() <= 1e-12);
        }
        vrm.remove_endpoints();
        assert_eq!(vrm.len(), 20);
        assert!(vrm.endpoint_edges.is_empty());
    }

    #[test]
    fn blocked_endpoint_is_refused() {
        let (model, canvas, records) = small_corpus(20, 29);
        let mut vrm = Vrm::build(records, 3, Metric::ImageL2).unwrap();
        vrm.mark_collision_nodes(&[rect_obstacle(&canvas, 0.0, 0.0, 64.0, 64.0)]).unwrap();
        let rec = fk_render(&model, &JointVector::new(vec![0.3, 0.3]), &canvas).unwrap();
        let err = vrm.insert_endpoint(rec).unwrap_err();
        assert!(matches!(err, Error::EndpointBlocked(_)), "got {err:?}");
    }

    #[test]
    fn shortest_path_basics() {
        let (_, _, records) = small_corpus(20, 31);
        let vrm = Vrm::build(records, 3, Metric::AngleGeodesic).unwrap();
        match vrm.shortest_path(4, 4).unwrap() {
            PlanOutcome::Path(p) => {
                assert_eq!(p.nodes, vec![4]);
                assert_eq!(p.weight, 0.0);
            }
            PlanOutcome::Unreachable => panic!("s == t must be a path"),
        }
    }

    #[test]
    fn shortest_path_matches_exhaustive_oracle() {
        // Brute-force all simple paths on small instances.
        fn brute(adj: &Adjacency, s: usize, t: usize) -> Option<Real> {
            fn dfs(
                adj: &Adjacency,
                u: usize,
                t: usize,
                seen: &mut Vec<bool>,
                acc: Real,
                best: &mut Option<Real>,
            ) {
                if u == t {
                    *best = Some(best.map_or(acc, |b: Real| b.min(acc)));
                    return;
                }
                for &(v, w) in adj.neighbors(u) {
                    if !seen[v] {
                        seen[v] = true;
                        dfs(adj, v, t, seen, acc + w, best);
                        seen[v] = false;
                    }
                }
            }
            let mut seen = vec![false; adj.len()];
            seen[s] = true;
            let mut best = None;
            dfs(adj, s, t, &mut seen, 0.0, &mut best);
            best
        }
        for seed in [41u64, 43, 47] {
            let (_, _, records) = small_corpus(12, seed);
            let vrm = Vrm::build(records, 2, Metric::ImageL2).unwrap();
            let adj = vrm.active_adjacency();
            for s in 0..4 {
                for t in 8..12 {
                    let expect = brute(&adj, s, t);
                    match vrm.shortest_path(s, t).unwrap() {
                        PlanOutcome::Path(p) => {
                            let b = expect.expect("oracle found no path but planner did");
                            assert!((p.weight - b).abs() <= 1e-9, "weight {} vs {b}", p.weight);
                            // Consecutive nodes must be adjacent.
                            for pair in p.nodes.windows(2) {
                                assert!(adj
                                    .neighbors(pair[0])
                                    .iter()
                                    .any(|&(v, _)| v == pair[1]));
                            }
                        }
                        PlanOutcome::Unreachable => {
                            assert!(expect.is_none(), "planner missed an existing path");
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn path_weight_grows_as_nodes_get_marked() {
        let (_, canvas, records) = small_corpus(60, 53);
        let mut vrm = Vrm::build(records, 4, Metric::AngleGeodesic).unwrap();
        let weight_of = |vrm: &Vrm, s: usize, t: usize| match vrm.shortest_path(s, t).unwrap() {
            PlanOutcome::Path(p) => Some(p.weight),
            PlanOutcome::Unreachable => None,
        };
        let base = weight_of(&vrm, 0, 59);
        // Growing obstacle: each marking is a superset of the previous.
        let mut last = base;
        for half in [6.0, 12.0, 20.0] {
            let rle =
                rect_obstacle(&canvas, 32.0 - half, 32.0 - half, 32.0 + half, 32.0 + half);
            vrm.mark_collision_nodes(&[rle]).unwrap();
            if vrm.status(0) != NodeStatus::Free || vrm.status(59) != NodeStatus::Free {
                break;
            }
            let now = weight_of(&vrm, 0, 59);
            match (last, now) {
                (Some(a), Some(b)) => assert!(b >= a - 1e-12, "weight shrank: {a} -> {b}"),
                (None, Some(_)) => panic!("path reappeared after more marking"),
                _ => {}
            }
            last = now;
        }
    }

    #[test]
    fn categories_majority_and_distribution() {
        let model = arm_model();
        let canvas = Canvas { width: 64, height: 64 };
        // Two well-separated clusters in C-space.
        let mut configs = Vec::new();
        for i in 0..6 {
            configs.push(JointVector::new(vec![0.02 * i as Real, 0.0]));
        }
        for i in 0..6 {
            configs.push(JointVector::new(vec![2.5 + 0.02 * i as Real, 0.5]));
        }
        let records = render_all(&model, &canvas, &configs);
        let mut vrm = Vrm::build(records, 2, Metric::AngleGeodesic).unwrap();
        let mut exemplars = BTreeMap::new();
        exemplars.insert("left".to_string(), vec![0usize]);
        exemplars.insert("right".to_string(), vec![6usize]);
        vrm.assign_categories(&exemplars, 1).unwrap();
        for i in 0..6 {
            assert_eq!(vrm.node(i).category.as_deref(), Some("left"), "node {i}");
        }
        for i in 6..12 {
            assert_eq!(vrm.node(i).category.as_deref(), Some("right"), "node {i}");
        }
        let dist = vrm.category_distribution().unwrap();
        assert_eq!(dist.len(), 2);
        let total: Real = dist.values().sum();
        assert!((total - 1.0).abs() <= 1e-12);
        assert!((dist["left"] - 0.5).abs() <= 1e-12);

        // k_c = 1 equals nearest-exemplar classification.
        let mut vrm2 = Vrm::build(render_all(&model, &canvas, &configs), 2, Metric::AngleGeodesic).unwrap();
        vrm2.assign_categories(&exemplars, 1).unwrap();
        for i in 0..12 {
            let d_left = vrm2.metric.eval(&vrm2.node(i).record, &vrm2.node(0).record).unwrap();
            let d_right = vrm2.metric.eval(&vrm2.node(i).record, &vrm2.node(6).record).unwrap();
            let expect = if d_left <= d_right { "left" } else { "right" };
            assert_eq!(vrm2.node(i).category.as_deref(), Some(expect));
        }
    }

    #[test]
    fn category_errors() {
        let (_, _, records) = small_corpus(8, 61);
        let mut vrm = Vrm::build(records, 2, Metric::AngleGeodesic).unwrap();
        assert!(vrm.assign_categories(&BTreeMap::new(), 1).is_err());
        assert!(vrm.category_distribution().is_err(), "unlabeled nodes must error");
        let mut single = BTreeMap::new();
        single.insert("only".to_string(), vec![0usize]);
        vrm.assign_categories(&single, 3).unwrap();
        let dist = vrm.category_distribution().unwrap();
        assert_eq!(dist["only"], 1.0);
    }

    #[test]
    fn json_round_trip_preserves_graph() {
        let (_, canvas, records) = small_corpus(15, 67);
        let mut vrm = Vrm::build(records.clone(), 2, Metric::ImageL2).unwrap();
        vrm.mark_collision_nodes(&[rect_obstacle(&canvas, 44.0, 44.0, 60.0, 60.0)]).unwrap();
        // Pruning survives the round trip via active flags; marked state too.
        if !vrm.base_edges.is_empty() {
            // Prune the first edge between two free nodes, if any.
            let idx = (0..vrm.base_edges.len()).find(|&e| {
                let (i, j, _) = vrm.base_edges[e];
                vrm.status(i) == NodeStatus::Free && vrm.status(j) == NodeStatus::Free
            });
            if let Some(idx) = idx {
                vrm.prune_edge(idx);
            }
        }
        let json = vrm.to_json().unwrap();
        let back = Vrm::from_json(&json, records, Metric::ImageL2).unwrap();
        assert_eq!(back.len(), vrm.permanent_count());
        assert_eq!(back.base_edges, vrm.base_edges);
        assert_eq!(back.edge_active, vrm.edge_active);
        for i in 0..back.len() {
            assert_eq!(back.status(i), vrm.status(i));
        }
        // Serialising again is byte-identical.
        assert_eq!(back.to_json().unwrap(), json);
    }

    #[test]
    fn json_import_rejects_corruption() {
        let (_, _, records) = small_corpus(10, 71);
        let vrm = Vrm::build(records.clone(), 2, Metric::ImageL2).unwrap();
        let json = vrm.to_json().unwrap();
        // Tampered weight.
        let bad = json.replacen("\"w\":", "\"w\": 1e99, \"was\":", 1);
        assert!(Vrm::from_json(&bad, records.clone(), Metric::ImageL2).is_err());
        // Wrong metric.
        assert!(Vrm::from_json(&json, records.clone(), Metric::AngleGeodesic).is_err());
        // Wrong record count.
        assert!(Vrm::from_json(&json, records[..9].to_vec(), Metric::ImageL2).is_err());
    }

    #[test]
    fn determinism_across_thread_counts() {
        let (_, _, records) = small_corpus(60, 73);
        let json_with_threads = |n: usize| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
            pool.install(|| {
                let vrm = Vrm::build(records.clone(), 5, Metric::AngleGeodesic).unwrap();
                vrm.to_json().unwrap()
            })
        };
        let one = json_with_threads(1);
        let four = json_with_threads(4);
        assert_eq!(one, four);
    }
}
