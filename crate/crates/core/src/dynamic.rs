//! Moving-obstacle replanning.
//!
//! A scripted [`ObstacleTrack`] moves a scene step by step. Between steps the
//! roadmap's collision statuses are refreshed incrementally: boundary nodes
//! (collision nodes barely touching the obstacle) and the rest of the
//! collision set seed a hop-limited breadth-first sweep, and only nodes
//! inside that sweep are re-checked. The [`run`] loop then walks the robot
//! one roadmap edge per obstacle step, replanning as statuses change and
//! waiting whenever the goal is blocked or unreachable.

use crate::error::{Error, Result};
use crate::graph::bfs_within_hops;
use crate::image::GrayImage;
use crate::rle::IntervalRle;
use crate::simworld::{
    compose_frame, render_obstacles, render_scene_views, Canvas, RobotModel, Scene, Shape,
};
use crate::vrm::{NodeStatus, PlanOutcome, Vrm};
use crate::Real;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::path::{Path, PathBuf};

/// Default hop budget for incremental status updates.
pub const DEFAULT_HOP_LIMIT: usize = 3;
/// Default touch threshold (pixels of overlap) below which a collision node
/// counts as a boundary node.
pub const DEFAULT_TOUCH_THRESHOLD: u64 = 5;
/// Default simulation step budget.
pub const DEFAULT_STEP_BUDGET: usize = 1000;

/// Scripted obstacle motion: one scene per time step. Steps beyond the end
/// hold the final scene, so a track models both finite manoeuvres and a
/// static world (single step).
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleTrack {
    steps: Vec<Scene>,
    max_step_px: Real,
}

impl ObstacleTrack {
    /// Validates that consecutive scenes keep every obstacle within the
    /// declared per-step displacement bound. Obstacles pair up by index, so
    /// a track cannot add, drop or retype shapes mid-flight.
    pub fn new(steps: Vec<Scene>, max_step_px: Real) -> Result<Self> {
        if steps.is_empty() {
            return Err(Error::Domain("an obstacle track needs at least one scene".into()));
        }
        if !(max_step_px >= 0.0) || !max_step_px.is_finite() {
            return Err(Error::Domain(format!(
                "per-step displacement bound must be finite and non-negative, got {max_step_px}"
            )));
        }
        for (i, pair) in steps.windows(2).enumerate() {
            let d = scene_displacement(&pair[0], &pair[1])
                .map_err(|e| Error::InvalidModel(format!("track steps {i}->{}: {e}", i + 1)))?;
            if d > max_step_px {
                return Err(Error::InvalidModel(format!(
                    "track steps {i}->{} move an obstacle by {d:.2} px, above the {max_step_px} px bound",
                    i + 1
                )));
            }
        }
        Ok(ObstacleTrack { steps, max_step_px })
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn max_step_px(&self) -> Real {
        self.max_step_px
    }

    pub fn steps(&self) -> &[Scene] {
        &self.steps
    }

    /// Scene index active at a time step; the track holds its last scene.
    pub fn scene_index(&self, time: usize) -> usize {
        time.min(self.steps.len() - 1)
    }

    pub fn scene(&self, index: usize) -> &Scene {
        &self.steps[self.scene_index(index)]
    }
}

/// Largest displacement any obstacle makes between two scenes.
fn scene_displacement(a: &Scene, b: &Scene) -> Result<Real> {
    if a.obstacles.len() != b.obstacles.len() {
        return Err(Error::InvalidModel(format!(
            "obstacle count changes from {} to {}",
            a.obstacles.len(),
            b.obstacles.len()
        )));
    }
    let mut worst: Real = 0.0;
    for (i, (sa, sb)) in a.obstacles.iter().zip(&b.obstacles).enumerate() {
        let d = shape_displacement(sa, sb)
            .map_err(|e| Error::InvalidModel(format!("obstacle {i}: {e}")))?;
        worst = worst.max(d);
    }
    Ok(worst)
}

fn shape_displacement(a: &Shape, b: &Shape) -> Result<Real> {
    let dist = |x0: Real, y0: Real, x1: Real, y1: Real| ((x1 - x0).powi(2) + (y1 - y0).powi(2)).sqrt();
    match (a, b) {
        (Shape::Rect { x0, y0, x1, y1 }, Shape::Rect { x0: u0, y0: v0, x1: u1, y1: v1 }) => {
            Ok(dist(*x0, *y0, *u0, *v0).max(dist(*x1, *y1, *u1, *v1)))
        }
        (Shape::Disc { cx, cy, r }, Shape::Disc { cx: ux, cy: uy, r: ur }) => {
            Ok(dist(*cx, *cy, *ux, *uy) + (ur - r).abs())
        }
        (Shape::ConvexPolygon { points: pa }, Shape::ConvexPolygon { points: pb }) => {
            if pa.len() != pb.len() {
                return Err(Error::InvalidModel(format!(
                    "polygon vertex count changes from {} to {}",
                    pa.len(),
                    pb.len()
                )));
            }
            Ok(pa
                .iter()
                .zip(pb)
                .map(|(&(x0, y0), &(x1, y1))| dist(x0, y0, x1, y1))
                .fold(0.0, Real::max))
        }
        _ => Err(Error::InvalidModel("obstacle changes shape kind between steps".into())),
    }
}

/// What the robot did at one simulation step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SimEvent {
    /// Took the next edge of the standing plan.
    Moved,
    /// Stayed put: the goal was blocked or no path existed.
    Waited,
    /// Adopted a new plan (it differed from the standing one) and took its
    /// first edge.
    Replanned,
    /// Terminal frame: the robot occupies the goal node.
    Reached,
}

/// One simulation step: where the robot stood when the step was decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimFrame {
    pub time: usize,
    pub node: usize,
    pub scene_index: usize,
    pub event: SimEvent,
}

/// Frame-by-frame record of a dynamic run. Frame times are consecutive from
/// zero; consecutive nodes are equal (wait) or joined by an unpruned edge.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimTrace {
    pub frames: Vec<SimFrame>,
}

impl SimTrace {
    pub fn to_json_string(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json_str(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Node occupied at each frame, in order.
    pub fn nodes(&self) -> Vec<usize> {
        self.frames.iter().map(|f| f.node).collect()
    }

    /// Checks the trace's structural invariants against a roadmap: frame
    /// times count up from zero, waits hold position, moves follow unpruned
    /// edges, and the final event is `reached` exactly when the final node
    /// is the goal.
    pub fn validate(&self, vrm: &Vrm, goal: usize) -> Result<()> {
        if self.frames.is_empty() {
            return Err(Error::Domain("trace has no frames".into()));
        }
        let mut linked: HashSet<(usize, usize)> = HashSet::new();
        for (idx, &(u, v, _)) in vrm.base_edges().iter().enumerate() {
            if vrm.edge_active(idx) {
                linked.insert((u, v));
                linked.insert((v, u));
            }
        }
        for id in vrm.permanent_count()..vrm.len() {
            for p in vrm.base_neighbors(id) {
                linked.insert((id, p));
                linked.insert((p, id));
            }
        }
        for (i, f) in self.frames.iter().enumerate() {
            if f.time != i {
                return Err(Error::Format(format!("frame {i} carries time {}", f.time)));
            }
            if f.node >= vrm.len() {
                return Err(Error::Format(format!("frame {i} references unknown node {}", f.node)));
            }
            let last = i + 1 == self.frames.len();
            if last {
                if (f.event == SimEvent::Reached) != (f.node == goal) {
                    return Err(Error::Format(
                        "final event must be reached exactly when the robot is at the goal".into(),
                    ));
                }
                break;
            }
            if f.event == SimEvent::Reached {
                return Err(Error::Format(format!("non-final frame {i} claims reached")));
            }
            let next = self.frames[i + 1].node;
            let ok = match f.event {
                SimEvent::Waited => next == f.node,
                _ => next == f.node || linked.contains(&(f.node, next)),
            };
            if !ok {
                return Err(Error::Format(format!(
                    "frames {i}->{}: nodes {} -> {next} break the move/wait rule",
                    i + 1,
                    f.node
                )));
            }
        }
        Ok(())
    }
}

/// Collision nodes barely touching the obstacles: positive overlap of at
/// most `tau` pixels in every view. These sit on the obstacle's silhouette
/// boundary and anchor incremental updates when it moves.
pub fn boundary_nodes(vrm: &Vrm, obstacles: &[IntervalRle], tau: u64) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    'nodes: for id in vrm.collision_nodes() {
        let node = vrm.node(id);
        if node.rles.len() != obstacles.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} obstacle views for {}-view records",
                obstacles.len(),
                node.rles.len()
            )));
        }
        for (r, o) in node.rles.iter().zip(obstacles) {
            let pen = r.penetration(o)?;
            if pen == 0 || pen > tau {
                continue 'nodes;
            }
        }
        out.push(id);
    }
    Ok(out)
}

/// Re-evaluates collision statuses after the obstacles move from `old` to
/// `new`, restricted to nodes within `h` hops (over the pre-pruning base
/// graph) of the boundary set plus the current collision set. Returns the
/// sorted nodes whose status flipped.
///
/// `old` must be the obstacle set the current statuses were marked against.
/// Two situations force a full sweep: `h == usize::MAX`, and an empty seed
/// set (with nothing marked there is no anchor to localise around, and the
/// moved obstacle may collide nodes arbitrarily far from its old position).
/// Temporary endpoint nodes are always re-evaluated; they sit outside the
/// base graph but their statuses gate planning.
pub fn update_for_moved_obstacle(
    vrm: &mut Vrm,
    old: &[IntervalRle],
    new: &[IntervalRle],
    h: usize,
    tau: u64,
) -> Result<Vec<usize>> {
    let views = vrm.node(0).rles.len();
    if old.len() != views || new.len() != views {
        return Err(Error::DimensionMismatch(format!(
            "{} old / {} new obstacle views for {views}-view records",
            old.len(),
            new.len()
        )));
    }
    match vrm.active_obstacles() {
        Some(active) if active == old => {}
        Some(_) => {
            return Err(Error::Domain(
                "old obstacles do not match the marking the statuses reflect".into(),
            ))
        }
        None => return Err(Error::Domain("collision marking has not run yet".into())),
    }
    // Boundary nodes are collision nodes, so the union below is the
    // collision set; it is spelled out because the update rule is defined
    // over both sets and boundary extraction is what tau parameterises.
    let mut seeds = boundary_nodes(vrm, old, tau)?;
    seeds.extend(vrm.collision_nodes());
    seeds.sort_unstable();
    seeds.dedup();
    let mut scope: Vec<usize> = if h == usize::MAX || seeds.is_empty() {
        (0..vrm.len()).collect()
    } else {
        let mut s = bfs_within_hops(vrm.base_adjacency(), &seeds, h);
        s.extend(vrm.permanent_count()..vrm.len());
        s
    };
    scope.sort_unstable();
    scope.dedup();
    let fresh: Vec<(usize, NodeStatus)> = scope
        .par_iter()
        .map(|&id| {
            let mut hit = true;
            for (r, o) in vrm.node(id).rles.iter().zip(new) {
                if !r.collide(o)? {
                    hit = false;
                    break;
                }
            }
            Ok((id, if hit { NodeStatus::Collision } else { NodeStatus::Free }))
        })
        .collect::<Result<_>>()?;
    let mut changed = Vec::new();
    for (id, status) in fresh {
        if vrm.status(id) != status {
            vrm.set_status(id, status);
            changed.push(id);
        }
    }
    vrm.set_active_obstacles(new.to_vec());
    Ok(changed)
}

/// Knobs for the dynamic loop. `h` and `tau` govern incremental updates;
/// both depend on obstacle speed and sampling density, so they are
/// configurable rather than fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DynamicPolicy {
    /// Hop budget for incremental updates; `usize::MAX` recomputes fully.
    pub h: usize,
    /// Touch threshold (pixels) for boundary-node extraction.
    pub tau: u64,
    /// Simulation aborts with a timeout after this many steps.
    pub step_budget: usize,
    /// When false, the robot keeps following its standing plan and replans
    /// only after a status change invalidates or could invalidate it.
    pub replan_each_step: bool,
}

impl Default for DynamicPolicy {
    fn default() -> Self {
        DynamicPolicy {
            h: DEFAULT_HOP_LIMIT,
            tau: DEFAULT_TOUCH_THRESHOLD,
            step_budget: DEFAULT_STEP_BUDGET,
            replan_each_step: true,
        }
    }
}

/// Outcome of a dynamic run; both variants carry the executed trace.
#[derive(Debug, Clone, PartialEq)]
pub enum RunOutcome {
    Reached(SimTrace),
    Timeout(SimTrace),
}

impl RunOutcome {
    pub fn reached(&self) -> bool {
        matches!(self, RunOutcome::Reached(_))
    }

    pub fn trace(&self) -> &SimTrace {
        match self {
            RunOutcome::Reached(t) | RunOutcome::Timeout(t) => t,
        }
    }

    pub fn into_trace(self) -> SimTrace {
        match self {
            RunOutcome::Reached(t) | RunOutcome::Timeout(t) => t,
        }
    }
}

/// Renders a track scene once per view. The whole scene is world geometry,
/// so every view sees it under its own transform.
fn track_obstacle_rles(
    track: &ObstacleTrack,
    index: usize,
    model: &RobotModel,
    canvas: &Canvas,
) -> Result<Vec<IntervalRle>> {
    let scenes = vec![track.scene(index).clone(); model.view_transforms.len()];
    let images = render_scene_views(&scenes, canvas, &model.view_transforms)?;
    Ok(images.iter().map(IntervalRle::encode).collect())
}

/// Executes the wait/replan loop from node `s` to node `t` against a moving
/// obstacle track.
///
/// Per time step: the scene for that step is marked into the roadmap (a full
/// mark at step zero, hop-limited updates afterwards), then the robot acts.
/// If it stands on the goal the trace ends with a `reached` frame. If the
/// goal or its own node is blocked, or no path exists, it waits. Otherwise
/// it plans a shortest path and takes one edge, labelling the frame
/// `replanned` when the plan differs from the standing one. Exhausting the
/// step budget yields [`RunOutcome::Timeout`] with the partial trace.
pub fn run(
    vrm: &mut Vrm,
    model: &RobotModel,
    canvas: &Canvas,
    track: &ObstacleTrack,
    s: usize,
    t: usize,
    policy: &DynamicPolicy,
) -> Result<RunOutcome> {
    model.validate()?;
    if policy.step_budget == 0 {
        return Err(Error::Domain("step budget must be positive".into()));
    }
    let n = vrm.len();
    if s >= n || t >= n {
        return Err(Error::Domain(format!("endpoint id out of range ({s}, {t})")));
    }
    let mut scene_idx = track.scene_index(0);
    let mut obstacles = track_obstacle_rles(track, scene_idx, model, canvas)?;
    vrm.mark_collision_nodes(&obstacles)?;
    for (label, id) in [("start", s), ("goal", t)] {
        if vrm.status(id) != NodeStatus::Free {
            return Err(Error::EndpointBlocked(format!(
                "{label} node {id} is in collision at step 0"
            )));
        }
    }
    let mut trace = SimTrace::default();
    let mut current = s;
    // Remaining plan beyond the current node, shared across steps so the
    // replanned/moved distinction and the optional keep-following policy
    // have something to compare against.
    let mut pending: Vec<usize> = Vec::new();
    let mut changed_this_step = true;
    let mut time = 0;
    loop {
        if time > 0 {
            let idx = track.scene_index(time);
            if idx != scene_idx {
                let fresh = track_obstacle_rles(track, idx, model, canvas)?;
                let changed = update_for_moved_obstacle(vrm, &obstacles, &fresh, policy.h, policy.tau)?;
                changed_this_step = !changed.is_empty();
                obstacles = fresh;
                scene_idx = idx;
            } else {
                changed_this_step = false;
            }
        }
        if current == t {
            trace.frames.push(SimFrame { time, node: current, scene_index: scene_idx, event: SimEvent::Reached });
            return Ok(RunOutcome::Reached(trace));
        }
        if time >= policy.step_budget {
            return Ok(RunOutcome::Timeout(trace));
        }
        let mut step: Option<(usize, SimEvent)> = None;
        if vrm.status(t) == NodeStatus::Free && vrm.status(current) == NodeStatus::Free {
            let keep_following = !policy.replan_each_step
                && !changed_this_step
                && pending.first().is_some_and(|&next| vrm.status(next) == NodeStatus::Free);
            if keep_following {
                step = Some((pending[0], SimEvent::Moved));
            } else if let PlanOutcome::Path(path) = vrm.shortest_path(current, t)? {
                let route = path.nodes[1..].to_vec();
                let event = if route == pending { SimEvent::Moved } else { SimEvent::Replanned };
                pending = route;
                step = Some((pending[0], event));
            }
        }
        match step {
            Some((next, event)) => {
                trace.frames.push(SimFrame { time, node: current, scene_index: scene_idx, event });
                pending.remove(0);
                current = next;
            }
            None => {
                trace.frames.push(SimFrame { time, node: current, scene_index: scene_idx, event: SimEvent::Waited });
                pending.clear();
            }
        }
        time += 1;
    }
}

/// Composite image for one trace frame: obstacles mid gray, robot white,
/// both in the primary view.
pub fn render_sim_frame(
    vrm: &Vrm,
    track: &ObstacleTrack,
    model: &RobotModel,
    canvas: &Canvas,
    frame: &SimFrame,
) -> Result<GrayImage> {
    if frame.node >= vrm.len() {
        return Err(Error::Domain(format!("frame references unknown node {}", frame.node)));
    }
    let robot = &vrm.node(frame.node).record.views[0];
    let obstacles = render_obstacles(track.scene(frame.scene_index), canvas, &model.view_transforms[0])?;
    compose_frame(robot, &obstacles)
}

/// Writes one PGM per trace frame (`frame_0000.pgm`, ...) and returns the
/// paths in frame order.
pub fn save_trace_frames(
    dir: &Path,
    vrm: &Vrm,
    track: &ObstacleTrack,
    model: &RobotModel,
    canvas: &Canvas,
    trace: &SimTrace,
) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut out = Vec::with_capacity(trace.frames.len());
    for frame in &trace.frames {
        let img = render_sim_frame(vrm, track, model, canvas, frame)?;
        let path = dir.join(format!("frame_{:04}.pgm", frame.time));
        std::fs::write(&path, img.to_pgm())?;
        out.push(path);
    }
    Ok(out)
}
