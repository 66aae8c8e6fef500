//! Edge-safety checks in image space: neighbourhood superimposition (LTS),
//! tracked-point joins (ITP), nearest-feature joins (JNST), and the dense
//! joint-interpolation gold oracle that scores them.
//!
//! All image-space planners operate on the primary view; the gold oracle
//! renders every view and calls a configuration free when at least one view
//! shows no overlap.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geom::Point2;
use crate::image::BinaryImage;
use crate::manifold::pca_fit;
use crate::rle::IntervalRle;
use crate::simworld::{
    fk_render, gold_interpolate, render_scene_views, Canvas, JointVector, PoseRecord, RobotModel,
    Scene,
};
use crate::vrm::{NodeStatus, Vrm};
use crate::Real;

/// Interpolation step used by the gold oracle when none is configured: one
/// degree in radians.
pub const DEFAULT_GOLD_EPS: Real = PI / 180.0;

/// Default brush width for join segments.
pub const DEFAULT_SEGMENT_THICKNESS: u32 = 1;

/// Edge-checking strategies, including the do-nothing baseline and the
/// ground-truth oracle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PlannerKind {
    None,
    LtsIntersection,
    LtsUnion,
    Itp,
    Jnst,
    Gold,
}

impl PlannerKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "none" => Ok(Self::None),
            "lts-intersection" => Ok(Self::LtsIntersection),
            "lts-union" => Ok(Self::LtsUnion),
            "itp" => Ok(Self::Itp),
            "jnst" => Ok(Self::Jnst),
            "gold" => Ok(Self::Gold),
            other => Err(Error::InvalidConfig(format!(
                "unknown planner {other:?}; expected none, lts-intersection, lts-union, itp, jnst or gold"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::LtsIntersection => "lts-intersection",
            Self::LtsUnion => "lts-union",
            Self::Itp => "itp",
            Self::Jnst => "jnst",
            Self::Gold => "gold",
        }
    }

    pub fn all() -> [Self; 6] {
        [
            Self::None,
            Self::LtsIntersection,
            Self::LtsUnion,
            Self::Itp,
            Self::Jnst,
            Self::Gold,
        ]
    }
}

/// Which neighbourhood the superimposition planner unions over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LtsMode {
    /// Common neighbours of both endpoints; falls back to the union when the
    /// endpoints share none.
    Intersection,
    /// All neighbours of either endpoint.
    Union,
}

impl LtsMode {
    fn kind(self) -> PlannerKind {
        match self {
            Self::Intersection => PlannerKind::LtsIntersection,
            Self::Union => PlannerKind::LtsUnion,
        }
    }
}

/// A binary estimate of the area the robot covers while traversing an edge,
/// tagged with the construction that produced it.
#[derive(Debug, Clone)]
pub struct SweptImage {
    pub kind: PlannerKind,
    pub image: BinaryImage,
}

/// One edge's safety verdict. `penetration` is the overlap pixel count the
/// check observed against the obstacle; it is zero exactly when `safe`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeVerdict {
    /// Caller-supplied edge label, usually roadmap node ids.
    pub edge: (usize, usize),
    pub kind: PlannerKind,
    pub safe: bool,
    pub penetration: u64,
}

fn verdict_against(
    edge: (usize, usize),
    swept: &SweptImage,
    obstacle: &IntervalRle,
) -> Result<EdgeVerdict> {
    let penetration = IntervalRle::encode(&swept.image).penetration(obstacle)?;
    Ok(EdgeVerdict { edge, kind: swept.kind, safe: penetration == 0, penetration })
}

/// Draws the segment from `a` to `b` (rounded to the pixel grid) with a
/// square brush of side `thickness`; 1 gives a plain Bresenham line. Pixels
/// falling outside the image are dropped.
pub fn draw_segment(
    img: &mut BinaryImage,
    a: Point2<Real>,
    b: Point2<Real>,
    thickness: u32,
) -> Result<()> {
    if thickness == 0 {
        return Err(Error::Domain("segment thickness must be at least 1".into()));
    }
    let (w, h) = (img.width() as i64, img.height() as i64);
    let half_lo = (thickness as i64 - 1) / 2;
    let half_hi = thickness as i64 - 1 - half_lo;
    let stamp = |cx: i64, cy: i64, img: &mut BinaryImage| {
        for y in cy - half_lo..=cy + half_hi {
            for x in cx - half_lo..=cx + half_hi {
                if x >= 0 && y >= 0 && x < w && y < h {
                    img.set(x as u32, y as u32, true);
                }
            }
        }
    };
    let (mut x0, mut y0) = (a.x.round() as i64, a.y.round() as i64);
    let (x1, y1) = (b.x.round() as i64, b.y.round() as i64);
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    loop {
        stamp(x0, y0, img);
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
    Ok(())
}

fn check_node(vrm: &Vrm, id: usize) -> Result<()> {
    if id >= vrm.len() {
        return Err(Error::Domain(format!(
            "node {id} out of range for a roadmap of {} nodes",
            vrm.len()
        )));
    }
    Ok(())
}

fn primary_view(record: &PoseRecord) -> Result<&BinaryImage> {
    record
        .views
        .first()
        .ok_or_else(|| Error::Domain("pose record has no rendered views".into()))
}

/// Node set the superimposition runs over: shared (or, in union mode, all)
/// base-graph neighbours of the endpoints plus the endpoints themselves.
/// Collision-marked samples stay in; their silhouettes are what let the
/// superimposition witness an obstacle. The set ignores pruning, so repeated
/// passes see identical neighbourhoods.
fn lts_pose_set(vrm: &Vrm, u: usize, v: usize, mode: LtsMode) -> Vec<usize> {
    let nu: BTreeSet<usize> = vrm.base_neighbors(u).into_iter().collect();
    let nv: BTreeSet<usize> = vrm.base_neighbors(v).into_iter().collect();
    let mut set: BTreeSet<usize> = match mode {
        LtsMode::Union => nu.union(&nv).copied().collect(),
        LtsMode::Intersection => {
            let common: BTreeSet<usize> = nu.intersection(&nv).copied().collect();
            if common.is_empty() {
                nu.union(&nv).copied().collect()
            } else {
                common
            }
        }
    };
    set.insert(u);
    set.insert(v);
    set.into_iter().collect()
}

/// Superimposition swept image: pixelwise OR of the primary-view images of
/// [`lts_pose_set`]. The tag reflects the requested mode even when an empty
/// intersection fell back to the union construction.
pub fn lts_swept(vrm: &Vrm, u: usize, v: usize, mode: LtsMode) -> Result<SweptImage> {
    check_node(vrm, u)?;
    check_node(vrm, v)?;
    let mut image = primary_view(&vrm.node(u).record)?.clone();
    for id in lts_pose_set(vrm, u, v, mode) {
        image.or_assign(primary_view(&vrm.node(id).record)?)?;
    }
    Ok(SweptImage { kind: mode.kind(), image })
}

/// Edge check by neighbourhood superimposition.
pub fn lts_check(
    vrm: &Vrm,
    edge: (usize, usize),
    obstacle: &IntervalRle,
    mode: LtsMode,
) -> Result<EdgeVerdict> {
    let swept = lts_swept(vrm, edge.0, edge.1, mode)?;
    verdict_against(edge, &swept, obstacle)
}

/// Demonstration variant of the superimposition: fits a PCA basis of at most
/// `dims` components to the neighbourhood images, linearly interpolates the
/// endpoint projections in `steps` increments, reconstructs each intermediate
/// image and thresholds it at 0.5. Reconstructions live in the span of the
/// neighbourhood images, so the result never leaves the superimposition
/// support; the production check is [`lts_swept`].
pub fn lts_pca_swept(
    vrm: &Vrm,
    u: usize,
    v: usize,
    mode: LtsMode,
    dims: usize,
    steps: usize,
) -> Result<SweptImage> {
    check_node(vrm, u)?;
    check_node(vrm, v)?;
    if dims == 0 || steps == 0 {
        return Err(Error::Domain("PCA interpolation needs dims >= 1 and steps >= 1".into()));
    }
    let ids = lts_pose_set(vrm, u, v, mode);
    let mut image = primary_view(&vrm.node(u).record)?.clone();
    image.or_assign(primary_view(&vrm.node(v).record)?)?;
    if ids.len() < 2 {
        return Ok(SweptImage { kind: mode.kind(), image });
    }
    let (w, h) = (image.width(), image.height());
    let m = (w as usize) * (h as usize);
    let mut x = crate::linalg::Mat::<Real>::zeros(m, ids.len());
    for (c, &id) in ids.iter().enumerate() {
        let view = primary_view(&vrm.node(id).record)?;
        if view.width() != w || view.height() != h {
            return Err(Error::DimensionMismatch("neighbourhood images differ in size".into()));
        }
        for idx in view.iter_set() {
            x[(idx, c)] = 1.0;
        }
    }
    let p = dims.min(ids.len() - 1).max(1);
    let (model, embedding) = pca_fit(&x, p)?;
    let col = |id: usize| ids.binary_search(&id).expect("endpoint is in its own pose set");
    let y_u: Vec<Real> = (0..p).map(|r| embedding.points[(r, col(u))]).collect();
    let y_v: Vec<Real> = (0..p).map(|r| embedding.points[(r, col(v))]).collect();
    for s in 0..=steps {
        let t = s as Real / steps as Real;
        let y: Vec<Real> =
            y_u.iter().zip(&y_v).map(|(&a, &b)| a + (b - a) * t).collect();
        let recon = model.reconstruct(&y)?;
        for (idx, &val) in recon.iter().enumerate() {
            if val >= 0.5 {
                image.set((idx % w as usize) as u32, (idx / w as usize) as u32, true);
            }
        }
    }
    Ok(SweptImage { kind: mode.kind(), image })
}

/// Swept estimate from tracked points: OR of the endpoint primary views plus
/// a segment joining each tracked point of `u` to the corresponding point of
/// `v`.
pub fn itp_swept(u: &PoseRecord, v: &PoseRecord, thickness: u32) -> Result<SweptImage> {
    if u.tracked.len() != v.tracked.len() {
        return Err(Error::DimensionMismatch(format!(
            "tracked point counts differ: {} vs {}",
            u.tracked.len(),
            v.tracked.len()
        )));
    }
    let mut image = primary_view(u)?.clone();
    image.or_assign(primary_view(v)?)?;
    for (&a, &b) in u.tracked.iter().zip(&v.tracked) {
        draw_segment(&mut image, a, b, thickness)?;
    }
    Ok(SweptImage { kind: PlannerKind::Itp, image })
}

/// Edge check by corresponding tracked-point joins.
pub fn itp_check(
    edge: (usize, usize),
    u: &PoseRecord,
    v: &PoseRecord,
    obstacle: &IntervalRle,
    thickness: u32,
) -> Result<EdgeVerdict> {
    let swept = itp_swept(u, v, thickness)?;
    verdict_against(edge, &swept, obstacle)
}

fn nearest(points: &[Point2<Real>], from: Point2<Real>) -> Point2<Real> {
    let mut best = points[0];
    let mut best_d = from.dist_sq(best);
    for &p in &points[1..] {
        let d = from.dist_sq(p);
        if d < best_d {
            best_d = d;
            best = p;
        }
    }
    best
}

/// Swept estimate from detected features: for every link, each feature of `u`
/// is joined to the nearest feature on the same link of `v`, and symmetrically
/// from `v` back to `u`, on top of the OR of the endpoint primary views.
pub fn jnst_swept(u: &PoseRecord, v: &PoseRecord, thickness: u32) -> Result<SweptImage> {
    if u.features.len() != v.features.len() {
        return Err(Error::DimensionMismatch(format!(
            "per-link feature group counts differ: {} vs {}",
            u.features.len(),
            v.features.len()
        )));
    }
    if u.features.is_empty()
        || u.features.iter().any(Vec::is_empty)
        || v.features.iter().any(Vec::is_empty)
    {
        return Err(Error::DegenerateFeatures(
            "a link has no detected features; fall back to tracked-point joins".into(),
        ));
    }
    let mut image = primary_view(u)?.clone();
    image.or_assign(primary_view(v)?)?;
    for (fu, fv) in u.features.iter().zip(&v.features) {
        for &p in fu {
            draw_segment(&mut image, p, nearest(fv, p), thickness)?;
        }
        for &q in fv {
            draw_segment(&mut image, q, nearest(fu, q), thickness)?;
        }
    }
    Ok(SweptImage { kind: PlannerKind::Jnst, image })
}

/// Edge check by nearest-feature joins.
pub fn jnst_check(
    edge: (usize, usize),
    u: &PoseRecord,
    v: &PoseRecord,
    obstacle: &IntervalRle,
    thickness: u32,
) -> Result<EdgeVerdict> {
    let swept = jnst_swept(u, v, thickness)?;
    verdict_against(edge, &swept, obstacle)
}

/// Runs one image-space planner on a roadmap edge. `Jnst` falls back to
/// tracked-point joins when features are degenerate and to the union
/// superimposition if tracked counts mismatch too; the verdict's kind reports
/// the construction that actually ran. `None` trivially accepts. Gold
/// verdicts need the renderer state, so ask a [`GoldChecker`] instead.
pub fn planner_check(
    vrm: &Vrm,
    edge: (usize, usize),
    planner: PlannerKind,
    obstacle: &IntervalRle,
    thickness: u32,
) -> Result<EdgeVerdict> {
    check_node(vrm, edge.0)?;
    check_node(vrm, edge.1)?;
    let u = &vrm.node(edge.0).record;
    let v = &vrm.node(edge.1).record;
    match planner {
        PlannerKind::None => {
            Ok(EdgeVerdict { edge, kind: PlannerKind::None, safe: true, penetration: 0 })
        }
        PlannerKind::LtsIntersection => lts_check(vrm, edge, obstacle, LtsMode::Intersection),
        PlannerKind::LtsUnion => lts_check(vrm, edge, obstacle, LtsMode::Union),
        PlannerKind::Itp => itp_check(edge, u, v, obstacle, thickness),
        PlannerKind::Jnst => {
            match jnst_check(edge, u, v, obstacle, thickness) {
                Err(Error::DegenerateFeatures(_)) | Err(Error::DimensionMismatch(_)) => {}
                other => return other,
            }
            match itp_check(edge, u, v, obstacle, thickness) {
                Err(Error::DimensionMismatch(_)) => {}
                other => return other,
            }
            lts_check(vrm, edge, obstacle, LtsMode::Union)
        }
        PlannerKind::Gold => Err(Error::Domain(
            "gold verdicts need scene renders; use GoldChecker::check".into(),
        )),
    }
}

/// Ground-truth edge oracle: densely interpolates the joint path, renders
/// every configuration in every view, and requires each to be clear of the
/// obstacles in at least one view.
#[derive(Debug, Clone)]
pub struct GoldChecker<'a> {
    model: &'a RobotModel,
    canvas: Canvas,
    eps: Real,
    obstacle_views: Vec<BinaryImage>,
}

impl<'a> GoldChecker<'a> {
    /// `scenes` holds one scene per view, rendered under that view's
    /// transform (views may disagree, e.g. an occluder visible to one camera
    /// only).
    pub fn new(
        model: &'a RobotModel,
        scenes: &[Scene],
        canvas: &Canvas,
        eps: Real,
    ) -> Result<Self> {
        if !(eps > 0.0) {
            return Err(Error::Domain(format!("interpolation step must be positive, got {eps}")));
        }
        let obstacle_views = render_scene_views(scenes, canvas, &model.view_transforms)?;
        Ok(Self { model, canvas: *canvas, eps, obstacle_views })
    }

    pub fn eps(&self) -> Real {
        self.eps
    }

    pub fn obstacle_views(&self) -> &[BinaryImage] {
        &self.obstacle_views
    }

    /// Overlap of one rendered configuration: the smallest per-view
    /// intersection, which is zero exactly when some view is clear.
    fn config_penetration(&self, q: &JointVector) -> Result<u64> {
        let record = fk_render(self.model, q, &self.canvas)?;
        let mut min_pen = u64::MAX;
        for (view, obs) in record.views.iter().zip(&self.obstacle_views) {
            let pen = view.and_count(obs)?;
            if pen == 0 {
                return Ok(0);
            }
            min_pen = min_pen.min(pen);
        }
        Ok(min_pen)
    }

    pub fn config_free(&self, q: &JointVector) -> Result<bool> {
        Ok(self.config_penetration(q)? == 0)
    }

    /// Verdict over the whole interpolated path; `penetration` reports the
    /// first colliding configuration's overlap.
    pub fn check(
        &self,
        edge: (usize, usize),
        q_u: &JointVector,
        q_v: &JointVector,
    ) -> Result<EdgeVerdict> {
        for q in gold_interpolate(self.model, q_u, q_v, self.eps)? {
            let pen = self.config_penetration(&q)?;
            if pen > 0 {
                return Ok(EdgeVerdict {
                    edge,
                    kind: PlannerKind::Gold,
                    safe: false,
                    penetration: pen,
                });
            }
        }
        Ok(EdgeVerdict { edge, kind: PlannerKind::Gold, safe: true, penetration: 0 })
    }

    /// Union of the interpolated primary-view silhouettes, mostly for
    /// visualisation.
    pub fn swept(&self, q_u: &JointVector, q_v: &JointVector) -> Result<SweptImage> {
        let mut image = BinaryImage::new(self.canvas.width, self.canvas.height);
        for q in gold_interpolate(self.model, q_u, q_v, self.eps)? {
            let record = fk_render(self.model, &q, &self.canvas)?;
            image.or_assign(primary_view(&record)?)?;
        }
        Ok(SweptImage { kind: PlannerKind::Gold, image })
    }
}

/// One-shot gold verdict for an ad-hoc configuration pair.
pub fn gold_check(
    edge: (usize, usize),
    model: &RobotModel,
    q_u: &JointVector,
    q_v: &JointVector,
    eps: Real,
    scenes: &[Scene],
    canvas: &Canvas,
) -> Result<EdgeVerdict> {
    GoldChecker::new(model, scenes, canvas, eps)?.check(edge, q_u, q_v)
}

fn scoreable_edges(vrm: &Vrm) -> Vec<usize> {
    (0..vrm.base_edges().len())
        .filter(|&idx| {
            let (u, v, _) = vrm.base_edges()[idx];
            vrm.edge_active(idx)
                && vrm.status(u) == NodeStatus::Free
                && vrm.status(v) == NodeStatus::Free
        })
        .collect()
}

/// Gold verdicts for every currently scoreable base edge, indexed like
/// `vrm.base_edges()`; masked or pruned edges get `None`. Computing this once
/// lets several planner sweeps share the expensive oracle.
pub fn gold_base_verdicts(vrm: &Vrm, gold: &GoldChecker) -> Result<Vec<Option<bool>>> {
    let mut out = vec![None; vrm.base_edges().len()];
    let verdicts: Vec<(usize, bool)> = scoreable_edges(vrm)
        .into_par_iter()
        .map(|idx| {
            let (u, v, _) = vrm.base_edges()[idx];
            let verdict =
                gold.check((u, v), &vrm.node(u).record.config, &vrm.node(v).record.config)?;
            Ok((idx, verdict.safe))
        })
        .collect::<Result<_>>()?;
    for (idx, safe) in verdicts {
        out[idx] = Some(safe);
    }
    Ok(out)
}

/// Outcome of one pruning pass, with the bookkeeping needed to score the
/// planner against the gold oracle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PruneStats {
    pub metric: String,
    pub planner: String,
    /// Permanent roadmap nodes.
    pub n: usize,
    /// Neighbours per node at construction.
    pub k: usize,
    /// Edges eligible for this pass: active, both endpoints free.
    pub edges_total: usize,
    /// Edges this pass pruned.
    pub edges_pruned: usize,
    /// Surviving edges the gold oracle calls unsafe.
    pub bad_remaining: usize,
    /// Pruned edges the gold oracle calls safe.
    pub conservative_discards: usize,
}

impl PruneStats {
    pub fn remaining(&self) -> usize {
        self.edges_total - self.edges_pruned
    }

    /// Percentage of surviving edges that are actually unsafe.
    pub fn bad_remaining_pct(&self) -> Real {
        let remaining = self.remaining();
        if remaining == 0 {
            0.0
        } else {
            100.0 * self.bad_remaining as Real / remaining as Real
        }
    }

    /// Unsafe fraction across all eligible edges, the other denominator
    /// reading of the remaining-bad statistic.
    pub fn bad_total_pct(&self) -> Real {
        if self.edges_total == 0 {
            0.0
        } else {
            100.0 * self.bad_remaining as Real / self.edges_total as Real
        }
    }

    pub fn csv_header() -> &'static str {
        "metric,planner,n,k,edges_total,edges_pruned,bad_remaining_pct,conservative_discards"
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.metric,
            self.planner,
            self.n,
            self.k,
            self.edges_total,
            self.edges_pruned,
            self.bad_remaining_pct(),
            self.conservative_discards
        )
    }
}

/// Prunes every active free-free base edge the planner flags unsafe and
/// returns the pruned count. No oracle runs, so this is the cheap path for
/// roadmap construction; use [`prune_and_score`] when quality accounting
/// against the gold standard is wanted. `PlannerKind::Gold` needs its
/// checker; `PlannerKind::None` prunes nothing.
pub fn prune_unsafe_edges(
    vrm: &mut Vrm,
    planner: PlannerKind,
    obstacle: &IntervalRle,
    gold: Option<&GoldChecker>,
    thickness: u32,
) -> Result<usize> {
    if planner == PlannerKind::None {
        return Ok(0);
    }
    let scored = scoreable_edges(vrm);
    let snapshot: &Vrm = vrm;
    let safe: Vec<bool> = scored
        .par_iter()
        .map(|&idx| {
            let (u, v, _) = snapshot.base_edges()[idx];
            if planner == PlannerKind::Gold {
                let gold = gold
                    .ok_or_else(|| Error::Domain("gold pruning needs a gold checker".into()))?;
                let record_u = &snapshot.node(u).record;
                let record_v = &snapshot.node(v).record;
                Ok(gold.check((u, v), &record_u.config, &record_v.config)?.safe)
            } else {
                Ok(planner_check(snapshot, (u, v), planner, obstacle, thickness)?.safe)
            }
        })
        .collect::<Result<_>>()?;
    let mut pruned = 0;
    for (&idx, &ok) in scored.iter().zip(&safe) {
        if !ok {
            vrm.prune_edge(idx);
            pruned += 1;
        }
    }
    Ok(pruned)
}

/// Scores every eligible edge with `planner`, prunes the unsafe ones in a
/// single exclusive pass, and grades the outcome against the gold oracle.
/// Verdicts are computed against the pre-pass state, so any scheduling of the
/// per-edge checks gives identical prunes. `gold_cache`, when supplied, must
/// be indexed like `vrm.base_edges()` (see [`gold_base_verdicts`]); missing
/// entries are computed on demand.
pub fn prune_and_score(
    vrm: &mut Vrm,
    planner: PlannerKind,
    obstacle: &IntervalRle,
    gold: &GoldChecker,
    gold_cache: Option<&[Option<bool>]>,
    thickness: u32,
) -> Result<PruneStats> {
    if let Some(cache) = gold_cache {
        if cache.len() != vrm.base_edges().len() {
            return Err(Error::DimensionMismatch(format!(
                "gold cache covers {} edges, roadmap has {}",
                cache.len(),
                vrm.base_edges().len()
            )));
        }
    }
    let scored = scoreable_edges(vrm);
    let snapshot: &Vrm = vrm;
    let gold_safe: Vec<bool> = scored
        .par_iter()
        .map(|&idx| {
            if let Some(Some(safe)) = gold_cache.map(|c| c[idx]) {
                return Ok(safe);
            }
            let (u, v, _) = snapshot.base_edges()[idx];
            let record_u = &snapshot.node(u).record;
            let record_v = &snapshot.node(v).record;
            Ok(gold.check((u, v), &record_u.config, &record_v.config)?.safe)
        })
        .collect::<Result<_>>()?;
    let planner_safe: Vec<bool> = match planner {
        PlannerKind::None => vec![true; scored.len()],
        PlannerKind::Gold => gold_safe.clone(),
        _ => scored
            .par_iter()
            .map(|&idx| {
                let (u, v, _) = snapshot.base_edges()[idx];
                Ok(planner_check(snapshot, (u, v), planner, obstacle, thickness)?.safe)
            })
            .collect::<Result<_>>()?,
    };

    let mut stats = PruneStats {
        metric: vrm.metric().kind().name(),
        planner: planner.name().to_string(),
        n: vrm.permanent_count(),
        k: vrm.k(),
        edges_total: scored.len(),
        edges_pruned: 0,
        bad_remaining: 0,
        conservative_discards: 0,
    };
    for (pos, &idx) in scored.iter().enumerate() {
        if !planner_safe[pos] {
            vrm.prune_edge(idx);
            stats.edges_pruned += 1;
            if gold_safe[pos] {
                stats.conservative_discards += 1;
            }
        } else if !gold_safe[pos] {
            stats.bad_remaining += 1;
        }
    }
    Ok(stats)
}
