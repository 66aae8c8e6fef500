//! Planar robots, scenes and the rasteriser that turns configurations into
//! binary pose images.
//!
//! Rasterisation convention: pixel `(x, y)` is set when the lattice point
//! `(x as f64, y as f64)` lies inside the shape. Capsules (robot links) use an
//! inclusive distance test against their axis segment, discs a strict one,
//! and axis-aligned rectangles are half-open `[x0, x1) x [y0, y1)`, so a
//! rectangle with integer bounds covers exactly `(x1-x0)*(y1-y0)` pixels.

use crate::error::{Error, Result};
use crate::geom::{convex_polygon_contains, Point2, ViewTransform};
use crate::image::{BinaryImage, GrayImage};
use crate::Real;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::path::Path;

pub const TWO_PI: Real = 2.0 * PI;
const FULL_CIRCLE_EPS: Real = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Canvas {
    pub width: u32,
    pub height: u32,
}

impl Default for Canvas {
    fn default() -> Self {
        Canvas { width: 100, height: 100 }
    }
}

impl Canvas {
    pub fn new(width: u32, height: u32) -> Self {
        Canvas { width, height }
    }
}

/// A configuration: joint angles in radians for an arm, a pixel position for
/// a mobile disc.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct JointVector(pub Vec<Real>);

impl JointVector {
    pub fn new(values: Vec<Real>) -> Self {
        JointVector(values)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Real] {
        &self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RobotKind {
    ArticulatedArm,
    MobileDisc,
}

/// Planar robot description. For arms, `joint_limits` are radians with
/// `hi - lo <= 2*pi` (a full-circle joint wraps); for mobile discs they are
/// the pixel ranges of the centre coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotModel {
    pub kind: RobotKind,
    pub link_lengths: Vec<Real>,
    pub link_widths: Vec<Real>,
    pub joint_limits: Vec<(Real, Real)>,
    pub base: Point2<Real>,
    pub disc_radius: Real,
    /// One rigid camera transform per rendered view.
    pub view_transforms: Vec<ViewTransform>,
    /// Optional marker rectangle `(min, max)` kept as model metadata.
    pub mouth_region: Option<(Point2<Real>, Point2<Real>)>,
}

impl RobotModel {
    /// Arm with full-circle joints and the default 4 px link width.
    pub fn arm(base: Point2<Real>, link_lengths: Vec<Real>) -> Self {
        let n = link_lengths.len();
        RobotModel {
            kind: RobotKind::ArticulatedArm,
            link_widths: vec![4.0; n],
            joint_limits: vec![(0.0, TWO_PI); n],
            link_lengths,
            base,
            disc_radius: 0.0,
            view_transforms: vec![ViewTransform::identity()],
            mouth_region: None,
        }
    }

    pub fn disc(radius: Real, x_range: (Real, Real), y_range: (Real, Real)) -> Self {
        RobotModel {
            kind: RobotKind::MobileDisc,
            link_lengths: Vec::new(),
            link_widths: Vec::new(),
            joint_limits: vec![x_range, y_range],
            base: Point2::new(0.0, 0.0),
            disc_radius: radius,
            view_transforms: vec![ViewTransform::identity()],
            mouth_region: None,
        }
    }

    pub fn dof(&self) -> usize {
        match self.kind {
            RobotKind::ArticulatedArm => self.link_lengths.len(),
            RobotKind::MobileDisc => 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.view_transforms.is_empty() {
            return Err(Error::InvalidModel("at least one view is required".into()));
        }
        match self.kind {
            RobotKind::ArticulatedArm => {
                let n = self.link_lengths.len();
                if n == 0 {
                    return Err(Error::InvalidModel("arm needs at least one link".into()));
                }
                if self.link_widths.len() != n || self.joint_limits.len() != n {
                    return Err(Error::InvalidModel(
                        "link_lengths, link_widths and joint_limits must agree in length".into(),
                    ));
                }
                if self.link_lengths.iter().any(|&l| !(l > 0.0)) {
                    return Err(Error::InvalidModel("link lengths must be positive".into()));
                }
                if self.link_widths.iter().any(|&w| !(w >= 1.0)) {
                    return Err(Error::InvalidModel("link widths must be at least 1 px".into()));
                }
                for &(lo, hi) in &self.joint_limits {
                    if !(lo < hi) {
                        return Err(Error::InvalidModel(format!(
                            "joint limits must satisfy lo < hi, got [{lo}, {hi}]"
                        )));
                    }
                    if hi - lo > TWO_PI + FULL_CIRCLE_EPS {
                        return Err(Error::InvalidModel(format!(
                            "joint range [{lo}, {hi}] exceeds a full circle"
                        )));
                    }
                }
            }
            RobotKind::MobileDisc => {
                if !(self.disc_radius >= 1.0) {
                    return Err(Error::InvalidModel("disc radius must be at least 1 px".into()));
                }
                if self.joint_limits.len() != 2 {
                    return Err(Error::InvalidModel(
                        "mobile disc needs x and y position limits".into(),
                    ));
                }
                for &(lo, hi) in &self.joint_limits {
                    if !(lo < hi) {
                        return Err(Error::InvalidModel(format!(
                            "position limits must satisfy lo < hi, got [{lo}, {hi}]"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// True for joints free to rotate through a full circle (their two limit
    /// angles are identified).
    pub fn joint_wraps(&self, j: usize) -> bool {
        matches!(self.kind, RobotKind::ArticulatedArm)
            && self.joint_limits[j].1 - self.joint_limits[j].0 >= TWO_PI - FULL_CIRCLE_EPS
    }

    pub fn validate_config(&self, q: &JointVector) -> Result<()> {
        if q.len() != self.dof() {
            return Err(Error::InvalidConfig(format!(
                "expected {} joint values, got {}",
                self.dof(),
                q.len()
            )));
        }
        let limits: &[(Real, Real)] = &self.joint_limits;
        for (j, (&v, &(lo, hi))) in q.as_slice().iter().zip(limits).enumerate() {
            if !v.is_finite() || v < lo || v > hi {
                return Err(Error::InvalidConfig(format!(
                    "joint {j} value {v} outside [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    /// Conservative containment check: the disc of radius `reach` around the
    /// base (or the position box plus the disc radius) must fit the canvas.
    pub fn validate_canvas(&self, canvas: &Canvas) -> Result<()> {
        let (w, h) = (canvas.width as Real - 1.0, canvas.height as Real - 1.0);
        match self.kind {
            RobotKind::ArticulatedArm => {
                let reach: Real = self.link_lengths.iter().sum::<Real>()
                    + self.link_widths.iter().cloned().fold(0.0, Real::max) / 2.0;
                let ok = self.base.x - reach >= 0.0
                    && self.base.y - reach >= 0.0
                    && self.base.x + reach <= w
                    && self.base.y + reach <= h;
                if !ok {
                    return Err(Error::InvalidModel(format!(
                        "canvas {}x{} cannot contain the arm's reach {reach:.1} around \
                         ({}, {})",
                        canvas.width, canvas.height, self.base.x, self.base.y
                    )));
                }
            }
            RobotKind::MobileDisc => {
                let (xr, yr) = (self.joint_limits[0], self.joint_limits[1]);
                let r = self.disc_radius;
                let ok = xr.0 - r >= 0.0 && xr.1 + r <= w && yr.0 - r >= 0.0 && yr.1 + r <= h;
                if !ok {
                    return Err(Error::InvalidModel(format!(
                        "canvas {}x{} cannot contain the disc over its position box",
                        canvas.width, canvas.height
                    )));
                }
            }
        }
        Ok(())
    }

    /// Skeleton in world coordinates: base, each joint, tip for arms; the
    /// centre for a disc.
    pub fn skeleton(&self, q: &JointVector) -> Vec<Point2<Real>> {
        match self.kind {
            RobotKind::ArticulatedArm => {
                let mut pts = Vec::with_capacity(self.link_lengths.len() + 1);
                let mut p = self.base;
                let mut heading = 0.0;
                pts.push(p);
                for (len, &theta) in self.link_lengths.iter().zip(q.as_slice()) {
                    heading += theta;
                    p = Point2::new(p.x + len * heading.cos(), p.y + len * heading.sin());
                    pts.push(p);
                }
                pts
            }
            RobotKind::MobileDisc => vec![Point2::new(q.0[0], q.0[1])],
        }
    }

    /// Wraps each full-circle joint into its limit interval; other values are
    /// returned unchanged.
    pub fn wrap_config(&self, mut q: JointVector) -> JointVector {
        for j in 0..q.len().min(self.joint_limits.len()) {
            if self.joint_wraps(j) {
                let lo = self.joint_limits[j].0;
                q.0[j] = lo + (q.0[j] - lo).rem_euclid(TWO_PI);
            }
        }
        q
    }
}

/// A rendered pose: per-view masks, per-link masks in the primary view, ideal
/// tracked points, and (once attached) per-link corner features.
#[derive(Debug, Clone)]
pub struct PoseRecord {
    pub config: JointVector,
    pub views: Vec<BinaryImage>,
    pub link_masks: Vec<BinaryImage>,
    pub tracked: Vec<Point2<Real>>,
    /// Per-link feature points; empty until a feature extractor fills it.
    pub features: Vec<Vec<Point2<Real>>>,
}

impl PoseRecord {
    /// Fixed tracked-point count for a model: base, joints and tip plus link
    /// midpoints for arms; centre plus four rim points for a disc.
    pub fn tracked_count(model: &RobotModel) -> usize {
        match model.kind {
            RobotKind::ArticulatedArm => 2 * model.link_lengths.len() + 1,
            RobotKind::MobileDisc => 5,
        }
    }
}

fn rasterize_capsule(img: &mut BinaryImage, a: Point2<Real>, b: Point2<Real>, width: Real) {
    let r = width / 2.0;
    let r_sq = r * r;
    let x_min = (a.x.min(b.x) - r).floor().max(0.0) as u32;
    let x_max = (a.x.max(b.x) + r).ceil().min(img.width() as Real - 1.0) as u32;
    let y_min = (a.y.min(b.y) - r).floor().max(0.0) as u32;
    let y_max = (a.y.max(b.y) + r).ceil().min(img.height() as Real - 1.0) as u32;
    for y in y_min..=y_max {
        for x in x_min..=x_max {
            let p = Point2::new(x as Real, y as Real);
            if crate::geom::point_segment_dist_sq(p, a, b) <= r_sq {
                img.set(x, y, true);
            }
        }
    }
}

fn rasterize_disc(img: &mut BinaryImage, c: Point2<Real>, radius: Real) {
    let r_sq = radius * radius;
    let x_min = (c.x - radius).floor().max(0.0) as u32;
    let x_max = (c.x + radius).ceil().min(img.width() as Real - 1.0) as u32;
    let y_min = (c.y - radius).floor().max(0.0) as u32;
    let y_max = (c.y + radius).ceil().min(img.height() as Real - 1.0) as u32;
    for y in y_min..=y_max {
        for x in x_min..=x_max {
            if c.dist_sq(Point2::new(x as Real, y as Real)) < r_sq {
                img.set(x, y, true);
            }
        }
    }
}

/// Renders a configuration into a [`PoseRecord`]. The union of `link_masks`
/// equals the primary view bit for bit; tracked points are listed base,
/// joints, tip, then link midpoints.
pub fn fk_render(model: &RobotModel, q: &JointVector, canvas: &Canvas) -> Result<PoseRecord> {
    model.validate()?;
    model.validate_canvas(canvas)?;
    model.validate_config(q)?;
    let world_skel = model.skeleton(q);

    let mut views = Vec::with_capacity(model.view_transforms.len());
    let mut link_masks = Vec::new();
    for (vi, vt) in model.view_transforms.iter().enumerate() {
        let skel: Vec<Point2<Real>> = world_skel.iter().map(|&p| vt.apply(p)).collect();
        let mut view = BinaryImage::new(canvas.width, canvas.height);
        match model.kind {
            RobotKind::ArticulatedArm => {
                for (i, w) in model.link_widths.iter().enumerate() {
                    let mut mask = BinaryImage::new(canvas.width, canvas.height);
                    rasterize_capsule(&mut mask, skel[i], skel[i + 1], *w);
                    view.or_assign(&mask)?;
                    if vi == 0 {
                        link_masks.push(mask);
                    }
                }
            }
            RobotKind::MobileDisc => {
                let mut mask = BinaryImage::new(canvas.width, canvas.height);
                rasterize_disc(&mut mask, skel[0], model.disc_radius);
                view.or_assign(&mask)?;
                if vi == 0 {
                    link_masks.push(mask);
                }
            }
        }
        views.push(view);
    }

    let primary: Vec<Point2<Real>> =
        world_skel.iter().map(|&p| model.view_transforms[0].apply(p)).collect();
    let tracked = match model.kind {
        RobotKind::ArticulatedArm => {
            let mut t = primary.clone();
            for i in 0..model.link_lengths.len() {
                t.push(Point2::new(
                    (primary[i].x + primary[i + 1].x) / 2.0,
                    (primary[i].y + primary[i + 1].y) / 2.0,
                ));
            }
            t
        }
        RobotKind::MobileDisc => {
            let c = primary[0];
            let r = model.disc_radius / 2.0;
            vec![
                c,
                Point2::new(c.x + r, c.y),
                Point2::new(c.x - r, c.y),
                Point2::new(c.x, c.y + r),
                Point2::new(c.x, c.y - r),
            ]
        }
    };

    Ok(PoseRecord { config: q.clone(), views, link_masks, tracked, features: Vec::new() })
}

/// Obstacle shapes with pixel geometry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Shape {
    Rect { x0: Real, y0: Real, x1: Real, y1: Real },
    Disc { cx: Real, cy: Real, r: Real },
    ConvexPolygon { points: Vec<(Real, Real)> },
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Scene {
    pub obstacles: Vec<Shape>,
}

impl Scene {
    pub fn validate(&self, canvas: &Canvas) -> Result<()> {
        let (w, h) = (canvas.width as Real, canvas.height as Real);
        for (i, shape) in self.obstacles.iter().enumerate() {
            let ok = match shape {
                Shape::Rect { x0, y0, x1, y1 } => {
                    x0 < x1 && y0 < y1 && *x0 >= 0.0 && *y0 >= 0.0 && *x1 <= w && *y1 <= h
                }
                Shape::Disc { cx, cy, r } => {
                    *r > 0.0 && cx - r >= 0.0 && cy - r >= 0.0 && cx + r <= w && cy + r <= h
                }
                Shape::ConvexPolygon { points } => {
                    points.len() >= 3
                        && points.iter().all(|&(x, y)| {
                            x >= 0.0 && y >= 0.0 && x <= w && y <= h
                        })
                }
            };
            if !ok {
                return Err(Error::InvalidModel(format!(
                    "obstacle {i} is degenerate or exceeds the {w}x{h} canvas"
                )));
            }
        }
        Ok(())
    }
}

/// Rasterises a scene under one view transform.
pub fn render_obstacles(scene: &Scene, canvas: &Canvas, view: &ViewTransform) -> Result<BinaryImage> {
    scene.validate(canvas)?;
    let mut img = BinaryImage::new(canvas.width, canvas.height);
    for shape in &scene.obstacles {
        match shape {
            Shape::Rect { x0, y0, x1, y1 } => {
                if view.is_identity() {
                    for y in 0..canvas.height {
                        let fy = y as Real;
                        if fy < *y0 || fy >= *y1 {
                            continue;
                        }
                        for x in 0..canvas.width {
                            let fx = x as Real;
                            if fx >= *x0 && fx < *x1 {
                                img.set(x, y, true);
                            }
                        }
                    }
                } else {
                    let corners = [
                        view.apply(Point2::new(*x0, *y0)),
                        view.apply(Point2::new(*x1, *y0)),
                        view.apply(Point2::new(*x1, *y1)),
                        view.apply(Point2::new(*x0, *y1)),
                    ];
                    rasterize_polygon(&mut img, &corners);
                }
            }
            Shape::Disc { cx, cy, r } => {
                let c = view.apply(Point2::new(*cx, *cy));
                rasterize_disc(&mut img, c, *r);
            }
            Shape::ConvexPolygon { points } => {
                let verts: Vec<Point2<Real>> =
                    points.iter().map(|&(x, y)| view.apply(Point2::new(x, y))).collect();
                rasterize_polygon(&mut img, &verts);
            }
        }
    }
    Ok(img)
}

fn rasterize_polygon(img: &mut BinaryImage, verts: &[Point2<Real>]) {
    let x_min = verts.iter().map(|p| p.x).fold(Real::MAX, Real::min).floor().max(0.0) as u32;
    let y_min = verts.iter().map(|p| p.y).fold(Real::MAX, Real::min).floor().max(0.0) as u32;
    let x_max = verts
        .iter()
        .map(|p| p.x)
        .fold(Real::MIN, Real::max)
        .ceil()
        .min(img.width() as Real - 1.0) as u32;
    let y_max = verts
        .iter()
        .map(|p| p.y)
        .fold(Real::MIN, Real::max)
        .ceil()
        .min(img.height() as Real - 1.0) as u32;
    for y in y_min..=y_max {
        for x in x_min..=x_max {
            if convex_polygon_contains(verts, Point2::new(x as Real, y as Real)) {
                img.set(x, y, true);
            }
        }
    }
}

/// Renders per-view obstacle images for a list of per-view scenes.
pub fn render_scene_views(
    scenes: &[Scene],
    canvas: &Canvas,
    transforms: &[ViewTransform],
) -> Result<Vec<BinaryImage>> {
    if scenes.len() != transforms.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} scenes for {} views",
            scenes.len(),
            transforms.len()
        )));
    }
    scenes
        .iter()
        .zip(transforms)
        .map(|(s, t)| render_obstacles(s, canvas, t))
        .collect()
}

/// Uniform configuration samples over the joint-limit box.
pub fn sample_configs(model: &RobotModel, n: usize, seed: u64) -> Result<Vec<JointVector>> {
    model.validate()?;
    if n == 0 {
        return Err(Error::Domain("requested zero configuration samples".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let limits: &[(Real, Real)] = &self_limits(model);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let q = limits.iter().map(|&(lo, hi)| rng.gen_range(lo..hi)).collect();
        out.push(JointVector(q));
    }
    Ok(out)
}

fn self_limits(model: &RobotModel) -> Vec<(Real, Real)> {
    model.joint_limits.clone()
}

/// True when two non-adjacent link masks overlap, or two adjacent ones
/// overlap beyond a disc of the larger link width centred on their shared
/// joint. Mobile discs never self-intersect.
pub fn self_intersects(model: &RobotModel, record: &PoseRecord) -> bool {
    if !matches!(model.kind, RobotKind::ArticulatedArm) || record.link_masks.len() < 2 {
        return false;
    }
    let rles: Vec<_> = record.link_masks.iter().map(crate::rle::IntervalRle::encode).collect();
    let n = rles.len();
    for i in 0..n {
        for j in i + 2..n {
            if rles[i].collide(&rles[j]).unwrap_or(false) {
                return true;
            }
        }
    }
    let skel = model.skeleton(&record.config);
    let vt = &model.view_transforms[0];
    for i in 0..n - 1 {
        let joint = vt.apply(skel[i + 1]);
        let radius = model.link_widths[i].max(model.link_widths[i + 1]);
        let a = erase_disc(&record.link_masks[i], joint, radius);
        let b = erase_disc(&record.link_masks[i + 1], joint, radius);
        if crate::rle::IntervalRle::encode(&a)
            .collide(&crate::rle::IntervalRle::encode(&b))
            .unwrap_or(false)
        {
            return true;
        }
    }
    false
}

fn erase_disc(mask: &BinaryImage, c: Point2<Real>, radius: Real) -> BinaryImage {
    let mut out = mask.clone();
    let r_sq = radius * radius;
    let x_min = (c.x - radius).floor().max(0.0) as u32;
    let x_max = (c.x + radius).ceil().min(mask.width() as Real - 1.0) as u32;
    let y_min = (c.y - radius).floor().max(0.0) as u32;
    let y_max = (c.y + radius).ceil().min(mask.height() as Real - 1.0) as u32;
    for y in y_min..=y_max {
        for x in x_min..=x_max {
            if c.dist_sq(Point2::new(x as Real, y as Real)) <= r_sq {
                out.set(x, y, false);
            }
        }
    }
    out
}

/// Configurations along the per-joint shortest path from `q_u` to `q_v`,
/// taking the short way around the circle for full-circle joints, with at
/// most `eps` change per joint per step. Both endpoints are included; equal
/// endpoints yield a single configuration.
pub fn gold_interpolate(
    model: &RobotModel,
    q_u: &JointVector,
    q_v: &JointVector,
    eps: Real,
) -> Result<Vec<JointVector>> {
    model.validate_config(q_u)?;
    model.validate_config(q_v)?;
    if !(eps > 0.0) {
        return Err(Error::Domain(format!("interpolation step must be positive, got {eps}")));
    }
    let deltas: Vec<Real> = q_u
        .as_slice()
        .iter()
        .zip(q_v.as_slice())
        .enumerate()
        .map(|(j, (&a, &b))| {
            let d = b - a;
            if model.joint_wraps(j) {
                // Shortest signed arc in (-pi, pi].
                let mut w = (d + PI).rem_euclid(TWO_PI) - PI;
                if w <= -PI {
                    w += TWO_PI;
                }
                w
            } else {
                d
            }
        })
        .collect();
    let max_step = deltas.iter().map(|d| d.abs()).fold(0.0, Real::max);
    if max_step == 0.0 {
        return Ok(vec![q_u.clone()]);
    }
    // Guard against ratios like 20.000000000000004 rounding up a whole step.
    let steps = (((max_step / eps) - 1e-9).ceil() as usize).max(1);
    let mut out = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        if i == steps {
            out.push(q_v.clone());
            continue;
        }
        let t = i as Real / steps as Real;
        let q = q_u
            .as_slice()
            .iter()
            .zip(&deltas)
            .map(|(&a, &d)| a + d * t)
            .collect();
        out.push(model.wrap_config(JointVector(q)));
    }
    Ok(out)
}

/// Grayscale composite: obstacles at mid gray under the robot at full white.
pub fn compose_frame(robot: &BinaryImage, obstacles: &BinaryImage) -> Result<GrayImage> {
    let mut g = GrayImage::new(robot.width(), robot.height());
    g.stamp_max(obstacles, 128)?;
    g.stamp_max(robot, 255)?;
    Ok(g)
}

/// Dataset manifest entry: one rendered pose.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestPose {
    pub index: usize,
    pub config: JointVector,
    pub tracked: Vec<(Real, Real)>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub canvas: Canvas,
    pub views: usize,
    pub count: usize,
    pub poses: Vec<ManifestPose>,
}

/// Writes one PBM per view per pose (`pose_00042_v0.pbm`) plus
/// `manifest.json` mapping index to configuration and tracked points.
pub fn save_dataset(dir: &Path, records: &[PoseRecord], canvas: &Canvas) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut poses = Vec::with_capacity(records.len());
    for (i, rec) in records.iter().enumerate() {
        for (v, view) in rec.views.iter().enumerate() {
            let name = format!("pose_{i:05}_v{v}.pbm");
            std::fs::write(dir.join(name), view.to_pbm())?;
        }
        poses.push(ManifestPose {
            index: i,
            config: rec.config.clone(),
            tracked: rec.tracked.iter().map(|p| (p.x, p.y)).collect(),
        });
    }
    let manifest = DatasetManifest {
        canvas: *canvas,
        views: records.first().map_or(0, |r| r.views.len()),
        count: records.len(),
        poses,
    };
    let json = serde_json::to_vec_pretty(&manifest)?;
    std::fs::write(dir.join("manifest.json"), json)?;
    Ok(())
}

pub fn load_manifest(dir: &Path) -> Result<DatasetManifest> {
    let data = std::fs::read(dir.join("manifest.json"))?;
    Ok(serde_json::from_slice(&data)?)
}
