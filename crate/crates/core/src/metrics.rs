//! Pose-to-pose distances.
//!
//! All of these see a pose only through its rendered record: raw pixels
//! (`img-l2`), a seeded Gaussian random projection of those pixels (`rp-l2`),
//! joint angles on the circle (`theta-g`), ideal tracked points (`itp-l2`),
//! per-link corner features under summed Hausdorff distance (`st-h`), or a
//! weighted mix of image, last-link and angle terms (`combined:a,b,g`).
//! Distances are always finite, non-negative and symmetric; the L2 family is
//! metric, `theta-g` is the geodesic on the joint torus.

use crate::error::{Error, Result};
use crate::geom::Point2;
use crate::image::BinaryImage;
use crate::simworld::PoseRecord;
use crate::{Real, Scalar};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

/// Euclidean distance between equal-length coordinate vectors.
pub fn l2<S: Scalar>(a: &[S], b: &[S]) -> Result<S> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "vectors of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    let sum = a
        .iter()
        .zip(b)
        .map(|(&x, &y)| (x - y) * (x - y))
        .fold(S::zero(), |acc, d| acc + d);
    Ok(sum.sqrt())
}

/// Image distance: L2 over the concatenated 0/1 pixels of all views, which
/// for binary masks is the square root of the total differing-pixel count.
pub fn image_l2(a: &PoseRecord, b: &PoseRecord) -> Result<Real> {
    if a.views.len() != b.views.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} views vs {}",
            a.views.len(),
            b.views.len()
        )));
    }
    let mut differing = 0u64;
    for (va, vb) in a.views.iter().zip(&b.views) {
        differing += va.hamming(vb)?;
    }
    Ok((differing as Real).sqrt())
}

/// Sum over joints of the shorter way around the circle.
pub fn angle_geodesic(a: &[Real], b: &[Real]) -> Result<Real> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "configurations of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = (x - y).abs() % (2.0 * PI);
            d.min(2.0 * PI - d)
        })
        .sum())
}

/// L2 over the flattened ideal tracked points.
pub fn itp_l2(a: &PoseRecord, b: &PoseRecord) -> Result<Real> {
    if a.tracked.len() != b.tracked.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} tracked points vs {}",
            a.tracked.len(),
            b.tracked.len()
        )));
    }
    let sum: Real = a
        .tracked
        .iter()
        .zip(&b.tracked)
        .map(|(p, q)| p.dist_sq(*q))
        .sum();
    Ok(sum.sqrt())
}

/// Symmetric Hausdorff distance between two non-empty point sets.
pub fn hausdorff<S: Scalar>(a: &[Point2<S>], b: &[Point2<S>]) -> Result<S> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Domain("hausdorff distance needs non-empty sets".into()));
    }
    let directed = |from: &[Point2<S>], to: &[Point2<S>]| {
        from.iter()
            .map(|p| to.iter().map(|q| p.dist_sq(*q)).fold(S::infinity(), S::min))
            .fold(S::zero(), S::max)
    };
    Ok(directed(a, b).max(directed(b, a)).sqrt())
}

/// Sum of per-link Hausdorff distances between corner feature sets.
pub fn linkwise_hausdorff(a: &PoseRecord, b: &PoseRecord) -> Result<Real> {
    if a.features.len() != b.features.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} feature links vs {}",
            a.features.len(),
            b.features.len()
        )));
    }
    if a.features.is_empty() {
        return Err(Error::DegenerateFeatures("records carry no feature links".into()));
    }
    let mut sum = 0.0;
    for (l, (fa, fb)) in a.features.iter().zip(&b.features).enumerate() {
        if fa.is_empty() || fb.is_empty() {
            return Err(Error::DegenerateFeatures(format!("link {l} has no features")));
        }
        sum += hausdorff(fa, fb)?;
    }
    Ok(sum)
}

/// Weighted sum of a full-image term, a last-link ("hand") term and an angle
/// term. Weights must be non-negative and not all zero.
pub fn combined(
    weights: (Real, Real, Real),
    d_full: Real,
    d_hand: Real,
    d_angle: Real,
) -> Result<Real> {
    let (alpha, beta, gamma) = weights;
    if !(alpha >= 0.0 && beta >= 0.0 && gamma >= 0.0) || alpha + beta + gamma == 0.0 {
        return Err(Error::Domain(format!(
            "combined weights must be non-negative and not all zero, got \
             ({alpha}, {beta}, {gamma})"
        )));
    }
    Ok(alpha * d_full + beta * d_hand + gamma * d_angle)
}

fn last_link_l2(a: &PoseRecord, b: &PoseRecord) -> Result<Real> {
    let (la, lb) = match (a.link_masks.last(), b.link_masks.last()) {
        (Some(x), Some(y)) => (x, y),
        _ => return Err(Error::Domain("records carry no link masks".into())),
    };
    Ok((la.hamming(lb)? as Real).sqrt())
}

/// Seeded Gaussian random projection. Each of the `d_out` rows is an
/// independent standard-normal vector normalised to unit length and scaled by
/// `sqrt(d_in / d_out)`, which makes projected distances unbiased estimates
/// of the original ones. The projector is reproducible from
/// `(d_in, d_out, seed)` alone.
#[derive(Debug, Clone)]
pub struct RandomProjector {
    d_in: usize,
    d_out: usize,
    seed: u64,
    rows: Vec<Real>,
}

/// Persisted form: the generating parameters, not the matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectorSpec {
    pub d_in: usize,
    pub d_out: usize,
    pub seed: u64,
}

impl RandomProjector {
    pub fn new(d_in: usize, d_out: usize, seed: u64) -> Result<Self> {
        if d_in == 0 || d_out == 0 {
            return Err(Error::Domain("projector dimensions must be positive".into()));
        }
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let scale = (d_in as Real / d_out as Real).sqrt();
        let mut rows = Vec::with_capacity(d_in * d_out);
        for _ in 0..d_out {
            let start = rows.len();
            let mut norm_sq = 0.0;
            for _ in 0..d_in {
                let g: Real = StandardNormal.sample(&mut rng);
                norm_sq += g * g;
                rows.push(g);
            }
            let f = scale / norm_sq.sqrt();
            for v in &mut rows[start..] {
                *v *= f;
            }
        }
        Ok(RandomProjector { d_in, d_out, seed, rows })
    }

    pub fn from_spec(spec: &ProjectorSpec) -> Result<Self> {
        Self::new(spec.d_in, spec.d_out, spec.seed)
    }

    pub fn spec(&self) -> ProjectorSpec {
        ProjectorSpec { d_in: self.d_in, d_out: self.d_out, seed: self.seed }
    }

    /// Explicit rows, for tests that need a known matrix. The seed is
    /// recorded as 0 and the spec is not round-trippable.
    pub fn from_rows(rows: Vec<Vec<Real>>) -> Result<Self> {
        let d_out = rows.len();
        let d_in = rows.first().map_or(0, Vec::len);
        if d_out == 0 || d_in == 0 || rows.iter().any(|r| r.len() != d_in) {
            return Err(Error::Domain("projector rows must be non-empty and equal length".into()));
        }
        Ok(RandomProjector { d_in, d_out, seed: 0, rows: rows.concat() })
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn project(&self, x: &[Real]) -> Result<Vec<Real>> {
        if x.len() != self.d_in {
            return Err(Error::DimensionMismatch(format!(
                "projector expects {} inputs, got {}",
                self.d_in,
                x.len()
            )));
        }
        Ok((0..self.d_out)
            .map(|r| {
                let row = &self.rows[r * self.d_in..(r + 1) * self.d_in];
                row.iter().zip(x).map(|(&w, &v)| w * v).sum()
            })
            .collect())
    }

    /// Projects the concatenated 0/1 pixels of a record's views, summing only
    /// over set pixels.
    pub fn project_views(&self, record: &PoseRecord) -> Result<Vec<Real>> {
        let total: usize = record.views.iter().map(BinaryImage::len_bits).sum();
        if total != self.d_in {
            return Err(Error::DimensionMismatch(format!(
                "projector expects {} pixels, views have {}",
                self.d_in, total
            )));
        }
        let mut out = vec![0.0; self.d_out];
        let mut offset = 0usize;
        for view in &record.views {
            for idx in view.iter_set() {
                let col = offset + idx;
                for (r, acc) in out.iter_mut().enumerate() {
                    *acc += self.rows[r * self.d_in + col];
                }
            }
            offset += view.len_bits();
        }
        Ok(out)
    }
}

/// Named metric selection. `parse` accepts `img-l2`, `rp-l2`, `theta-g`,
/// `itp-l2`, `st-h` and `combined:alpha,beta,gamma`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum MetricKind {
    ImageL2,
    RpL2,
    AngleGeodesic,
    ItpL2,
    LinkHausdorff,
    Combined { alpha: Real, beta: Real, gamma: Real },
}

impl MetricKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "img-l2" => Ok(MetricKind::ImageL2),
            "rp-l2" => Ok(MetricKind::RpL2),
            "theta-g" => Ok(MetricKind::AngleGeodesic),
            "itp-l2" => Ok(MetricKind::ItpL2),
            "st-h" => Ok(MetricKind::LinkHausdorff),
            _ => {
                if let Some(rest) = name.strip_prefix("combined:") {
                    let parts: Vec<Real> = rest
                        .split(',')
                        .map(|t| {
                            t.trim()
                                .parse()
                                .map_err(|_| Error::Domain(format!("bad combined weight '{t}'")))
                        })
                        .collect::<Result<_>>()?;
                    if parts.len() != 3 {
                        return Err(Error::Domain(
                            "combined metric needs exactly three weights".into(),
                        ));
                    }
                    combined((parts[0], parts[1], parts[2]), 0.0, 0.0, 0.0)?;
                    Ok(MetricKind::Combined { alpha: parts[0], beta: parts[1], gamma: parts[2] })
                } else {
                    Err(Error::Domain(format!("unknown metric '{name}'")))
                }
            }
        }
    }

    pub fn name(&self) -> String {
        match self {
            MetricKind::ImageL2 => "img-l2".into(),
            MetricKind::RpL2 => "rp-l2".into(),
            MetricKind::AngleGeodesic => "theta-g".into(),
            MetricKind::ItpL2 => "itp-l2".into(),
            MetricKind::LinkHausdorff => "st-h".into(),
            MetricKind::Combined { alpha, beta, gamma } => {
                format!("combined:{alpha},{beta},{gamma}")
            }
        }
    }

    /// True when records must carry corner features for this metric.
    pub fn needs_features(&self) -> bool {
        matches!(self, MetricKind::LinkHausdorff)
    }
}

/// A metric ready to evaluate on pose records.
#[derive(Debug, Clone)]
pub enum Metric {
    ImageL2,
    RpL2(Arc<RandomProjector>),
    AngleGeodesic,
    ItpL2,
    /// Falls back to `itp-l2` for pairs where a link has no features.
    LinkHausdorff,
    Combined { alpha: Real, beta: Real, gamma: Real },
}

impl Metric {
    pub fn from_kind(kind: &MetricKind, projector: Option<Arc<RandomProjector>>) -> Result<Self> {
        Ok(match kind {
            MetricKind::ImageL2 => Metric::ImageL2,
            MetricKind::RpL2 => Metric::RpL2(projector.ok_or_else(|| {
                Error::Domain("rp-l2 requires a random projector".into())
            })?),
            MetricKind::AngleGeodesic => Metric::AngleGeodesic,
            MetricKind::ItpL2 => Metric::ItpL2,
            MetricKind::LinkHausdorff => Metric::LinkHausdorff,
            MetricKind::Combined { alpha, beta, gamma } => {
                Metric::Combined { alpha: *alpha, beta: *beta, gamma: *gamma }
            }
        })
    }

    pub fn kind(&self) -> MetricKind {
        match self {
            Metric::ImageL2 => MetricKind::ImageL2,
            Metric::RpL2(_) => MetricKind::RpL2,
            Metric::AngleGeodesic => MetricKind::AngleGeodesic,
            Metric::ItpL2 => MetricKind::ItpL2,
            Metric::LinkHausdorff => MetricKind::LinkHausdorff,
            Metric::Combined { alpha, beta, gamma } => {
                MetricKind::Combined { alpha: *alpha, beta: *beta, gamma: *gamma }
            }
        }
    }

    /// Per-record data worth computing once when a record participates in
    /// many distance evaluations; `Some` only for the projection metric.
    pub fn cache(&self, record: &PoseRecord) -> Result<Option<Vec<Real>>> {
        match self {
            Metric::RpL2(proj) => Ok(Some(proj.project_views(record)?)),
            _ => Ok(None),
        }
    }

    /// `eval` with optional caches from [`Metric::cache`]; missing caches
    /// fall back to the direct computation.
    pub fn eval_cached(
        &self,
        a: &PoseRecord,
        cache_a: Option<&[Real]>,
        b: &PoseRecord,
        cache_b: Option<&[Real]>,
    ) -> Result<Real> {
        if let Metric::RpL2(proj) = self {
            return match (cache_a, cache_b) {
                (Some(ca), Some(cb)) => l2(ca, cb),
                (Some(ca), None) => l2(ca, &proj.project_views(b)?),
                (None, Some(cb)) => l2(&proj.project_views(a)?, cb),
                (None, None) => l2(&proj.project_views(a)?, &proj.project_views(b)?),
            };
        }
        self.eval(a, b)
    }

    pub fn eval(&self, a: &PoseRecord, b: &PoseRecord) -> Result<Real> {
        match self {
            Metric::ImageL2 => image_l2(a, b),
            Metric::RpL2(proj) => {
                let pa = proj.project_views(a)?;
                let pb = proj.project_views(b)?;
                l2(&pa, &pb)
            }
            Metric::AngleGeodesic => angle_geodesic(a.config.as_slice(), b.config.as_slice()),
            Metric::ItpL2 => itp_l2(a, b),
            Metric::LinkHausdorff => match linkwise_hausdorff(a, b) {
                Ok(d) => Ok(d),
                Err(Error::DegenerateFeatures(_)) => itp_l2(a, b),
                Err(e) => Err(e),
            },
            Metric::Combined { alpha, beta, gamma } => combined(
                (*alpha, *beta, *gamma),
                image_l2(a, b)?,
                last_link_l2(a, b)?,
                angle_geodesic(a.config.as_slice(), b.config.as_slice())?,
            ),
        }
    }
}

/// Corner detector parameters: structure tensor of the Gaussian-smoothed
/// mask, scored by its minimum eigenvalue over a 3x3 window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureParams {
    pub sigma: Real,
    pub nms_radius: Real,
    pub max_points: usize,
    /// Candidates below this fraction of the strongest score are dropped.
    pub rel_floor: Real,
}

impl Default for FeatureParams {
    fn default() -> Self {
        FeatureParams { sigma: 1.5, nms_radius: 3.0, max_points: 20, rel_floor: 0.01 }
    }
}

fn gaussian_smooth(mask: &BinaryImage, sigma: Real) -> Vec<Real> {
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    let radius = (3.0 * sigma).ceil() as i64;
    let mut kernel = Vec::with_capacity((2 * radius + 1) as usize);
    let mut sum = 0.0;
    for i in -radius..=radius {
        let v = (-((i * i) as Real) / (2.0 * sigma * sigma)).exp();
        kernel.push(v);
        sum += v;
    }
    for v in &mut kernel {
        *v /= sum;
    }
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (ki, kv) in kernel.iter().enumerate() {
                let sx = x as i64 + ki as i64 - radius;
                if sx >= 0 && (sx as usize) < w && mask.get(sx as u32, y as u32) {
                    acc += kv;
                }
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = 0.0;
            for (ki, kv) in kernel.iter().enumerate() {
                let sy = y as i64 + ki as i64 - radius;
                if sy >= 0 && (sy as usize) < h {
                    acc += kv * tmp[sy as usize * w + x];
                }
            }
            out[y * w + x] = acc;
        }
    }
    out
}

/// Corner features of a binary mask: local maxima of the structure tensor's
/// minimum eigenvalue with non-max suppression, strongest first, at most
/// `max_points`, sub-pixel refined.
pub fn corner_features(mask: &BinaryImage, params: &FeatureParams) -> Vec<Point2<Real>> {
    let (w, h) = (mask.width() as usize, mask.height() as usize);
    if w < 3 || h < 3 {
        return Vec::new();
    }
    let smooth = gaussian_smooth(mask, params.sigma);
    let at = |x: usize, y: usize| smooth[y * w + x];
    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            gx[y * w + x] = (at(x + 1, y) - at(x - 1, y)) / 2.0;
            gy[y * w + x] = (at(x, y + 1) - at(x, y - 1)) / 2.0;
        }
    }
    let mut score = vec![0.0; w * h];
    let mut max_score: Real = 0.0;
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let i = (y as i64 + dy) as usize * w + (x as i64 + dx) as usize;
                    a += gx[i] * gx[i];
                    b += gx[i] * gy[i];
                    c += gy[i] * gy[i];
                }
            }
            let half_trace = (a + c) / 2.0;
            let s = half_trace - (((a - c) / 2.0).powi(2) + b * b).sqrt();
            score[y * w + x] = s;
            max_score = max_score.max(s);
        }
    }
    if max_score <= 0.0 {
        return Vec::new();
    }
    let floor = params.rel_floor * max_score;
    let mut candidates: Vec<(Real, usize, usize)> = Vec::new();
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let s = score[y * w + x];
            if s < floor {
                continue;
            }
            let mut is_max = true;
            'nb: for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let n = score[(y as i64 + dy) as usize * w + (x as i64 + dx) as usize];
                    // Strict on earlier scan positions keeps plateau picks unique.
                    if n > s || (n == s && (dy < 0 || (dy == 0 && dx < 0))) {
                        is_max = false;
                        break 'nb;
                    }
                }
            }
            if is_max {
                candidates.push((s, x, y));
            }
        }
    }
    candidates.sort_by(|a, b| {
        b.0.partial_cmp(&a.0).unwrap().then(a.2.cmp(&b.2)).then(a.1.cmp(&b.1))
    });
    let r_sq = params.nms_radius * params.nms_radius;
    let mut picked: Vec<Point2<Real>> = Vec::new();
    for &(_, x, y) in &candidates {
        if picked.len() >= params.max_points {
            break;
        }
        let p = refine_subpixel(&score, w, x, y);
        if picked.iter().all(|q| q.dist_sq(p) > r_sq) {
            picked.push(p);
        }
    }
    picked
}

fn refine_subpixel(score: &[Real], w: usize, x: usize, y: usize) -> Point2<Real> {
    let s = |x: usize, y: usize| score[y * w + x];
    let axis = |m: Real, c: Real, p: Real| {
        let denom = m - 2.0 * c + p;
        if denom.abs() < 1e-12 {
            0.0
        } else {
            (0.5 * (m - p) / denom).clamp(-0.5, 0.5)
        }
    };
    Point2::new(
        x as Real + axis(s(x - 1, y), s(x, y), s(x + 1, y)),
        y as Real + axis(s(x, y - 1), s(x, y), s(x, y + 1)),
    )
}

/// Fills `features` of each record with per-link corner features.
pub fn attach_features(records: &mut [PoseRecord], params: &FeatureParams) {
    use rayon::prelude::*;
    records.par_iter_mut().for_each(|rec| {
        rec.features = rec
            .link_masks
            .iter()
            .map(|m| corner_features(m, params))
            .collect();
    });
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simworld::{fk_render, sample_configs, Canvas, JointVector, RobotModel};
    use approx::assert_relative_eq;
    use rand::Rng;

    fn arm_records(n: usize, seed: u64) -> Vec<PoseRecord> {
        let model = RobotModel::arm(Point2::new(32.0, 32.0), vec![14.0, 9.0]);
        let canvas = Canvas::new(64, 64);
        sample_configs(&model, n, seed)
            .unwrap()
            .iter()
            .map(|q| fk_render(&model, q, &canvas).unwrap())
            .collect()
    }

    #[test]
    fn image_l2_is_sqrt_of_differing_pixels() {
        let recs = arm_records(2, 1);
        let k = recs[0].views[0].hamming(&recs[1].views[0]).unwrap();
        assert_relative_eq!(image_l2(&recs[0], &recs[1]).unwrap(), (k as Real).sqrt());
        assert_relative_eq!(image_l2(&recs[0], &recs[0]).unwrap(), 0.0);
    }

    #[test]
    fn angle_geodesic_takes_the_short_way() {
        let d = angle_geodesic(&[0.1], &[2.0 * PI - 0.1]).unwrap();
        assert_relative_eq!(d, 0.2, epsilon = 1e-12);
        let d2 = angle_geodesic(&[0.0, 1.0], &[PI, 1.5]).unwrap();
        assert_relative_eq!(d2, PI + 0.5, epsilon = 1e-12);
        assert!(angle_geodesic(&[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn itp_l2_of_pure_translation() {
        let recs = arm_records(1, 2);
        let mut moved = recs[0].clone();
        for p in &mut moved.tracked {
            p.x += 3.0;
            p.y += 4.0;
        }
        let t = recs[0].tracked.len() as Real;
        assert_relative_eq!(itp_l2(&recs[0], &moved).unwrap(), 5.0 * t.sqrt());
    }

    #[test]
    fn hausdorff_known_sets() {
        let a = [Point2::new(0.0, 0.0)];
        let b = [Point2::new(3.0, 4.0), Point2::new(0.0, 1.0)];
        assert_relative_eq!(hausdorff(&a, &b).unwrap(), 5.0);
        assert!(hausdorff::<Real>(&[], &b).is_err());
    }

    #[test]
    fn identity_projector_preserves_l2() {
        let rows: Vec<Vec<Real>> = (0..4)
            .map(|i| (0..4).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let proj = RandomProjector::from_rows(rows).unwrap();
        let x = [1.0, -2.0, 0.5, 3.0];
        let y = [0.0, 1.0, 1.5, -1.0];
        let px = proj.project(&x).unwrap();
        let py = proj.project(&y).unwrap();
        assert_relative_eq!(l2(&px, &py).unwrap(), l2(&x, &y).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn projector_is_reproducible_from_spec() {
        let p1 = RandomProjector::new(128, 16, 77).unwrap();
        let p2 = RandomProjector::from_spec(&p1.spec()).unwrap();
        let x: Vec<Real> = (0..128).map(|i| (i as Real).sin()).collect();
        assert_eq!(p1.project(&x).unwrap(), p2.project(&x).unwrap());
    }

    #[test]
    fn projection_roughly_preserves_pairwise_distances() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let proj = RandomProjector::new(10_000, 2_000, 9).unwrap();
        let pool: Vec<Vec<Real>> = (0..30)
            .map(|_| (0..10_000).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let projected: Vec<Vec<Real>> =
            pool.iter().map(|v| proj.project(v).unwrap()).collect();
        let mut ratios = Vec::new();
        for _ in 0..200 {
            let i = rng.gen_range(0..pool.len());
            let mut j = rng.gen_range(0..pool.len());
            while j == i {
                j = rng.gen_range(0..pool.len());
            }
            let orig = l2(&pool[i], &pool[j]).unwrap();
            let prj = l2(&projected[i], &projected[j]).unwrap();
            ratios.push((prj / orig - 1.0).abs());
        }
        ratios.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = ratios[ratios.len() / 2];
        assert!(median <= 0.1, "median distortion {median}");
    }

    #[test]
    fn projected_image_distance_tracks_image_distance() {
        // 50 base poses, each with jittered variants at three scales: pairs
        // range from near-duplicates to unrelated poses, like the pairs a
        // roadmap build compares.
        let model = RobotModel::arm(Point2::new(50.0, 50.0), vec![18.0, 14.0, 10.0]);
        let canvas = Canvas::new(100, 100);
        let mut rng = ChaCha20Rng::seed_from_u64(13);
        let mut recs = Vec::new();
        for base in sample_configs(&model, 50, 17).unwrap() {
            recs.push(fk_render(&model, &base, &canvas).unwrap());
            for amp in [0.05, 0.2, 0.7] {
                let jittered = model.wrap_config(JointVector::new(
                    base.as_slice().iter().map(|&v| v + rng.gen_range(-amp..amp)).collect(),
                ));
                recs.push(fk_render(&model, &jittered, &canvas).unwrap());
            }
        }
        assert_eq!(recs.len(), 200);
        let proj = RandomProjector::new(100 * 100, 2000, 3).unwrap();
        let projected: Vec<Vec<Real>> =
            recs.iter().map(|r| proj.project_views(r).unwrap()).collect();
        let mut img_d = Vec::new();
        let mut rp_d = Vec::new();
        for i in 0..recs.len() {
            for j in i + 1..recs.len() {
                img_d.push(image_l2(&recs[i], &recs[j]).unwrap());
                rp_d.push(l2(&projected[i], &projected[j]).unwrap());
            }
        }
        let rho = spearman(&img_d, &rp_d);
        assert!(rho >= 0.95, "spearman {rho}");
    }

    fn ranks(v: &[Real]) -> Vec<Real> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
        let mut r = vec![0.0; v.len()];
        let mut i = 0;
        while i < idx.len() {
            let mut j = i;
            while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
                j += 1;
            }
            let avg = (i + j) as Real / 2.0;
            for &k in &idx[i..=j] {
                r[k] = avg;
            }
            i = j + 1;
        }
        r
    }

    fn spearman(a: &[Real], b: &[Real]) -> Real {
        let (ra, rb) = (ranks(a), ranks(b));
        let n = ra.len() as Real;
        let (ma, mb) = (ra.iter().sum::<Real>() / n, rb.iter().sum::<Real>() / n);
        let mut cov = 0.0;
        let mut va = 0.0;
        let mut vb = 0.0;
        for (x, y) in ra.iter().zip(&rb) {
            cov += (x - ma) * (y - mb);
            va += (x - ma) * (x - ma);
            vb += (y - mb) * (y - mb);
        }
        cov / (va.sqrt() * vb.sqrt())
    }

    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn rectangle_corners_are_detected() {
        let mut mask = BinaryImage::new(64, 64);
        for y in 20..=44 {
            for x in 12..=50 {
                mask.set(x, y, true);
            }
        }
        let feats = corner_features(&mask, &FeatureParams::default());
        let corners = [(12.0, 20.0), (50.0, 20.0), (12.0, 44.0), (50.0, 44.0)];
        for &(cx, cy) in &corners {
            let hit = feats
                .iter()
                .any(|p| p.dist(Point2::new(cx, cy)) <= 2.0);
            assert!(hit, "no feature within 2 px of corner ({cx}, {cy}): {feats:?}");
        }
        assert!(feats.len() <= FeatureParams::default().max_points);
    }

    #[test]
    fn link_features_are_nonempty_for_arm_poses() {
        let mut recs = arm_records(10, 21);
        attach_features(&mut recs, &FeatureParams::default());
        for rec in &recs {
            assert_eq!(rec.features.len(), rec.link_masks.len());
            for f in &rec.features {
                assert!(!f.is_empty());
            }
        }
    }

    #[test]
    fn linkwise_hausdorff_and_fallback() {
        let mut recs = arm_records(2, 31);
        attach_features(&mut recs, &FeatureParams::default());
        let d = linkwise_hausdorff(&recs[0], &recs[1]).unwrap();
        assert!(d > 0.0);
        // Empty features on one link: the metric errors, the Metric enum
        // falls back to itp-l2.
        let mut broken = recs[0].clone();
        broken.features[1].clear();
        assert!(matches!(
            linkwise_hausdorff(&broken, &recs[1]),
            Err(Error::DegenerateFeatures(_))
        ));
        let fallback = Metric::LinkHausdorff.eval(&broken, &recs[1]).unwrap();
        assert_relative_eq!(fallback, itp_l2(&recs[0], &recs[1]).unwrap());
    }

    #[test]
    fn combined_weight_slices() {
        let mut recs = arm_records(2, 41);
        attach_features(&mut recs, &FeatureParams::default());
        let full = Metric::Combined { alpha: 1.0, beta: 0.0, gamma: 0.0 }
            .eval(&recs[0], &recs[1])
            .unwrap();
        assert_relative_eq!(full, image_l2(&recs[0], &recs[1]).unwrap());
        let angle = Metric::Combined { alpha: 0.0, beta: 0.0, gamma: 2.0 }
            .eval(&recs[0], &recs[1])
            .unwrap();
        assert_relative_eq!(
            angle,
            2.0 * angle_geodesic(recs[0].config.as_slice(), recs[1].config.as_slice()).unwrap()
        );
        assert!(combined((-1.0, 0.0, 0.0), 1.0, 1.0, 1.0).is_err());
        assert!(combined((0.0, 0.0, 0.0), 1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn metric_names_round_trip() {
        for name in ["img-l2", "rp-l2", "theta-g", "itp-l2", "st-h", "combined:1,0.5,2"] {
            let kind = MetricKind::parse(name).unwrap();
            assert_eq!(kind.name(), name);
        }
        assert!(MetricKind::parse("l3").is_err());
        assert!(MetricKind::parse("combined:1,2").is_err());
        assert!(MetricKind::parse("combined:1,-2,0").is_err());
    }
}
