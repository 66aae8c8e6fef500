//! Small 2-D geometry helpers shared by the rasteriser and the metrics.

use crate::Scalar;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2<S> {
    pub x: S,
    pub y: S,
}

impl<S: Scalar> Point2<S> {
    pub fn new(x: S, y: S) -> Self {
        Point2 { x, y }
    }

    pub fn dist(self, other: Self) -> S {
        self.dist_sq(other).sqrt()
    }

    pub fn dist_sq(self, other: Self) -> S {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        dx * dx + dy * dy
    }
}

/// Squared distance from `p` to the segment `[a, b]`.
pub fn point_segment_dist_sq<S: Scalar>(p: Point2<S>, a: Point2<S>, b: Point2<S>) -> S {
    let abx = b.x - a.x;
    let aby = b.y - a.y;
    let len_sq = abx * abx + aby * aby;
    if len_sq == S::zero() {
        return p.dist_sq(a);
    }
    let t = ((p.x - a.x) * abx + (p.y - a.y) * aby) / len_sq;
    let t = t.max(S::zero()).min(S::one());
    let proj = Point2::new(a.x + t * abx, a.y + t * aby);
    p.dist_sq(proj)
}

/// True when `p` lies inside or on the boundary of the convex polygon given by
/// `verts` in order (either winding). Degenerate polygons contain nothing.
pub fn convex_polygon_contains<S: Scalar>(verts: &[Point2<S>], p: Point2<S>) -> bool {
    if verts.len() < 3 {
        return false;
    }
    let mut sign = 0i8;
    for i in 0..verts.len() {
        let a = verts[i];
        let b = verts[(i + 1) % verts.len()];
        let cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
        if cross > S::zero() {
            if sign < 0 {
                return false;
            }
            sign = 1;
        } else if cross < S::zero() {
            if sign > 0 {
                return false;
            }
            sign = -1;
        }
    }
    true
}

/// Rigid 2-D camera transform: rotation about the canvas origin followed by a
/// translation, both in pixel units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ViewTransform {
    pub rotation: f64,
    pub tx: f64,
    pub ty: f64,
}

impl Default for ViewTransform {
    fn default() -> Self {
        ViewTransform { rotation: 0.0, tx: 0.0, ty: 0.0 }
    }
}

impl ViewTransform {
    pub fn identity() -> Self {
        Self::default()
    }

    pub fn is_identity(&self) -> bool {
        self.rotation == 0.0 && self.tx == 0.0 && self.ty == 0.0
    }

    pub fn apply(&self, p: Point2<f64>) -> Point2<f64> {
        if self.is_identity() {
            return p;
        }
        let (s, c) = self.rotation.sin_cos();
        Point2::new(c * p.x - s * p.y + self.tx, s * p.x + c * p.y + self.ty)
    }
}
