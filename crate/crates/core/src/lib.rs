//! Vision-only roadmap planning toolkit.
//!
//! Everything here operates on rendered binary images of robot poses rather
//! than on analytic workspace geometry: collision checks run on interval
//! run-length encodings of those images, pose distances are image or feature
//! distances, and the roadmap is a k-nearest-neighbour graph in that space.
//!
//! Module layout:
//! - [`image`] / [`rle`]: packed binary images and interval run-length
//!   encodings with sweep-based overlap kernels.
//! - [`simworld`]: planar robot models, rasterisation, scenes, pose sampling.
//! - [`metrics`]: pose-to-pose distances (image, projected, angular, tracked
//!   point, feature Hausdorff) and corner feature extraction.
//! - [`linalg`] / [`manifold`]: dense symmetric eigensolvers, PCA, classical
//!   MDS and Isomap with residual-variance dimension diagnostics.
//! - [`vrm`]: the visual roadmap graph (build, collision marking, endpoint
//!   insertion, shortest paths, category labelling).
//! - [`localplan`]: edge feasibility checks in image space plus the
//!   interpolating gold standard.
//! - [`dynamic`]: incremental collision updates and the execute/replan/wait
//!   loop against scripted obstacle tracks.

pub mod dynamic;
pub mod error;
pub mod geom;
pub mod graph;
pub mod image;
pub mod linalg;
pub mod localplan;
pub mod manifold;
pub mod metrics;
pub mod rle;
pub mod simworld;
pub mod vrm;

pub use error::{Error, Result};

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};
use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Scalar bound for the numeric kernels (linear algebra, manifold learning,
/// geometry). Implemented by `f32` and `f64`; the planning stack itself is
/// instantiated at [`Real`].
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + Sum
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + 'static
{
}

/// Concrete scalar used throughout the planning stack. Distances, weights and
/// angles are double precision.
pub type Real = f64;
