//! Dimensionality reduction for pose-image data: PCA (with projection and
//! reconstruction), classical MDS, Isomap over a k-NN graph with graph
//! geodesics, and residual-variance curves for picking the embedding
//! dimension.
//!
//! Conventions: samples are matrix COLUMNS. `pca_fit` takes an m x n matrix
//! of n samples in m dimensions; embeddings hold their points as a p x n
//! matrix. Eigen-solves use the deterministic sign convention from `linalg`.

use crate::error::{Error, Result};
use crate::graph::{connected_components, dijkstra, knn_edge_list, Adjacency};
use crate::linalg::{eigh_jacobi, eigh_subspace, sign_normalize_columns, Mat, SymEigen};
use crate::metrics::Metric;
use crate::simworld::PoseRecord;
use crate::{Real, Scalar};
use rayon::prelude::*;
use std::fmt::Write as _;

/// Symmetric pairwise distances with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix<S = Real> {
    n: usize,
    entries: Vec<S>,
}

impl<S: Scalar> DistanceMatrix<S> {
    pub fn zeros(n: usize) -> Self {
        DistanceMatrix { n, entries: vec![S::zero(); n * n] }
    }

    /// Fills the upper triangle from `f` in parallel and mirrors it.
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> S + Sync) -> Result<Self> {
        let rows: Vec<Vec<S>> = (0..n)
            .into_par_iter()
            .map(|i| (i + 1..n).map(|j| f(i, j)).collect())
            .collect();
        let mut m = Self::zeros(n);
        for (i, row) in rows.into_iter().enumerate() {
            for (off, v) in row.into_iter().enumerate() {
                let j = i + 1 + off;
                if !(v >= S::zero()) || !v.is_finite() {
                    return Err(Error::Domain(format!("invalid distance at ({i},{j})")));
                }
                m.set_sym(i, j, v);
            }
        }
        Ok(m)
    }

    /// Euclidean distances between the rows of a point matrix.
    pub fn from_points(points: &Mat<S>) -> Result<Self> {
        Self::from_fn(points.rows(), |i, j| {
            points
                .row(i)
                .iter()
                .zip(points.row(j))
                .map(|(&a, &b)| (a - b) * (a - b))
                .sum::<S>()
                .sqrt()
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> S {
        self.entries[i * self.n + j]
    }

    pub fn set_sym(&mut self, i: usize, j: usize, v: S) {
        self.entries[i * self.n + j] = v;
        self.entries[j * self.n + i] = v;
    }

    pub fn validate(&self) -> Result<()> {
        if self.entries.len() != self.n * self.n {
            return Err(Error::DimensionMismatch("distance matrix storage".into()));
        }
        for i in 0..self.n {
            if self.get(i, i) != S::zero() {
                return Err(Error::Domain(format!("nonzero diagonal at {i}")));
            }
            for j in i + 1..self.n {
                let d = self.get(i, j);
                if !(d >= S::zero()) || !d.is_finite() {
                    return Err(Error::Domain(format!("invalid distance at ({i},{j})")));
                }
                if d != self.get(j, i) {
                    return Err(Error::Domain(format!("asymmetry at ({i},{j})")));
                }
            }
        }
        Ok(())
    }

    /// Upper-triangle entries in (i < j) row order.
    pub fn upper_triangle(&self) -> Vec<S> {
        let mut out = Vec::with_capacity(self.n * (self.n - 1) / 2);
        for i in 0..self.n {
            for j in i + 1..self.n {
                out.push(self.get(i, j));
            }
        }
        out
    }
}

/// PCA basis fitted to mean-centred samples.
#[derive(Debug, Clone)]
pub struct PcaModel<S = Real> {
    /// Per-dimension sample mean (length = input dimension).
    pub mean: Vec<S>,
    /// Orthonormal components as columns, input-dim x p.
    pub basis: Mat<S>,
    /// Sample variance captured by each component, descending.
    pub eigenvalues: Vec<S>,
}

impl<S: Scalar> PcaModel<S> {
    pub fn input_dim(&self) -> usize {
        self.basis.rows()
    }

    pub fn p(&self) -> usize {
        self.basis.cols()
    }

    /// Coordinates of `x` in the fitted basis.
    pub fn project(&self, x: &[S]) -> Result<Vec<S>> {
        let (m, p) = (self.basis.rows(), self.basis.cols());
        if x.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "expected input of length {m}, got {}",
                x.len()
            )));
        }
        let mut y = vec![S::zero(); p];
        for (j, item) in y.iter_mut().enumerate() {
            let mut acc = S::zero();
            for i in 0..m {
                acc += self.basis[(i, j)] * (x[i] - self.mean[i]);
            }
            *item = acc;
        }
        Ok(y)
    }

    /// Maps basis coordinates back to the input space.
    pub fn reconstruct(&self, y: &[S]) -> Result<Vec<S>> {
        let p = self.basis.cols();
        if y.len() != p {
            return Err(Error::DimensionMismatch(format!(
                "expected {p} coordinates, got {}",
                y.len()
            )));
        }
        let mut x = self.mean.clone();
        for (i, item) in x.iter_mut().enumerate() {
            for j in 0..p {
                *item += self.basis[(i, j)] * y[j];
            }
        }
        Ok(x)
    }
}

/// A low-dimensional point set tied back to its source sample.
#[derive(Debug, Clone)]
pub struct Embedding<S = Real> {
    /// Embedding dimension.
    pub p: usize,
    /// Coordinates as a p x n matrix; column i is point i.
    pub points: Mat<S>,
    /// Residual variance for dimensions 1..=p when available.
    pub residual_variances: Vec<S>,
    /// Source indices of the embedded sample (identity unless nodes dropped).
    pub kept: Vec<usize>,
    /// Source nodes excluded because they fell outside the largest
    /// connected component.
    pub dropped: usize,
}

impl<S: Scalar> Embedding<S> {
    pub fn len(&self) -> usize {
        self.points.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.points.cols() == 0
    }

    /// Coordinates of embedded point `i` (column i).
    pub fn point(&self, i: usize) -> Vec<S> {
        (0..self.p).map(|r| self.points[(r, i)]).collect()
    }

    /// CSV rows `node_id,y1..yp` with a header line.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("node_id");
        for d in 1..=self.p {
            let _ = write!(s, ",y{d}");
        }
        s.push('\n');
        for i in 0..self.len() {
            let _ = write!(s, "{}", self.kept[i]);
            for r in 0..self.p {
                let _ = write!(s, ",{}", self.points[(r, i)]);
            }
            s.push('\n');
        }
        s
    }
}

/// CSV rows `dim,residual` with a header line.
pub fn residuals_to_csv<S: Scalar>(dims: &[usize], residuals: &[S]) -> String {
    let mut s = String::from("dim,residual\n");
    for (d, r) in dims.iter().zip(residuals) {
        let _ = writeln!(s, "{d},{r}");
    }
    s
}

/// Replaces vanished columns (rank deficiency) with deterministic unit
/// vectors orthogonal to the columns before them.
fn fill_deficient_columns<S: Scalar>(w: &mut Mat<S>, valid: &[bool]) {
    let (m, p) = (w.rows(), w.cols());
    let mut fallback = 0usize;
    for c in 0..p {
        if valid[c] {
            continue;
        }
        'candidates: while fallback < m {
            let mut col = vec![S::zero(); m];
            col[fallback] = S::one();
            fallback += 1;
            for prev in 0..p {
                if prev == c || (!valid[prev] && prev > c) {
                    continue;
                }
                let mut dot = S::zero();
                for r in 0..m {
                    dot += w[(r, prev)] * col[r];
                }
                for (r, item) in col.iter_mut().enumerate() {
                    *item -= dot * w[(r, prev)];
                }
            }
            let norm = col.iter().map(|&v| v * v).sum::<S>().sqrt();
            if norm > S::from_f64(1e-6).unwrap() {
                for (r, item) in col.iter().enumerate() {
                    w[(r, c)] = *item / norm;
                }
                break 'candidates;
            }
        }
    }
}

/// Fits a `p`-component PCA to the columns of `x` (m dims, n samples) and
/// returns the model together with the projected sample. Requires
/// `1 <= p <= min(m, n-1)`. Uses the Gram matrix when dimensions exceed the
/// sample count, so image-sized inputs stay tractable.
pub fn pca_fit<S: Scalar>(x: &Mat<S>, p: usize) -> Result<(PcaModel<S>, Embedding<S>)> {
    let (m, n) = (x.rows(), x.cols());
    if n < 2 {
        return Err(Error::Domain("PCA needs at least two samples".into()));
    }
    if p == 0 || p > m.min(n - 1) {
        return Err(Error::Domain(format!(
            "PCA target dimension {p} out of range 1..={}",
            m.min(n - 1)
        )));
    }
    let nf = S::from_usize(n).unwrap();
    let denom = S::from_usize(n - 1).unwrap();
    let mut mean = vec![S::zero(); m];
    for (r, item) in mean.iter_mut().enumerate() {
        for c in 0..n {
            *item += x[(r, c)];
        }
        *item /= nf;
    }
    let mut xc = Mat::zeros(m, n);
    for r in 0..m {
        for c in 0..n {
            xc[(r, c)] = x[(r, c)] - mean[r];
        }
    }

    let mut basis = Mat::zeros(m, p);
    let mut eigenvalues = vec![S::zero(); p];
    let mut valid = vec![false; p];
    if m <= n {
        // Covariance route: m x m eigenproblem.
        let cov = {
            let mut c = xc.matmul(&xc.transpose())?;
            for v in 0..m {
                for u in 0..m {
                    let s = c[(v, u)] / denom;
                    c[(v, u)] = s;
                }
            }
            c
        };
        let eig = eigh_jacobi(&cov)?;
        let lam_max = eig.values.first().copied().unwrap_or(S::zero()).max(S::zero());
        let tol = lam_max * S::from_f64(1e-12).unwrap();
        for c in 0..p {
            let lam = eig.values[c].max(S::zero());
            eigenvalues[c] = lam;
            if lam > tol {
                valid[c] = true;
                for r in 0..m {
                    basis[(r, c)] = eig.vectors[(r, c)];
                }
            }
        }
    } else {
        // Gram route: n x n eigenproblem, components recovered as Xc u / sqrt(mu).
        let gram = xc.transpose().matmul(&xc)?;
        let eig = eigh_jacobi(&gram)?;
        let mu_max = eig.values.first().copied().unwrap_or(S::zero()).max(S::zero());
        let tol = mu_max * S::from_f64(1e-12).unwrap();
        for c in 0..p {
            let mu = eig.values[c].max(S::zero());
            eigenvalues[c] = mu / denom;
            if mu > tol {
                valid[c] = true;
                let inv = S::one() / mu.sqrt();
                for r in 0..m {
                    let mut acc = S::zero();
                    for s in 0..n {
                        acc += xc[(r, s)] * eig.vectors[(s, c)];
                    }
                    basis[(r, c)] = acc * inv;
                }
            }
        }
    }
    fill_deficient_columns(&mut basis, &valid);
    sign_normalize_columns(&mut basis);

    let points = basis.transpose().matmul(&xc)?;
    let model = PcaModel { mean, basis, eigenvalues };
    let embedding = Embedding {
        p,
        points,
        residual_variances: Vec::new(),
        kept: (0..n).collect(),
        dropped: 0,
    };
    Ok((model, embedding))
}

/// Projects an input-space vector into the model's component coordinates.
pub fn pca_project<S: Scalar>(model: &PcaModel<S>, x: &[S]) -> Result<Vec<S>> {
    if x.len() != model.input_dim() {
        return Err(Error::DimensionMismatch(format!(
            "PCA projection input has length {}, model expects {}",
            x.len(),
            model.input_dim()
        )));
    }
    let mut y = vec![S::zero(); model.p()];
    for (c, item) in y.iter_mut().enumerate() {
        for (r, &xv) in x.iter().enumerate() {
            *item += model.basis[(r, c)] * (xv - model.mean[r]);
        }
    }
    Ok(y)
}

/// Maps component coordinates back to input space: mean + W y. Interpolated
/// coordinates between two projections reconstruct a blend of the sources.
pub fn pca_reconstruct<S: Scalar>(model: &PcaModel<S>, y: &[S]) -> Result<Vec<S>> {
    if y.len() != model.p() {
        return Err(Error::DimensionMismatch(format!(
            "PCA reconstruction input has length {}, model has {} components",
            y.len(),
            model.p()
        )));
    }
    let mut x = model.mean.clone();
    for (r, item) in x.iter_mut().enumerate() {
        for (c, &yv) in y.iter().enumerate() {
            *item += model.basis[(r, c)] * yv;
        }
    }
    Ok(x)
}

/// Double-centres the squared distances: S = -1/2 H D^2 H.
fn double_center<S: Scalar>(d: &DistanceMatrix<S>) -> Mat<S> {
    let n = d.n();
    let nf = S::from_usize(n).unwrap();
    let mut sq = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            let v = d.get(i, j);
            sq[(i, j)] = v * v;
        }
    }
    let mut row_mean = vec![S::zero(); n];
    let mut grand = S::zero();
    for i in 0..n {
        for j in 0..n {
            row_mean[i] += sq[(i, j)];
        }
        row_mean[i] /= nf;
        grand += row_mean[i];
    }
    grand /= nf;
    let half = S::from_f64(0.5).unwrap();
    let mut s = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            s[(i, j)] = -half * (sq[(i, j)] - row_mean[i] - row_mean[j] + grand);
        }
    }
    s
}

// Above this order, MDS switches from the full Jacobi solve to subspace
// iteration for the handful of leading eigenpairs it needs.
const MDS_DENSE_LIMIT: usize = 256;

/// Classical MDS: embeds `d` into `p` dimensions via the top eigenpairs of
/// the double-centred squared-distance matrix. Negative eigenvalues are
/// clamped, zeroing their coordinates. Residual variances are filled for
/// dimensions 1..=p unless the distances are degenerate.
pub fn mds<S: Scalar>(d: &DistanceMatrix<S>, p: usize) -> Result<Embedding<S>> {
    d.validate()?;
    let n = d.n();
    if p == 0 || p + 1 > n {
        return Err(Error::Domain(format!("MDS dimension {p} out of range for n={n}")));
    }
    let s = double_center(d);
    let SymEigen { values, vectors } = if n <= MDS_DENSE_LIMIT {
        let full = eigh_jacobi(&s)?;
        SymEigen {
            values: full.values[..p].to_vec(),
            vectors: {
                let mut v = Mat::zeros(n, p);
                for c in 0..p {
                    for r in 0..n {
                        v[(r, c)] = full.vectors[(r, c)];
                    }
                }
                v
            },
        }
    } else {
        let top = eigh_subspace(&s, p)?;
        SymEigen { values: top.values, vectors: top.vectors }
    };

    let mut points = Mat::zeros(p, n);
    for (c, &lam) in values.iter().enumerate() {
        if lam <= S::zero() {
            continue;
        }
        let scale = lam.sqrt();
        for i in 0..n {
            points[(c, i)] = scale * vectors[(i, c)];
        }
    }
    let mut embedding = Embedding {
        p,
        points,
        residual_variances: Vec::new(),
        kept: (0..n).collect(),
        dropped: 0,
    };
    let dims: Vec<usize> = (1..=p).collect();
    if let Ok(res) = residual_variance(d, &embedding, &dims) {
        embedding.residual_variances = res;
    }
    Ok(embedding)
}

/// Isomap core shared by the record-based entry point and tests: k-NN graph
/// under the union rule, graph geodesics by per-source Dijkstra, then MDS on
/// the largest connected component. Returns the embedding (kept holds source
/// indices, dropped counts excluded nodes) and the geodesic matrix over the
/// kept nodes.
pub fn isomap_from_distance<S: Scalar>(
    d: &DistanceMatrix<S>,
    k: usize,
    p: usize,
) -> Result<(Embedding<S>, DistanceMatrix<S>)> {
    d.validate()?;
    let n = d.n();
    if n <= k || k == 0 {
        return Err(Error::Domain(format!("Isomap needs n > k >= 1, got n={n}, k={k}")));
    }
    let dist = |i: usize, j: usize| d.get(i, j).to_f64().unwrap();
    let edges = knn_edge_list(n, k, &dist)?;
    let adj = Adjacency::from_edges(n, &edges)?;
    let comps = connected_components(&adj);
    let largest = comps
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| a.len().cmp(&b.len()).then(ib.cmp(ia)))
        .map(|(_, c)| c.clone())
        .unwrap_or_default();
    if largest.len() < p + 1 {
        return Err(Error::Embedding(format!(
            "largest connected component has {} nodes, need at least {}",
            largest.len(),
            p + 1
        )));
    }
    let dropped = n - largest.len();

    // Geodesics over the kept component; Dijkstra rows are independent.
    let m = largest.len();
    let rows: Vec<Vec<Real>> = largest
        .par_iter()
        .map(|&src| {
            let (dist, _) = dijkstra(&adj, src);
            largest.iter().map(|&t| dist[t]).collect()
        })
        .collect();
    let mut geo = DistanceMatrix::<S>::zeros(m);
    for (li, row) in rows.iter().enumerate() {
        for (lj, &v) in row.iter().enumerate() {
            if lj <= li {
                continue;
            }
            // Forward and reverse sums can differ in the last ulp; keep the
            // smaller so the matrix is exactly symmetric.
            let w = v.min(rows[lj][li]);
            if !w.is_finite() {
                return Err(Error::Embedding(format!(
                    "geodesic between kept nodes {} and {} is infinite",
                    largest[li], largest[lj]
                )));
            }
            geo.set_sym(li, lj, S::from_f64(w).unwrap());
        }
    }

    let mut embedding = mds(&geo, p)?;
    embedding.kept = largest;
    embedding.dropped = dropped;
    Ok((embedding, geo))
}

/// All pairwise metric distances between records, computed in parallel with
/// per-record caching (projection metrics project each record once).
pub fn pairwise_distances(metric: &Metric, records: &[impl std::borrow::Borrow<PoseRecord> + Sync]) -> Result<DistanceMatrix> {
    let n = records.len();
    let caches: Vec<Option<Vec<Real>>> = records
        .par_iter()
        .map(|r| metric.cache(r.borrow()))
        .collect::<Result<_>>()?;
    let rows: Vec<Result<Vec<Real>>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .map(|j| {
                    metric.eval_cached(
                        records[i].borrow(),
                        caches[i].as_deref(),
                        records[j].borrow(),
                        caches[j].as_deref(),
                    )
                })
                .collect()
        })
        .collect();
    let mut d = DistanceMatrix::zeros(n);
    for (i, row) in rows.into_iter().enumerate() {
        for (off, v) in row?.into_iter().enumerate() {
            d.set_sym(i, i + 1 + off, v);
        }
    }
    Ok(d)
}

/// Isomap over pose records with a pose-space metric supplying edge weights.
pub fn isomap(
    records: &[PoseRecord],
    k: usize,
    p: usize,
    metric: &Metric,
) -> Result<(Embedding, DistanceMatrix)> {
    if records.len() <= k || k == 0 {
        return Err(Error::Domain(format!(
            "Isomap needs n > k >= 1, got n={}, k={k}",
            records.len()
        )));
    }
    let d = pairwise_distances(metric, records)?;
    isomap_from_distance(&d, k, p)
}

/// Residual variance 1 - rho^2 between the geodesic distances and the
/// embedding distances truncated to each requested dimension; rho is the
/// Pearson correlation over upper-triangle entries.
pub fn residual_variance<S: Scalar>(
    d_geo: &DistanceMatrix<S>,
    embedding: &Embedding<S>,
    dims: &[usize],
) -> Result<Vec<S>> {
    let n = d_geo.n();
    if embedding.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "embedding has {} points, distance matrix has {n}",
            embedding.len()
        )));
    }
    if n < 2 {
        return Err(Error::Domain("residual variance needs at least two points".into()));
    }
    for &d in dims {
        if d == 0 || d > embedding.p {
            return Err(Error::Domain(format!(
                "residual dimension {d} outside 1..={}",
                embedding.p
            )));
        }
    }
    let a = d_geo.upper_triangle();
    let mut out = Vec::with_capacity(dims.len());
    for &dim in dims {
        let mut b = Vec::with_capacity(a.len());
        for i in 0..n {
            for j in i + 1..n {
                let mut acc = S::zero();
                for r in 0..dim {
                    let diff = embedding.points[(r, i)] - embedding.points[(r, j)];
                    acc += diff * diff;
                }
                b.push(acc.sqrt());
            }
        }
        out.push(one_minus_rho_sq(&a, &b)?);
    }
    Ok(out)
}

fn one_minus_rho_sq<S: Scalar>(a: &[S], b: &[S]) -> Result<S> {
    let nf = S::from_usize(a.len()).unwrap();
    let mean = |v: &[S]| v.iter().copied().sum::<S>() / nf;
    let (ma, mb) = (mean(a), mean(b));
    let mut cov = S::zero();
    let mut va = S::zero();
    let mut vb = S::zero();
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        cov += dx * dy;
        va += dx * dx;
        vb += dy * dy;
    }
    if va == S::zero() || vb == S::zero() {
        return Err(Error::Domain(
            "constant distance vector makes the correlation undefined".into(),
        ));
    }
    let rho_sq = (cov * cov) / (va * vb);
    Ok((S::one() - rho_sq).max(S::zero()).min(S::one()))
}
