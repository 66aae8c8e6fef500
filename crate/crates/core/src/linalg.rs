//! Minimal dense linear algebra for the manifold stack: row-major matrices,
//! symmetric eigendecomposition (cyclic Jacobi for full spectra, subspace
//! iteration for a few leading eigenpairs of large matrices) and orthogonal
//! Procrustes alignment.
//!
//! Everything is deterministic: fixed iteration orders, a fixed seed for the
//! subspace start block, and a sign convention that makes each eigenvector's
//! largest-magnitude entry positive.

use crate::error::{Error, Result};
use crate::Scalar;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

#[derive(Debug, Clone, PartialEq)]
pub struct Mat<S> {
    rows: usize,
    cols: usize,
    data: Vec<S>,
}

impl<S: Scalar> Mat<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::DimensionMismatch("ragged matrix rows".into()));
        }
        Ok(Mat { rows: r, cols: c, data: rows.concat() })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[S] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[S] {
        &self.data
    }

    pub fn transpose(&self) -> Mat<S> {
        let mut t = Mat::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                t[(c, r)] = self[(r, c)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Mat<S>) -> Result<Mat<S>> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} * {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Mat::zeros(self.rows, other.cols);
        let oc = other.cols;
        let compute_row = |r: usize, out_row: &mut [S]| {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == S::zero() {
                    continue;
                }
                let other_row = other.row(k);
                for c in 0..oc {
                    out_row[c] += a * other_row[c];
                }
            }
        };
        if self.rows >= 256 {
            out.data
                .par_chunks_mut(oc)
                .enumerate()
                .for_each(|(r, row)| compute_row(r, row));
        } else {
            for (r, row) in out.data.chunks_mut(oc).enumerate() {
                compute_row(r, row);
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> S {
        self.data.iter().map(|&v| v * v).sum::<S>().sqrt()
    }

    pub fn sub(&self, other: &Mat<S>) -> Result<Mat<S>> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(Error::DimensionMismatch("matrix subtraction shapes".into()));
        }
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect();
        Ok(Mat { rows: self.rows, cols: self.cols, data })
    }
}

impl<S: Scalar> std::ops::Index<(usize, usize)> for Mat<S> {
    type Output = S;
    fn index(&self, (r, c): (usize, usize)) -> &S {
        &self.data[r * self.cols + c]
    }
}

impl<S: Scalar> std::ops::IndexMut<(usize, usize)> for Mat<S> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut S {
        &mut self.data[r * self.cols + c]
    }
}

/// Eigenpairs of a symmetric matrix, eigenvalues descending, eigenvectors as
/// matching columns of `vectors`.
#[derive(Debug, Clone)]
pub struct SymEigen<S> {
    pub values: Vec<S>,
    pub vectors: Mat<S>,
}

/// Flips column signs so each column's largest-magnitude entry is positive,
/// making eigenvector output reproducible.
pub fn sign_normalize_columns<S: Scalar>(vectors: &mut Mat<S>) {
    for c in 0..vectors.cols() {
        let mut best = 0usize;
        let mut best_abs = S::zero();
        for r in 0..vectors.rows() {
            let a = vectors[(r, c)].abs();
            if a > best_abs {
                best_abs = a;
                best = r;
            }
        }
        if vectors[(best, c)] < S::zero() {
            for r in 0..vectors.rows() {
                let v = vectors[(r, c)];
                vectors[(r, c)] = -v;
            }
        }
    }
}

/// Full symmetric eigendecomposition by cyclic Jacobi rotations. The input is
/// symmetrised as `(A + A^T) / 2` first.
pub fn eigh_jacobi<S: Scalar>(m: &Mat<S>) -> Result<SymEigen<S>> {
    if m.rows() != m.cols() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition of a {}x{} matrix",
            m.rows(),
            m.cols()
        )));
    }
    let n = m.rows();
    let mut a = Mat::zeros(n, n);
    for r in 0..n {
        for c in 0..n {
            a[(r, c)] = (m[(r, c)] + m[(c, r)]) / S::from_f64(2.0).unwrap();
        }
    }
    let mut v = Mat::identity(n);
    let fro = a.frobenius_norm();
    let tol = fro * S::epsilon() * S::from_f64(10.0).unwrap();
    let two = S::from_f64(2.0).unwrap();

    for _sweep in 0..100 {
        let mut off = S::zero();
        for p in 0..n {
            for q in p + 1..n {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off.sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq == S::zero() {
                    continue;
                }
                let tau = (a[(q, q)] - a[(p, p)]) / (two * apq);
                let t = if tau >= S::zero() {
                    S::one() / (tau + (S::one() + tau * tau).sqrt())
                } else {
                    -S::one() / (-tau + (S::one() + tau * tau).sqrt())
                };
                let c = S::one() / (S::one() + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].partial_cmp(&a[(i, i)]).unwrap().then(i.cmp(&j)));
    let mut values = Vec::with_capacity(n);
    let mut vectors = Mat::zeros(n, n);
    for (c_new, &c_old) in order.iter().enumerate() {
        values.push(a[(c_old, c_old)]);
        for r in 0..n {
            vectors[(r, c_new)] = v[(r, c_old)];
        }
    }
    sign_normalize_columns(&mut vectors);
    Ok(SymEigen { values, vectors })
}

/// Modified Gram-Schmidt with one re-orthogonalisation pass. Columns that
/// vanish are replaced by deterministic unit vectors and re-orthogonalised.
fn orthonormalize<S: Scalar>(q: &mut Mat<S>) {
    let (n, k) = (q.rows(), q.cols());
    let tiny = S::epsilon().sqrt() * S::from_usize(n).unwrap();
    let mut fallback = 0usize;
    for c in 0..k {
        for _pass in 0..2 {
            for prev in 0..c {
                let mut dot = S::zero();
                for r in 0..n {
                    dot += q[(r, prev)] * q[(r, c)];
                }
                for r in 0..n {
                    let upd = q[(r, c)] - dot * q[(r, prev)];
                    q[(r, c)] = upd;
                }
            }
        }
        let mut norm = S::zero();
        for r in 0..n {
            norm += q[(r, c)] * q[(r, c)];
        }
        let norm = norm.sqrt();
        if norm <= tiny {
            for r in 0..n {
                q[(r, c)] = S::zero();
            }
            q[(fallback % n, c)] = S::one();
            fallback += 1;
            for prev in 0..c {
                let mut dot = S::zero();
                for r in 0..n {
                    dot += q[(r, prev)] * q[(r, c)];
                }
                for r in 0..n {
                    let upd = q[(r, c)] - dot * q[(r, prev)];
                    q[(r, c)] = upd;
                }
            }
            let mut n2 = S::zero();
            for r in 0..n {
                n2 += q[(r, c)] * q[(r, c)];
            }
            let n2 = n2.sqrt();
            for r in 0..n {
                let upd = q[(r, c)] / n2;
                q[(r, c)] = upd;
            }
        } else {
            for r in 0..n {
                let upd = q[(r, c)] / norm;
                q[(r, c)] = upd;
            }
        }
    }
}

/// Leading `k` eigenpairs (largest magnitude, reported in descending signed
/// order) of a symmetric matrix via blocked subspace iteration with a Ritz
/// step. Suited to large `n` with small `k`.
pub fn eigh_subspace<S: Scalar>(m: &Mat<S>, k: usize) -> Result<SymEigen<S>> {
    if m.rows() != m.cols() {
        return Err(Error::DimensionMismatch("subspace iteration needs a square matrix".into()));
    }
    let n = m.rows();
    if k == 0 || k > n {
        return Err(Error::Domain(format!("cannot extract {k} eigenpairs from order {n}")));
    }
    let block = (k + 8).min(n);
    let mut rng = ChaCha20Rng::seed_from_u64(0x5eed_ba5e);
    let mut q = Mat::zeros(n, block);
    for r in 0..n {
        for c in 0..block {
            q[(r, c)] = S::from_f64(StandardNormal.sample(&mut rng)).unwrap();
        }
    }
    orthonormalize(&mut q);

    let tol = S::from_f64(1e-12).unwrap();
    let mut prev_ritz: Vec<S> = vec![S::zero(); block];
    for _iter in 0..500 {
        let z = m.matmul(&q)?;
        let mut ritz = vec![S::zero(); block];
        for c in 0..block {
            for r in 0..n {
                ritz[c] += q[(r, c)] * z[(r, c)];
            }
        }
        let scale = ritz
            .iter()
            .map(|v| v.abs())
            .fold(S::zero(), S::max)
            .max(S::one());
        let drift = ritz
            .iter()
            .zip(&prev_ritz)
            .map(|(&a, &b)| (a - b).abs())
            .fold(S::zero(), S::max);
        q = z;
        orthonormalize(&mut q);
        prev_ritz = ritz;
        if drift <= tol * scale {
            break;
        }
    }

    // Ritz step: diagonalise the projected block to decouple the eigenpairs.
    let aq = m.matmul(&q)?;
    let t = q.transpose().matmul(&aq)?;
    let small = eigh_jacobi(&t)?;
    let mut vectors = q.matmul(&small.vectors)?;
    let keep: Vec<usize> = (0..block).collect();
    let mut order = keep;
    order.sort_by(|&i, &j| {
        small.values[j].partial_cmp(&small.values[i]).unwrap().then(i.cmp(&j))
    });
    let mut values = Vec::with_capacity(k);
    let mut out_vecs = Mat::zeros(n, k);
    for (c_new, &c_old) in order.iter().take(k).enumerate() {
        values.push(small.values[c_old]);
        for r in 0..n {
            out_vecs[(r, c_new)] = vectors[(r, c_old)];
        }
    }
    vectors = out_vecs;
    sign_normalize_columns(&mut vectors);
    Ok(SymEigen { values, vectors })
}

/// Residual of the best orthogonal alignment (rotation or reflection plus
/// translation) of point rows `y` onto `x`, relative to the spread of `x`.
/// Needs a full-rank cross-covariance between the centred sets.
pub fn procrustes_residual<S: Scalar>(x: &Mat<S>, y: &Mat<S>) -> Result<S> {
    if x.rows() != y.rows() || x.cols() != y.cols() {
        return Err(Error::DimensionMismatch("procrustes needs equally shaped point sets".into()));
    }
    let (n, p) = (x.rows(), x.cols());
    if n == 0 {
        return Err(Error::Domain("procrustes needs at least one point".into()));
    }
    let center = |m: &Mat<S>| {
        let mut out = m.clone();
        for c in 0..p {
            let mut mean = S::zero();
            for r in 0..n {
                mean += m[(r, c)];
            }
            mean /= S::from_usize(n).unwrap();
            for r in 0..n {
                let v = out[(r, c)] - mean;
                out[(r, c)] = v;
            }
        }
        out
    };
    let xc = center(x);
    let yc = center(y);
    // Polar factor of M = Yc^T Xc is the closest orthogonal map.
    let m = yc.transpose().matmul(&xc)?;
    let mtm = m.transpose().matmul(&m)?;
    let eig = eigh_jacobi(&mtm)?;
    let lam_max = eig.values.first().copied().unwrap_or(S::zero());
    if lam_max <= S::zero() {
        return Err(Error::Domain("degenerate point sets in procrustes".into()));
    }
    let mut inv_sqrt = Mat::zeros(p, p);
    for i in 0..p {
        let lam = eig.values[i].max(S::zero());
        if lam <= lam_max * S::epsilon() {
            return Err(Error::Domain("rank-deficient cross-covariance in procrustes".into()));
        }
        inv_sqrt[(i, i)] = S::one() / lam.sqrt();
    }
    let vs = eig.vectors.matmul(&inv_sqrt)?.matmul(&eig.vectors.transpose())?;
    let r = m.matmul(&vs)?;
    let aligned = yc.matmul(&r)?;
    let denom = xc.frobenius_norm();
    if denom == S::zero() {
        return Err(Error::Domain("zero-spread reference in procrustes".into()));
    }
    Ok(aligned.sub(&xc)?.frobenius_norm() / denom)
}
