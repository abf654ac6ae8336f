use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::matrix::{dot, DenseMatrix};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Lower-triangular Cholesky factor of a symmetric positive-definite matrix.
#[derive(Clone, Debug)]
pub struct Cholesky<T> {
    n: usize,
    lower: Vec<T>,
}

impl<T: Scalar> Cholesky<T> {
    /// Factors `a`; only the lower triangle is read.
    pub fn factor(a: &DenseMatrix<T>) -> Result<Self> {
        let n = a.rows();
        if a.cols() != n {
            return Err(Error::DimensionMismatch {
                op: "cholesky",
                left: a.shape(),
                right: a.shape(),
            });
        }
        let mut l = vec![T::zero(); n * n];
        for j in 0..n {
            let row_j = j * n;
            let d = a.get(j, j) - dot(&l[row_j..row_j + j], &l[row_j..row_j + j]);
            if d <= T::zero() || !d.is_finite() {
                return Err(Error::NotPositiveDefinite {
                    pivot: j,
                    value: d.as_f64(),
                });
            }
            let djj = d.sqrt();
            l[row_j + j] = djj;
            for i in j + 1..n {
                let row_i = i * n;
                let s = a.get(i, j) - dot(&l[row_i..row_i + j], &l[row_j..row_j + j]);
                l[row_i + j] = s / djj;
            }
        }
        Ok(Self { n, lower: l })
    }

    /// Solves `A X = B` for every column of `B`.
    pub fn solve(&self, b: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        let n = self.n;
        if b.rows() != n {
            return Err(Error::DimensionMismatch {
                op: "cholesky_solve",
                left: (n, n),
                right: b.shape(),
            });
        }
        let k = b.cols();
        let mut x = b.as_slice().to_vec();
        // forward: L y = b, row-major over all right-hand sides at once
        for i in 0..n {
            for j in 0..i {
                let lij = self.lower[i * n + j];
                if lij != T::zero() {
                    for c in 0..k {
                        let v = x[j * k + c];
                        x[i * k + c] -= lij * v;
                    }
                }
            }
            let lii = self.lower[i * n + i];
            for c in 0..k {
                x[i * k + c] /= lii;
            }
        }
        // backward: Lᵀ x = y
        for i in (0..n).rev() {
            for j in i + 1..n {
                let lji = self.lower[j * n + i];
                if lji != T::zero() {
                    for c in 0..k {
                        let v = x[j * k + c];
                        x[i * k + c] -= lji * v;
                    }
                }
            }
            let lii = self.lower[i * n + i];
            for c in 0..k {
                x[i * k + c] /= lii;
            }
        }
        DenseMatrix::from_raw(n, k, x).checked("cholesky_solve")
    }
}

/// Thin singular value decomposition `A = U diag(sigma) Vᵀ`.
#[derive(Clone, Debug)]
pub struct Svd<T> {
    /// m × r, orthonormal columns (zero columns for zero singular values).
    pub u: DenseMatrix<T>,
    /// Length r = min(m, n), not sorted.
    pub sigma: Vec<T>,
    /// n × r, orthonormal columns.
    pub v: DenseMatrix<T>,
}

impl<T: Scalar> Svd<T> {
    /// One-sided Jacobi (Hestenes) SVD. Accurate for the small and medium
    /// design matrices used here.
    pub fn compute(a: &DenseMatrix<T>) -> Result<Self> {
        if a.rows() >= a.cols() {
            Self::tall(a)
        } else {
            let t = Self::tall(&a.transpose())?;
            Ok(Self {
                u: t.v,
                sigma: t.sigma,
                v: t.u,
            })
        }
    }

    fn tall(a: &DenseMatrix<T>) -> Result<Self> {
        let (m, n) = a.shape();
        let mut cols: Vec<Vec<T>> = (0..n).map(|j| a.column(j)).collect();
        let mut v: Vec<Vec<T>> = (0..n)
            .map(|j| (0..n).map(|i| if i == j { T::one() } else { T::zero() }).collect())
            .collect();
        let eps = T::eps();
        let two = T::one() + T::one();
        for _sweep in 0..80 {
            let mut rotated = false;
            for p in 0..n {
                for q in p + 1..n {
                    let alpha = dot(&cols[p], &cols[p]);
                    let beta = dot(&cols[q], &cols[q]);
                    let gamma = dot(&cols[p], &cols[q]);
                    if gamma == T::zero() || gamma.abs() <= eps * (alpha * beta).sqrt() {
                        continue;
                    }
                    rotated = true;
                    let zeta = (beta - alpha) / (two * gamma);
                    let t = zeta.signum() / (zeta.abs() + (T::one() + zeta * zeta).sqrt());
                    let c = T::one() / (T::one() + t * t).sqrt();
                    let s = c * t;
                    let (lo, hi) = cols.split_at_mut(q);
                    rotate(&mut lo[p], &mut hi[0], c, s);
                    let (lo, hi) = v.split_at_mut(q);
                    rotate(&mut lo[p], &mut hi[0], c, s);
                }
            }
            if !rotated {
                break;
            }
        }
        let sigma: Vec<T> = cols.iter().map(|c| dot(c, c).sqrt()).collect();
        let u = DenseMatrix::from_fn(m, n, |i, j| {
            if sigma[j] > T::zero() {
                cols[j][i] / sigma[j]
            } else {
                T::zero()
            }
        })?;
        let v = DenseMatrix::from_fn(n, n, |i, j| v[j][i])?;
        Ok(Self { u, sigma, v })
    }

    pub fn max_singular_value(&self) -> T {
        self.sigma.iter().fold(T::zero(), |m, &s| m.max(s))
    }
}

fn rotate<T: Scalar>(x: &mut [T], y: &mut [T], c: T, s: T) {
    for (a, b) in x.iter_mut().zip(y.iter_mut()) {
        let (xa, yb) = (*a, *b);
        *a = c * xa - s * yb;
        *b = s * xa + c * yb;
    }
}

/// Estimates the largest eigenvalue of `AᵀA` (the squared spectral norm of
/// `A`) by power iteration from a fixed pseudo-random start.
pub fn spectral_norm_sq<T: Scalar>(a: &DenseMatrix<T>, iterations: usize) -> Result<T> {
    let n = a.cols();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_5eed);
    let mut x =
        DenseMatrix::from_fn(n, 1, |_, _| T::of(rng.gen_range(0.5..1.5)))?;
    let norm = x.frobenius_norm();
    x = x.scale(T::one() / norm)?;
    let mut estimate = T::zero();
    for _ in 0..iterations.max(1) {
        let y = a.t_matmul(&a.matmul(&x)?)?;
        let ny = y.frobenius_norm();
        if ny == T::zero() {
            return Ok(T::zero());
        }
        estimate = ny;
        x = y.scale(T::one() / ny)?;
    }
    Ok(estimate)
}
