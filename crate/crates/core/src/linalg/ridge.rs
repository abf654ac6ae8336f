//! Closed-form output-weight solvers.
//!
//! Every model solves `min ‖Dβ − Y‖² + λ‖β‖²`. With `λ > 0` the minimizer is
//! available in two algebraically equal forms:
//!
//! * primal: `β = (DᵀD + λI)⁻¹ DᵀY`, a `p × p` system;
//! * dual:   `β = Dᵀ(DDᵀ + λI)⁻¹ Y`, a `T × T` system.
//!
//! With `λ = 0` the minimum-norm least-squares solution `β = D⁺Y` is used.

use super::decomp::{Cholesky, Svd};
use super::matrix::DenseMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Relative singular-value cutoff for the pseudoinverse, scaled by
/// `max(T, p) · σ_max`.
pub const PINV_RELATIVE_CUTOFF: f64 = 1e-12;

/// Which closed form `ridge_solve` uses.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum RidgeMode {
    /// Primal when the feature count does not exceed the sample count, else dual.
    #[default]
    Auto,
    Primal,
    Dual,
    Pseudoinverse,
}

impl RidgeMode {
    /// Resolves `Auto` against a `samples × features` design matrix.
    pub fn resolve(self, samples: usize, features: usize) -> RidgeMode {
        match self {
            RidgeMode::Auto if features <= samples => RidgeMode::Primal,
            RidgeMode::Auto => RidgeMode::Dual,
            other => other,
        }
    }
}

fn check_inputs<T: Scalar>(d: &DenseMatrix<T>, y: &DenseMatrix<T>) -> Result<()> {
    if d.rows() != y.rows() {
        return Err(Error::DimensionMismatch {
            op: "ridge_solve",
            left: d.shape(),
            right: y.shape(),
        });
    }
    if !d.as_slice().iter().chain(y.as_slice()).all(|v| v.is_finite()) {
        return Err(Error::NonFinite("ridge inputs"));
    }
    Ok(())
}

fn check_lambda<T: Scalar>(lambda: T) -> Result<()> {
    if !lambda.is_finite() {
        return Err(Error::NonFinite("lambda"));
    }
    if lambda < T::zero() {
        return Err(Error::NegativeLambda(lambda.as_f64()));
    }
    Ok(())
}

/// Solves the regularized least-squares problem for `β` (`p × K`).
pub fn ridge_solve<T: Scalar>(
    d: &DenseMatrix<T>,
    y: &DenseMatrix<T>,
    lambda: T,
    mode: RidgeMode,
) -> Result<DenseMatrix<T>> {
    check_inputs(d, y)?;
    check_lambda(lambda)?;
    match mode.resolve(d.rows(), d.cols()) {
        RidgeMode::Pseudoinverse => pinv_solve(d, y),
        _ if lambda == T::zero() => Err(Error::ZeroLambda(0.0)),
        RidgeMode::Primal => primal_solve(&d.t_matmul(d)?, &d.t_matmul(y)?, d, y, lambda),
        RidgeMode::Dual => dual_solve(&d.matmul_t(d)?, d, y, lambda),
        RidgeMode::Auto => unreachable!("resolved above"),
    }
}

/// Minimum-norm least-squares solution `D⁺Y` via the SVD.
pub fn pinv_solve<T: Scalar>(d: &DenseMatrix<T>, y: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    check_inputs(d, y)?;
    pinv_from_svd(&Svd::compute(d)?, d.shape(), y)
}

fn pinv_from_svd<T: Scalar>(
    svd: &Svd<T>,
    shape: (usize, usize),
    y: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    let (t, p) = shape;
    let cutoff = T::of(t.max(p) as f64)
        * svd.max_singular_value()
        * T::of(PINV_RELATIVE_CUTOFF).max(T::eps());
    // Uᵀ Y, then scale row j by 1/σ_j (or drop it), then V ·
    let mut uty = svd.u.t_matmul(y)?;
    let k = y.cols();
    for (j, &s) in svd.sigma.iter().enumerate() {
        let inv = if s > cutoff { T::one() / s } else { T::zero() };
        for v in &mut uty.as_mut_slice()[j * k..(j + 1) * k] {
            *v *= inv;
        }
    }
    svd.v.matmul(&uty)
}

// Both solvers take one step of iterative refinement with the residual formed
// from `D` itself rather than the cached Gram/kernel matrix. For small λ the
// rounding in `DᵀD` is of order eps·σ²_max, comparable to λ, and the plain
// Cholesky answer drifts by that relative amount; the refined answer does not.

fn primal_solve<T: Scalar>(
    gram: &DenseMatrix<T>,
    dty: &DenseMatrix<T>,
    d: &DenseMatrix<T>,
    y: &DenseMatrix<T>,
    lambda: T,
) -> Result<DenseMatrix<T>> {
    let chol = Cholesky::factor(&shift_diagonal(gram, lambda))?;
    let beta = chol.solve(dty)?;
    // r = Dᵀ(Y − Dβ) − λβ
    let r = d.t_matmul(&y.sub(&d.matmul(&beta)?)?)?.sub(&beta.scale(lambda)?)?;
    beta.add(&chol.solve(&r)?)
}

fn dual_solve<T: Scalar>(
    kernel: &DenseMatrix<T>,
    d: &DenseMatrix<T>,
    y: &DenseMatrix<T>,
    lambda: T,
) -> Result<DenseMatrix<T>> {
    let chol = Cholesky::factor(&shift_diagonal(kernel, lambda))?;
    let alpha = chol.solve(y)?;
    // r = Y − D(Dᵀα) − λα
    let r = y.sub(&d.matmul(&d.t_matmul(&alpha)?)?)?.sub(&alpha.scale(lambda)?)?;
    d.t_matmul(&alpha.add(&chol.solve(&r)?)?)
}

fn shift_diagonal<T: Scalar>(a: &DenseMatrix<T>, lambda: T) -> DenseMatrix<T> {
    let mut out = a.clone();
    let n = a.rows();
    for i in 0..n {
        out.as_mut_slice()[i * n + i] += lambda;
    }
    out
}

/// One design/target pair solved for several regularization strengths.
///
/// The Gram (or kernel) matrix and the SVD are computed once and cached, so a
/// λ grid costs one product plus one small factorization per value. Each
/// `solve(λ)` is bitwise identical to `ridge_solve(D, Y, λ, Auto)` for `λ > 0`
/// and to `pinv_solve(D, Y)` for `λ = 0`.
pub struct RidgePath<'a, T> {
    design: &'a DenseMatrix<T>,
    targets: &'a DenseMatrix<T>,
    primal: Option<(DenseMatrix<T>, DenseMatrix<T>)>,
    kernel: Option<DenseMatrix<T>>,
    svd: Option<Svd<T>>,
}

impl<'a, T: Scalar> RidgePath<'a, T> {
    pub fn new(design: &'a DenseMatrix<T>, targets: &'a DenseMatrix<T>) -> Result<Self> {
        check_inputs(design, targets)?;
        Ok(Self {
            design,
            targets,
            primal: None,
            kernel: None,
            svd: None,
        })
    }

    pub fn design(&self) -> &DenseMatrix<T> {
        self.design
    }

    pub fn solve(&mut self, lambda: T) -> Result<DenseMatrix<T>> {
        check_lambda(lambda)?;
        let (d, y) = (self.design, self.targets);
        if lambda == T::zero() {
            if self.svd.is_none() {
                self.svd = Some(Svd::compute(d)?);
            }
            return pinv_from_svd(self.svd.as_ref().unwrap(), d.shape(), y);
        }
        match RidgeMode::Auto.resolve(d.rows(), d.cols()) {
            RidgeMode::Primal => {
                if self.primal.is_none() {
                    self.primal = Some((d.t_matmul(d)?, d.t_matmul(y)?));
                }
                let (gram, dty) = self.primal.as_ref().unwrap();
                primal_solve(gram, dty, d, y, lambda)
            }
            _ => {
                if self.kernel.is_none() {
                    self.kernel = Some(d.matmul_t(d)?);
                }
                dual_solve(self.kernel.as_ref().unwrap(), d, y, lambda)
            }
        }
    }
}
