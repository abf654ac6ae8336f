//! Sparse-pretrained hidden layers.
//!
//! A random hidden map `H̃ = g(XW̃ + b̃)` is used as the dictionary of an
//! ℓ1-regularized linear autoencoder, `min ‖H̃ϖ − X‖² + l1·‖ϖ‖₁`, solved by
//! FISTA. The learned `ϖ` (N × d) becomes the hidden weights (applied as
//! `Xϖᵀ`), and each hidden bias is the mean of its row of `ϖ`.

use rand::Rng;

use crate::activation::Activation;
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{spectral_norm_sq, DenseMatrix};
use crate::network::{draw_for, HiddenLayerParams, NetworkConfig};
use crate::scalar::Scalar;
use crate::shallow::{fit_prepared_path, prepare, require_shallow, single, ShallowKind, ShallowModel};

/// Power-iteration steps for the Lipschitz estimate.
pub const LIPSCHITZ_POWER_ITERATIONS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepSize<T> {
    /// `1 / L_f` with `L_f = 2 σ_max(A)²`.
    Lipschitz,
    /// Fixed step on the full gradient `2Aᵀ(Aϖ − B)`.
    Fixed(T),
}

#[derive(Clone, Debug, PartialEq)]
pub struct FistaConfig<T> {
    pub l1_weight: T,
    pub max_iterations: usize,
    /// Stop once the largest entry change between iterates falls below this
    /// and the iterate's ℓ1 optimality residual does too.
    pub tolerance: T,
    pub step: StepSize<T>,
}

impl<T: Scalar> Default for FistaConfig<T> {
    fn default() -> Self {
        Self {
            l1_weight: T::one(),
            max_iterations: 500,
            tolerance: T::of(1e-6),
            step: StepSize::Lipschitz,
        }
    }
}

impl<T: Scalar> FistaConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > T::zero()) {
            return Err(Error::InvalidConfig("FISTA tolerance must be positive".into()));
        }
        if !(self.l1_weight >= T::zero()) || !self.l1_weight.is_finite() {
            return Err(Error::InvalidConfig("l1 weight must be finite and >= 0".into()));
        }
        if let StepSize::Fixed(s) = self.step {
            if !(s > T::zero()) || !s.is_finite() {
                return Err(Error::InvalidConfig(format!("FISTA step size must be positive, got {s}")));
            }
        }
        Ok(())
    }
}

/// FISTA output.
#[derive(Clone, Debug, PartialEq)]
pub struct FistaResult<T> {
    pub solution: DenseMatrix<T>,
    /// Objective at the starting point (ϖ = 0) and after every iteration.
    pub objective_trace: Vec<T>,
    pub iterations: usize,
    /// Whether the tolerance test passed before `max_iterations` ran out.
    pub converged: bool,
}

/// Autoencoder weights, derived biases and the objective history.
#[derive(Clone, Debug, PartialEq)]
pub struct SparsePretrainResult<T> {
    /// `N × d`.
    pub varpi: DenseMatrix<T>,
    pub b_hat: Vec<T>,
    pub objective_trace: Vec<T>,
}

/// `‖Aϖ − B‖² + l1·‖ϖ‖₁`.
pub fn lasso_objective<T: Scalar>(
    a: &DenseMatrix<T>,
    b: &DenseMatrix<T>,
    varpi: &DenseMatrix<T>,
    l1_weight: T,
) -> Result<T> {
    let r = a.matmul(varpi)?.sub(b)?;
    let fit: T = r.as_slice().iter().map(|&v| v * v).sum();
    let l1: T = varpi.as_slice().iter().map(|v| v.abs()).sum();
    Ok(fit + l1_weight * l1)
}

/// Largest violation of the ℓ1 optimality conditions at `ϖ`, with
/// `G = 2Aᵀ(Aϖ − B)`: `max(0, |G_ij| − l1)` where `ϖ_ij = 0`, and
/// `|G_ij + l1·sign(ϖ_ij)|` elsewhere.
pub fn l1_optimality_residual<T: Scalar>(
    a: &DenseMatrix<T>,
    b: &DenseMatrix<T>,
    varpi: &DenseMatrix<T>,
    l1_weight: T,
) -> Result<T> {
    let half_grad = a.t_matmul(&a.matmul(varpi)?.sub(b)?)?;
    Ok(residual_from_half_gradient(&half_grad, varpi, l1_weight))
}

fn residual_from_half_gradient<T: Scalar>(half_grad: &DenseMatrix<T>, varpi: &DenseMatrix<T>, l1_weight: T) -> T {
    let two = T::of(2.0);
    half_grad
        .as_slice()
        .iter()
        .zip(varpi.as_slice())
        .map(|(&h, &w)| {
            let g = two * h;
            if w == T::zero() {
                (g.abs() - l1_weight).max(T::zero())
            } else {
                (g + l1_weight * w.signum()).abs()
            }
        })
        .fold(T::zero(), T::max)
}

#[inline]
fn soft_threshold<T: Scalar>(v: T, threshold: T) -> T {
    if v > threshold {
        v - threshold
    } else if v < -threshold {
        v + threshold
    } else {
        T::zero()
    }
}

/// Accelerated proximal gradient for `min ‖Aϖ − B‖² + l1·‖ϖ‖₁`, all columns of
/// `B` at once, starting from `ϖ = 0`.
pub fn fista_l1<T: Scalar>(a: &DenseMatrix<T>, b: &DenseMatrix<T>, cfg: &FistaConfig<T>) -> Result<FistaResult<T>> {
    cfg.validate()?;
    if a.rows() != b.rows() {
        return Err(Error::DimensionMismatch {
            op: "fista_l1",
            left: a.shape(),
            right: b.shape(),
        });
    }
    if !a.as_slice().iter().chain(b.as_slice()).all(|v| v.is_finite()) {
        return Err(Error::NonFinite("fista inputs"));
    }
    let two = T::of(2.0);
    let step = match cfg.step {
        StepSize::Fixed(s) => s,
        StepSize::Lipschitz => {
            let lf = two * spectral_norm_sq(a, LIPSCHITZ_POWER_ITERATIONS)?;
            if !(lf > T::zero()) {
                return Err(Error::InvalidConfig("zero step size: dictionary matrix is zero".into()));
            }
            T::one() / lf
        }
    };
    let threshold = cfg.l1_weight * step;
    let gram = a.t_matmul(a)?;
    let atb = a.t_matmul(b)?;

    let (n, d) = (a.cols(), b.cols());
    let mut x = DenseMatrix::zeros(n, d)?;
    let mut y = x.clone();
    let mut t = T::one();
    let mut trace = vec![lasso_objective(a, b, &x, cfg.l1_weight)?];
    let mut iterations = 0;
    let mut converged = false;
    for _ in 0..cfg.max_iterations {
        iterations += 1;
        // gradient at y: 2(AᵀA y − AᵀB)
        let grad = gram.matmul(&y)?.sub(&atb)?;
        let mut next = y.clone();
        for (v, &g) in next.as_mut_slice().iter_mut().zip(grad.as_slice()) {
            *v = soft_threshold(*v - step * two * g, threshold);
        }
        let t_next = (T::one() + (T::one() + T::of(4.0) * t * t).sqrt()) / two;
        let momentum = (t - T::one()) / t_next;
        let mut change = T::zero();
        let mut y_next = next.clone();
        for ((yv, &nv), &xv) in y_next.as_mut_slice().iter_mut().zip(next.as_slice()).zip(x.as_slice()) {
            let delta = nv - xv;
            change = change.max(delta.abs());
            *yv = nv + momentum * delta;
        }
        x = next.checked("fista iterate")?;
        y = y_next;
        t = t_next;
        trace.push(lasso_objective(a, b, &x, cfg.l1_weight)?);
        // A small step between iterates alone does not certify optimality: the
        // residual is roughly L_f times that step, so it is checked as well.
        if change < cfg.tolerance {
            let half_grad = gram.matmul(&x)?.sub(&atb)?;
            if residual_from_half_gradient(&half_grad, &x, cfg.l1_weight) < cfg.tolerance {
                converged = true;
                break;
            }
        }
    }
    Ok(FistaResult {
        solution: x,
        objective_trace: trace,
        iterations,
        converged,
    })
}

/// `b̂_i = (Σ_j ϖ_ij) / d`.
pub fn sp_biases<T: Scalar>(varpi: &DenseMatrix<T>) -> Vec<T> {
    let d = T::of(varpi.cols() as f64);
    (0..varpi.rows())
        .map(|i| varpi.row(i).iter().copied().sum::<T>() / d)
        .collect()
}

/// `H = g(Xϖᵀ + b̂)`.
pub fn sp_hidden<T: Scalar>(
    x: &DenseMatrix<T>,
    varpi: &DenseMatrix<T>,
    b_hat: &[T],
    activation: Activation,
) -> Result<DenseMatrix<T>> {
    if varpi.rows() != b_hat.len() {
        return Err(Error::DimensionMismatch {
            op: "sp_hidden",
            left: varpi.shape(),
            right: (1, b_hat.len()),
        });
    }
    let pre = x.matmul_t(varpi)?.add_row_vector(b_hat)?;
    activation.apply_matrix(&pre)
}

/// Learns one hidden layer for `input`: draws a random map from `rng`,
/// solves the autoencoder against `input`, and returns the layer
/// `g(input·ϖᵀ + b̂)` together with the autoencoder result.
pub fn pretrain_layer<T: Scalar, R: Rng>(
    rng: &mut R,
    input: &DenseMatrix<T>,
    cfg: &NetworkConfig<T>,
    fcfg: &FistaConfig<T>,
) -> Result<(HiddenLayerParams<T>, SparsePretrainResult<T>)> {
    let random = draw_for(rng, cfg, input.cols())?;
    let h_tilde = random.forward(input)?;
    let fit = fista_l1(&h_tilde, input, fcfg)?;
    let b_hat = sp_biases(&fit.solution);
    let layer = HiddenLayerParams::new(fit.solution.transpose(), b_hat.clone(), cfg.activation)?;
    Ok((
        layer,
        SparsePretrainResult {
            varpi: fit.solution,
            b_hat,
            objective_trace: fit.objective_trace,
        },
    ))
}

/// SP-RVFL: pretrained hidden layer, then the RVFL output solve.
pub fn train_sp_rvfl<T: Scalar>(
    ds: &Dataset<T>,
    cfg: &NetworkConfig<T>,
    fcfg: &FistaConfig<T>,
) -> Result<ShallowModel<T>> {
    single(train_sp_rvfl_path(ds, cfg, fcfg, &[cfg.lambda])?)
}

/// SP-RVFL for several λ sharing one pretraining run.
pub fn train_sp_rvfl_path<T: Scalar>(
    ds: &Dataset<T>,
    cfg: &NetworkConfig<T>,
    fcfg: &FistaConfig<T>,
    lambdas: &[T],
) -> Result<Vec<ShallowModel<T>>> {
    require_shallow(cfg)?;
    let prep = prepare(ds, cfg)?;
    let mut rng = cfg.rng();
    let (layer, _) = pretrain_layer(&mut rng, &prep.x, cfg, fcfg)?;
    fit_prepared_path(&prep, cfg, ShallowKind::SpRvfl, layer, lambdas)
}
