//! Dense matrices, factorizations and the closed-form ridge solvers every
//! network shares.

mod decomp;
mod matrix;
mod ridge;

pub use decomp::{spectral_norm_sq, Cholesky, Svd};
pub use matrix::DenseMatrix;
pub use ridge::{pinv_solve, ridge_solve, RidgeMode, RidgePath, PINV_RELATIVE_CUTOFF};
