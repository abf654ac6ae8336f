//! Randomized neural networks with closed-form output layers.
//!
//! The hidden layers of every model here are random (or, for the sparse
//! variants, learned by an unsupervised ℓ1 autoencoder) and stay fixed; only
//! the output weights are fitted, by ridge regression or the pseudoinverse.
//!
//! | family | entry point |
//! |---|---|
//! | RVFL, ELM | [`train_rvfl`], [`train_elm`] |
//! | SP-RVFL | [`train_sp_rvfl`] |
//! | dRVFL, dSP-RVFL | [`train_drvfl`], [`train_dsp_rvfl`] |
//! | edRVFL, edSP-RVFL | [`train_edrvfl`], [`train_edsp_rvfl`] |
//! | true ensemble of dRVFLs | [`train_tedrvfl`] |
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the aliases below
//! fix the precision.
//!
//! ```
//! use randlink::{data::synthetic, train_edrvfl, Classifier, NetworkConfig};
//!
//! let ds = synthetic::two_spirals::<f64>(200, 1.5, 0.02, 7).unwrap();
//! let cfg = NetworkConfig { hidden_nodes: 50, layers: 4, seed: 1, ..Default::default() };
//! let model = train_edrvfl(&ds, &cfg).unwrap();
//! let pred = model.predict(ds.features()).unwrap();
//! assert_eq!(pred.labels.len(), 200);
//! ```

// `!(x > 0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![cfg_attr(test, allow(clippy::needless_range_loop))]

pub mod activation;
pub mod data;
pub mod deep;
pub mod ensemble;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod method;
pub mod network;
pub mod scalar;
pub mod shallow;
pub mod sparse;
pub mod stats;

pub use activation::Activation;
pub use data::{Dataset, NormMethod, NormalizationParams};
pub use deep::{train_drvfl, train_dsp_rvfl, DeepModel};
pub use ensemble::{ensemble_predict, train_edrvfl, train_edsp_rvfl, train_tedrvfl, CombineRule, EnsembleDeepModel, TrueEnsemble};
pub use error::{Error, Result};
pub use harness::{cross_validate, grid_search, EvalReport, GridSpec};
pub use linalg::{ridge_solve, DenseMatrix, RidgeMode};
pub use method::{MethodId, MethodSpec, Model};
pub use network::{Classifier, HiddenLayerParams, NetworkConfig, Prediction};
pub use scalar::Scalar;
pub use shallow::{train_elm, train_rvfl, ShallowKind, ShallowModel};
pub use sparse::{fista_l1, train_sp_rvfl, FistaConfig};

pub type Matrix = DenseMatrix<f64>;
pub type Matrix32 = DenseMatrix<f32>;
pub type Dataset64 = Dataset<f64>;
pub type Dataset32 = Dataset<f32>;
pub type Config = NetworkConfig<f64>;
pub type Config32 = NetworkConfig<f32>;
pub type Spec = MethodSpec<f64>;
pub type Spec32 = MethodSpec<f32>;
