//! Single-hidden-layer networks: RVFL (hidden features plus direct links) and
//! ELM (hidden features only).

use std::fmt;

use crate::data::{one_hot, Dataset, NormalizationParams};
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, RidgePath};
use crate::network::{
    check_width, draw_for, output_design, Classifier, HiddenLayerParams, NetworkConfig, Prediction,
};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ShallowKind {
    Rvfl,
    Elm,
    /// RVFL whose hidden layer comes from the sparse autoencoder.
    SpRvfl,
}

impl fmt::Display for ShallowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ShallowKind::Rvfl => "rvfl",
            ShallowKind::Elm => "elm",
            ShallowKind::SpRvfl => "sp-rvfl",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ShallowModel<T> {
    pub kind: ShallowKind,
    pub layer: HiddenLayerParams<T>,
    /// `(N [+ d] [+ 1]) × K`; exactly `N × K` for ELM.
    pub beta: DenseMatrix<T>,
    pub config: NetworkConfig<T>,
    pub norm_params: NormalizationParams<T>,
    pub classes: usize,
}

impl<T: Scalar> ShallowModel<T> {
    /// Output design for already-normalized input.
    pub fn design(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        design_for(self.kind, &self.layer, &self.config, x)
    }

    /// Scores `Dβ` for raw input.
    pub fn scores(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        check_width(self.norm_params.feature_count(), x)?;
        let xn = self.norm_params.apply(x)?;
        self.design(&xn)?.matmul(&self.beta)
    }
}

impl<T: Scalar> Classifier<T> for ShallowModel<T> {
    fn predict(&self, x: &DenseMatrix<T>) -> Result<Prediction<T>> {
        Ok(Prediction::from_scores(self.scores(x)?))
    }

    fn class_count(&self) -> usize {
        self.classes
    }
}

fn design_for<T: Scalar>(
    kind: ShallowKind,
    layer: &HiddenLayerParams<T>,
    cfg: &NetworkConfig<T>,
    x: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    let h = layer.forward(x)?;
    match kind {
        ShallowKind::Elm => Ok(h),
        _ => output_design(&[&h], x, cfg.direct_links, cfg.bias_in_output),
    }
}

/// Per-label prediction for a trained model on raw input.
pub fn predict<T: Scalar>(model: &ShallowModel<T>, x: &DenseMatrix<T>) -> Result<Prediction<T>> {
    model.predict(x)
}

pub(crate) fn require_shallow<T: Scalar>(cfg: &NetworkConfig<T>) -> Result<()> {
    cfg.validate()?;
    if cfg.layers != 1 {
        return Err(Error::InvalidConfig(format!(
            "shallow models need layers = 1, got {}",
            cfg.layers
        )));
    }
    Ok(())
}

/// Normalized training inputs and one-hot targets.
pub(crate) struct Prepared<T> {
    pub x: DenseMatrix<T>,
    pub y: DenseMatrix<T>,
    pub norm: NormalizationParams<T>,
    pub classes: usize,
}

pub(crate) fn prepare<T: Scalar>(ds: &Dataset<T>, cfg: &NetworkConfig<T>) -> Result<Prepared<T>> {
    if ds.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let norm = NormalizationParams::fit(ds.features(), cfg.normalization);
    Ok(Prepared {
        x: norm.apply(ds.features())?,
        y: one_hot(ds.labels(), ds.class_count())?,
        norm,
        classes: ds.class_count(),
    })
}

/// RVFL: `D = [H X]` (or `[H 1]` without direct links), one ridge solve.
pub fn train_rvfl<T: Scalar>(ds: &Dataset<T>, cfg: &NetworkConfig<T>) -> Result<ShallowModel<T>> {
    single(train_shallow_path(ds, cfg, ShallowKind::Rvfl, &[cfg.lambda])?)
}

/// ELM: `D = H`, no direct links and no output bias.
pub fn train_elm<T: Scalar>(ds: &Dataset<T>, cfg: &NetworkConfig<T>) -> Result<ShallowModel<T>> {
    single(train_shallow_path(ds, cfg, ShallowKind::Elm, &[cfg.lambda])?)
}

/// Trains one model per λ, sharing the random layer and the Gram matrix.
/// Each returned model equals the one trained directly with that λ.
pub fn train_shallow_path<T: Scalar>(
    ds: &Dataset<T>,
    cfg: &NetworkConfig<T>,
    kind: ShallowKind,
    lambdas: &[T],
) -> Result<Vec<ShallowModel<T>>> {
    if kind == ShallowKind::SpRvfl {
        return Err(Error::InvalidConfig(
            "sparse-pretrained models are trained through the sparse module".into(),
        ));
    }
    require_shallow(cfg)?;
    let prep = prepare(ds, cfg)?;
    let mut rng = cfg.rng();
    let layer = draw_for(&mut rng, cfg, prep.x.cols())?;
    fit_prepared_path(&prep, cfg, kind, layer, lambdas)
}

/// Solves the output weights for a caller-supplied hidden layer.
pub fn fit_with_layer<T: Scalar>(
    ds: &Dataset<T>,
    cfg: &NetworkConfig<T>,
    kind: ShallowKind,
    layer: HiddenLayerParams<T>,
) -> Result<ShallowModel<T>> {
    require_shallow(cfg)?;
    let prep = prepare(ds, cfg)?;
    if layer.input_width() != prep.x.cols() {
        return Err(Error::DimensionMismatch {
            op: "fit_with_layer",
            left: layer.weights.shape(),
            right: prep.x.shape(),
        });
    }
    single(fit_prepared_path(&prep, cfg, kind, layer, &[cfg.lambda])?)
}

pub(crate) fn fit_prepared_path<T: Scalar>(
    prep: &Prepared<T>,
    cfg: &NetworkConfig<T>,
    kind: ShallowKind,
    layer: HiddenLayerParams<T>,
    lambdas: &[T],
) -> Result<Vec<ShallowModel<T>>> {
    let d = design_for(kind, &layer, cfg, &prep.x)?;
    let mut path = RidgePath::new(&d, &prep.y)?;
    lambdas
        .iter()
        .map(|&lambda| {
            Ok(ShallowModel {
                kind,
                layer: layer.clone(),
                beta: path.solve(lambda)?,
                config: NetworkConfig {
                    lambda,
                    ..cfg.clone()
                },
                norm_params: prep.norm.clone(),
                classes: prep.classes,
            })
        })
        .collect()
}

pub(crate) fn single<M>(mut v: Vec<M>) -> Result<M> {
    v.pop().ok_or_else(|| Error::InvalidConfig("no lambda supplied".into()))
}
