//! Deep RVFL: a stack of fixed random layers, each fed only by the previous
//! layer's output, with every layer's features (and the raw input) joined
//! into one output design solved by a single ridge regression.

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, RidgePath};
use crate::network::{
    check_width, draw_for, output_design, Classifier, HiddenLayerParams, NetworkConfig, Prediction,
};
use crate::scalar::Scalar;
use crate::shallow::{prepare, single};
use crate::sparse::{pretrain_layer, FistaConfig};
use crate::data::NormalizationParams;

#[derive(Clone, Debug, PartialEq)]
pub struct DeepModel<T> {
    pub layers: Vec<HiddenLayerParams<T>>,
    /// `(N·L + d [+1]) × K`, or `(N·L + 1) × K` without direct links.
    pub beta: DenseMatrix<T>,
    pub config: NetworkConfig<T>,
    pub norm_params: NormalizationParams<T>,
    pub classes: usize,
    /// Layers learned by the sparse autoencoder rather than drawn at random.
    pub pretrained: bool,
}

impl<T: Scalar> DeepModel<T> {
    /// Output design `[H¹ … Hᴸ X]` for normalized input.
    pub fn design(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        deep_design(&forward_stack(x, &self.layers)?, x, &self.config)
    }

    pub fn scores(&self, x: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        check_width(self.norm_params.feature_count(), x)?;
        let xn = self.norm_params.apply(x)?;
        self.design(&xn)?.matmul(&self.beta)
    }
}

impl<T: Scalar> Classifier<T> for DeepModel<T> {
    fn predict(&self, x: &DenseMatrix<T>) -> Result<Prediction<T>> {
        Ok(Prediction::from_scores(self.scores(x)?))
    }

    fn class_count(&self) -> usize {
        self.classes
    }
}

/// `H¹ = g(XW¹ + b¹)`, `Hˡ = g(Hˡ⁻¹Wˡ + bˡ)`; returns every layer's output.
pub fn forward_stack<T: Scalar>(x: &DenseMatrix<T>, layers: &[HiddenLayerParams<T>]) -> Result<Vec<DenseMatrix<T>>> {
    let mut out: Vec<DenseMatrix<T>> = Vec::with_capacity(layers.len());
    for layer in layers {
        let h = layer.forward(out.last().unwrap_or(x))?;
        out.push(h);
    }
    Ok(out)
}

fn deep_design<T: Scalar>(hidden: &[DenseMatrix<T>], x: &DenseMatrix<T>, cfg: &NetworkConfig<T>) -> Result<DenseMatrix<T>> {
    let refs: Vec<&DenseMatrix<T>> = hidden.iter().collect();
    output_design(&refs, x, cfg.direct_links, cfg.bias_in_output)
}

pub fn predict_deep<T: Scalar>(model: &DeepModel<T>, x: &DenseMatrix<T>) -> Result<Prediction<T>> {
    model.predict(x)
}

fn require_layers<T: Scalar>(cfg: &NetworkConfig<T>) -> Result<()> {
    cfg.validate()?;
    if cfg.layers == 0 {
        return Err(Error::InvalidConfig("deep models need at least one layer".into()));
    }
    Ok(())
}

/// dRVFL with the configured direct-link setting; with direct links off this
/// is the (-O) variant, `D = [H¹ … Hᴸ 1]`.
pub fn train_drvfl<T: Scalar>(ds: &Dataset<T>, cfg: &NetworkConfig<T>) -> Result<DeepModel<T>> {
    single(train_drvfl_path(ds, cfg, &[cfg.lambda])?)
}

/// dRVFL for several λ sharing one forward pass and Gram matrix.
pub fn train_drvfl_path<T: Scalar>(ds: &Dataset<T>, cfg: &NetworkConfig<T>, lambdas: &[T]) -> Result<Vec<DeepModel<T>>> {
    require_layers(cfg)?;
    let prep = prepare(ds, cfg)?;
    let mut rng = cfg.rng();
    let mut layers = Vec::with_capacity(cfg.layers);
    let mut width = prep.x.cols();
    for _ in 0..cfg.layers {
        layers.push(draw_for(&mut rng, cfg, width)?);
        width = cfg.hidden_nodes;
    }
    solve_deep(&prep.x, &prep.y, prep.norm, prep.classes, cfg, layers, false, lambdas)
}

/// dSP-RVFL: each layer is pretrained by the sparse autoencoder on that
/// layer's own input (X for the first, the previous layer's output after).
pub fn train_dsp_rvfl<T: Scalar>(ds: &Dataset<T>, cfg: &NetworkConfig<T>, fcfg: &FistaConfig<T>) -> Result<DeepModel<T>> {
    single(train_dsp_rvfl_path(ds, cfg, fcfg, &[cfg.lambda])?)
}

pub fn train_dsp_rvfl_path<T: Scalar>(
    ds: &Dataset<T>,
    cfg: &NetworkConfig<T>,
    fcfg: &FistaConfig<T>,
    lambdas: &[T],
) -> Result<Vec<DeepModel<T>>> {
    require_layers(cfg)?;
    let prep = prepare(ds, cfg)?;
    let mut rng = cfg.rng();
    let mut layers = Vec::with_capacity(cfg.layers);
    let mut input = prep.x.clone();
    for _ in 0..cfg.layers {
        let (layer, _) = pretrain_layer(&mut rng, &input, cfg, fcfg)?;
        input = layer.forward(&input)?;
        layers.push(layer);
    }
    solve_deep(&prep.x, &prep.y, prep.norm, prep.classes, cfg, layers, true, lambdas)
}

#[allow(clippy::too_many_arguments)]
fn solve_deep<T: Scalar>(
    x: &DenseMatrix<T>,
    y: &DenseMatrix<T>,
    norm: NormalizationParams<T>,
    classes: usize,
    cfg: &NetworkConfig<T>,
    layers: Vec<HiddenLayerParams<T>>,
    pretrained: bool,
    lambdas: &[T],
) -> Result<Vec<DeepModel<T>>> {
    let hidden = forward_stack(x, &layers)?;
    let d = deep_design(&hidden, x, cfg)?;
    drop(hidden);
    let mut path = RidgePath::new(&d, y)?;
    lambdas
        .iter()
        .map(|&lambda| {
            Ok(DeepModel {
                layers: layers.clone(),
                beta: path.solve(lambda)?,
                config: NetworkConfig {
                    lambda,
                    ..cfg.clone()
                },
                norm_params: norm.clone(),
                classes,
                pretrained,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::Activation;
    use crate::data::{accuracy, one_hot, synthetic};
    use crate::network::design_width;
    use crate::shallow::train_rvfl;
    use crate::sparse::train_sp_rvfl;

    fn cfg(nodes: usize, layers: usize) -> NetworkConfig<f64> {
        NetworkConfig {
            hidden_nodes: nodes,
            layers,
            lambda: 0.25,
            seed: 99,
            ..Default::default()
        }
    }

    #[test]
    fn single_layer_collapses_to_rvfl() {
        let ds = synthetic::gaussian_blobs::<f64>(80, 5, 3, 0.5, 1).unwrap();
        let deep = train_drvfl(&ds, &cfg(20, 1)).unwrap();
        let shallow = train_rvfl(&ds, &cfg(20, 1)).unwrap();
        assert_eq!(deep.beta, shallow.beta);
        assert_eq!(deep.layers[0], shallow.layer);
        assert_eq!(
            deep.predict(ds.features()).unwrap(),
            crate::network::Classifier::predict(&shallow, ds.features()).unwrap()
        );
    }

    #[test]
    fn width_law() {
        let ds = synthetic::gaussian_blobs::<f64>(30, 10, 2, 0.5, 2).unwrap();
        let m = train_drvfl(&ds, &cfg(100, 10)).unwrap();
        assert_eq!(m.beta.shape(), (1010, 2));
        let mut no_dl = cfg(7, 3);
        no_dl.direct_links = false;
        assert_eq!(train_drvfl(&ds, &no_dl).unwrap().beta.rows(), 22);
        assert_eq!(design_width(21, 10, false, false), 22);
    }

    #[test]
    fn forward_stack_cases() {
        let x = DenseMatrix::from_rows(&[[0.2, -0.4], [1.0, 0.5]]).unwrap();
        let c = cfg(3, 3);
        let mut rng = c.rng();
        let layers = vec![
            draw_for(&mut rng, &c, 2).unwrap(),
            draw_for(&mut rng, &c, 3).unwrap(),
            draw_for(&mut rng, &c, 3).unwrap(),
        ];
        let hs = forward_stack(&x, &layers).unwrap();
        // scalar-loop replay
        let mut input: Vec<Vec<f64>> = (0..2).map(|i| x.row(i).to_vec()).collect();
        for (l, layer) in layers.iter().enumerate() {
            let mut next = vec![vec![0.0; 3]; 2];
            for t in 0..2 {
                for j in 0..3 {
                    let mut pre = layer.biases[j];
                    for (k, v) in input[t].iter().enumerate() {
                        pre += v * layer.weights.get(k, j);
                    }
                    next[t][j] = 1.0 / (1.0 + (-pre).exp());
                    assert!((hs[l].get(t, j) - next[t][j]).abs() < 1e-15);
                }
            }
            input = next;
        }

        let zero = DenseMatrix::zeros(2, 2).unwrap();
        let no_bias = HiddenLayerParams::new(layers[0].weights.clone(), vec![0.0; 3], Activation::Sigmoid).unwrap();
        let h = forward_stack(&zero, &[no_bias]).unwrap();
        assert!(h[0].as_slice().iter().all(|&v| v == 0.5));
        assert_eq!(forward_stack(&x, &layers[..1]).unwrap()[0], layers[0].forward(&x).unwrap());
    }

    #[test]
    fn design_is_block_concatenation() {
        let ds = synthetic::gaussian_blobs::<f64>(25, 4, 2, 0.5, 3).unwrap();
        let m = train_drvfl(&ds, &cfg(6, 3)).unwrap();
        let xn = m.norm_params.apply(ds.features()).unwrap();
        let d = m.design(&xn).unwrap();
        let h1 = m.layers[0].forward(&xn).unwrap();
        let h2 = m.layers[1].forward(&h1).unwrap();
        let h3 = m.layers[2].forward(&h2).unwrap();
        for t in 0..25 {
            let mut row = Vec::new();
            row.extend_from_slice(h1.row(t));
            row.extend_from_slice(h2.row(t));
            row.extend_from_slice(h3.row(t));
            row.extend_from_slice(xn.row(t));
            assert_eq!(d.row(t), row.as_slice());
        }
        // definitional replay of scores
        let scores = m.scores(ds.features()).unwrap();
        assert!(scores.max_abs_diff(&d.matmul(&m.beta).unwrap()).unwrap() < 1e-10);
        let p = m.predict(ds.features()).unwrap();
        let hits = (0..25).filter(|&i| p.labels[i] == ds.labels()[i]).count();
        assert_eq!(accuracy(&p.labels, ds.labels()), hits as f64 / 25.0);
    }

    #[test]
    fn hidden_features_ignore_lambda() {
        let ds = synthetic::gaussian_blobs::<f64>(30, 3, 2, 0.5, 4).unwrap();
        let a = train_drvfl(&ds, &cfg(8, 4)).unwrap();
        let mut c = cfg(8, 4);
        c.lambda = 64.0;
        let b = train_drvfl(&ds, &c).unwrap();
        assert_eq!(a.layers, b.layers);
        let xn = a.norm_params.apply(ds.features()).unwrap();
        assert_eq!(forward_stack(&xn, &a.layers).unwrap(), forward_stack(&xn, &b.layers).unwrap());
        assert_ne!(a.beta, b.beta);
    }

    #[test]
    fn sparse_deep_single_layer_is_sp_rvfl() {
        let ds = synthetic::gaussian_blobs::<f64>(40, 4, 2, 0.5, 5).unwrap();
        let f = FistaConfig::default();
        let deep = train_dsp_rvfl(&ds, &cfg(10, 1), &f).unwrap();
        let shallow = train_sp_rvfl(&ds, &cfg(10, 1), &f).unwrap();
        assert_eq!(deep.beta, shallow.beta);
        assert_eq!(deep.layers[0], shallow.layer);
        assert_eq!(deep, train_dsp_rvfl(&ds, &cfg(10, 1), &f).unwrap());
    }

    #[test]
    fn sparse_deep_second_layer_reconstructs_first_output() {
        let ds = synthetic::gaussian_blobs::<f64>(30, 3, 2, 0.5, 6).unwrap();
        let c = cfg(5, 2);
        let f = FistaConfig::default();
        let model = train_dsp_rvfl(&ds, &c, &f).unwrap();
        // replay the pipeline: layer 1, then layer 2 pretrained on layer 1's output
        let xn = model.norm_params.apply(ds.features()).unwrap();
        let mut rng = c.rng();
        let (l1, _) = pretrain_layer(&mut rng, &xn, &c, &f).unwrap();
        let h1 = l1.forward(&xn).unwrap();
        let (l2, fit) = pretrain_layer(&mut rng, &h1, &c, &f).unwrap();
        assert_eq!(model.layers, vec![l1, l2]);
        assert_eq!(fit.varpi.cols(), h1.cols());
        let y = one_hot::<f64>(ds.labels(), 2).unwrap();
        assert_eq!(model.beta.cols(), y.cols());
    }
}
