//! Configuration and building blocks shared by every network family.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::activation::Activation;
use crate::data::{argmax_rows, NormMethod};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalar::Scalar;

/// Hyperparameters of a randomized network.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkConfig<T> {
    /// Hidden nodes per layer (N).
    pub hidden_nodes: usize,
    /// Hidden layer count (L); 1 for shallow models.
    pub layers: usize,
    /// Ridge strength λ = 1/C; 0 selects the pseudoinverse.
    pub lambda: T,
    /// Optional per-layer λ for the ensemble-deep models; overrides `lambda`.
    pub layer_lambdas: Option<Vec<T>>,
    /// Feed the raw input to the output layer (and, for the ensemble-deep
    /// models, to every hidden layer after the first).
    pub direct_links: bool,
    /// Append a constant column to the output design even with direct links.
    pub bias_in_output: bool,
    /// Draw hidden-node biases; when off they are fixed at zero.
    pub hidden_bias: bool,
    pub activation: Activation,
    pub seed: u64,
    pub weight_range: (T, T),
    pub bias_range: (T, T),
    pub normalization: NormMethod,
}

impl<T: Scalar> Default for NetworkConfig<T> {
    fn default() -> Self {
        Self {
            hidden_nodes: 100,
            layers: 1,
            lambda: T::one(),
            layer_lambdas: None,
            direct_links: true,
            bias_in_output: false,
            hidden_bias: true,
            activation: Activation::Sigmoid,
            seed: 0,
            weight_range: (-T::one(), T::one()),
            bias_range: (T::zero(), T::one()),
            normalization: NormMethod::MinMax,
        }
    }
}

impl<T: Scalar> NetworkConfig<T> {
    /// Sets λ = 1/C.
    pub fn with_c(mut self, c: T) -> Self {
        self.lambda = T::one() / c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_nodes == 0 {
            return Err(Error::InvalidConfig("hidden_nodes must be at least 1".into()));
        }
        if self.layers == 0 {
            return Err(Error::InvalidConfig("layers must be at least 1".into()));
        }
        check_lambda(self.lambda)?;
        if let Some(ls) = &self.layer_lambdas {
            if ls.len() != self.layers {
                return Err(Error::InvalidConfig(format!(
                    "{} layer lambdas for {} layers",
                    ls.len(),
                    self.layers
                )));
            }
            for &l in ls {
                check_lambda(l)?;
            }
        }
        check_range(self.weight_range)?;
        check_range(self.bias_range)?;
        Ok(())
    }

    /// λ used for the output solve attached to layer `l` (0-based).
    pub fn lambda_for_layer(&self, l: usize) -> T {
        self.layer_lambdas
            .as_ref()
            .and_then(|ls| ls.get(l).copied())
            .unwrap_or(self.lambda)
    }

    pub(crate) fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

fn check_lambda<T: Scalar>(lambda: T) -> Result<()> {
    if !lambda.is_finite() || lambda < T::zero() {
        return Err(Error::InvalidConfig(format!("lambda must be finite and >= 0, got {lambda}")));
    }
    Ok(())
}

fn check_range<T: Scalar>((lo, hi): (T, T)) -> Result<()> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidRange {
            lo: lo.as_f64(),
            hi: hi.as_f64(),
        });
    }
    Ok(())
}

/// Fixed parameters of one hidden layer: `H = g(input · W + b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct HiddenLayerParams<T> {
    /// `input_width × N`.
    pub weights: DenseMatrix<T>,
    /// Length N.
    pub biases: Vec<T>,
    pub activation: Activation,
}

impl<T: Scalar> HiddenLayerParams<T> {
    pub fn new(weights: DenseMatrix<T>, biases: Vec<T>, activation: Activation) -> Result<Self> {
        if biases.len() != weights.cols() {
            return Err(Error::DimensionMismatch {
                op: "hidden layer biases",
                left: weights.shape(),
                right: (1, biases.len()),
            });
        }
        Ok(Self {
            weights,
            biases,
            activation,
        })
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    pub fn input_width(&self) -> usize {
        self.weights.rows()
    }

    pub fn width(&self) -> usize {
        self.weights.cols()
    }

    pub fn forward(&self, input: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
        let pre = input.matmul(&self.weights)?.add_row_vector(&self.biases)?;
        self.activation.apply_matrix(&pre)
    }
}

/// Draws a `d_in × N` weight matrix then `N` biases, each entry uniform on its
/// range, from a generator seeded with `seed`.
pub fn random_layer<T: Scalar>(
    d_in: usize,
    nodes: usize,
    seed: u64,
    weight_range: (T, T),
    bias_range: (T, T),
) -> Result<HiddenLayerParams<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    draw_layer(&mut rng, d_in, nodes, weight_range, bias_range, true, Activation::Sigmoid)
}

/// Draws a layer from an existing stream; every model draws its layers in
/// order (weights, then biases) from one generator seeded by the config.
pub(crate) fn draw_layer<T: Scalar, R: Rng>(
    rng: &mut R,
    d_in: usize,
    nodes: usize,
    weight_range: (T, T),
    bias_range: (T, T),
    with_bias: bool,
    activation: Activation,
) -> Result<HiddenLayerParams<T>> {
    check_range(weight_range)?;
    check_range(bias_range)?;
    let uniform = |rng: &mut R, (lo, hi): (T, T)| {
        let u: f64 = rng.gen();
        lo + (hi - lo) * T::of(u)
    };
    let weights = DenseMatrix::from_fn(d_in, nodes, |_, _| uniform(rng, weight_range))?;
    let mut biases: Vec<T> = (0..nodes).map(|_| uniform(rng, bias_range)).collect();
    if !with_bias {
        biases.iter_mut().for_each(|b| *b = T::zero());
    }
    HiddenLayerParams::new(weights, biases, activation)
}

pub(crate) fn draw_for<T: Scalar, R: Rng>(
    rng: &mut R,
    cfg: &NetworkConfig<T>,
    d_in: usize,
) -> Result<HiddenLayerParams<T>> {
    draw_layer(
        rng,
        d_in,
        cfg.hidden_nodes,
        cfg.weight_range,
        cfg.bias_range,
        cfg.hidden_bias,
        cfg.activation,
    )
}

/// Output-layer design `[H₁ … H_k X 1]`: the raw input when direct links are
/// on, and a constant column when direct links are off or a bias is requested.
pub fn output_design<T: Scalar>(
    hidden: &[&DenseMatrix<T>],
    input: &DenseMatrix<T>,
    direct_links: bool,
    bias_in_output: bool,
) -> Result<DenseMatrix<T>> {
    let ones = DenseMatrix::filled(input.rows(), 1, T::one())?;
    let mut blocks: Vec<&DenseMatrix<T>> = hidden.to_vec();
    if direct_links {
        blocks.push(input);
    }
    if bias_in_output || !direct_links {
        blocks.push(&ones);
    }
    DenseMatrix::hconcat(&blocks)
}

/// Output-design column count for `hidden_cols` hidden features.
pub fn design_width(hidden_cols: usize, d: usize, direct_links: bool, bias_in_output: bool) -> usize {
    hidden_cols + if direct_links { d } else { 0 } + usize::from(bias_in_output || !direct_links)
}

/// Labels plus the raw score matrix they were read from.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction<T> {
    pub labels: Vec<usize>,
    pub scores: DenseMatrix<T>,
}

impl<T: Scalar> Prediction<T> {
    pub fn from_scores(scores: DenseMatrix<T>) -> Self {
        Self {
            labels: argmax_rows(&scores),
            scores,
        }
    }
}

/// Anything that maps raw (unnormalized) feature rows to class predictions.
pub trait Classifier<T: Scalar> {
    fn predict(&self, x: &DenseMatrix<T>) -> Result<Prediction<T>>;

    fn class_count(&self) -> usize;
}

pub(crate) fn check_width(expected: usize, x: &DenseMatrix<impl Scalar>) -> Result<()> {
    if x.cols() != expected {
        return Err(Error::DimensionMismatch {
            op: "predict",
            left: (0, expected),
            right: x.shape(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_layer() {
        let a = random_layer::<f64>(4, 7, 42, (-1.0, 1.0), (0.0, 1.0)).unwrap();
        let b = random_layer::<f64>(4, 7, 42, (-1.0, 1.0), (0.0, 1.0)).unwrap();
        assert_eq!(a, b);
        let c = random_layer::<f64>(4, 7, 43, (-1.0, 1.0), (0.0, 1.0)).unwrap();
        assert_ne!(a, c);
        assert!(a.weights.as_slice().iter().all(|&w| (-1.0..=1.0).contains(&w)));
        assert!(a.biases.iter().all(|&b| (0.0..=1.0).contains(&b)));
    }

    #[test]
    fn uniform_mean_within_three_standard_errors() {
        let layer = random_layer::<f64>(1000, 100, 7, (-1.0, 3.0), (0.0, 1.0)).unwrap();
        let w = layer.weights.as_slice();
        let n = w.len() as f64;
        let mean = w.iter().sum::<f64>() / n;
        // uniform on [−1, 3]: mean 1, sd 4/√12
        let se = 4.0 / 12f64.sqrt() / n.sqrt();
        assert!((mean - 1.0).abs() < 3.0 * se, "mean {mean}, se {se}");
    }

    #[test]
    fn invalid_ranges_rejected() {
        assert!(matches!(
            random_layer::<f64>(2, 2, 0, (1.0, 1.0), (0.0, 1.0)),
            Err(Error::InvalidRange { .. })
        ));
        assert!(random_layer::<f64>(2, 2, 0, (-1.0, 1.0), (2.0, 1.0)).is_err());
        let cfg = NetworkConfig::<f64> {
            layers: 0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = NetworkConfig::<f64> {
            lambda: -1.0,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn design_layout() {
        let h = DenseMatrix::from_rows(&[[1.0, 2.0]]).unwrap();
        let x = DenseMatrix::from_rows(&[[3.0]]).unwrap();
        assert_eq!(output_design(&[&h], &x, true, false).unwrap().row(0), &[1.0, 2.0, 3.0]);
        assert_eq!(output_design(&[&h], &x, true, true).unwrap().row(0), &[1.0, 2.0, 3.0, 1.0]);
        assert_eq!(output_design(&[&h], &x, false, false).unwrap().row(0), &[1.0, 2.0, 1.0]);
        assert_eq!(design_width(2, 1, true, false), 3);
        assert_eq!(design_width(2, 1, false, false), 3);
        assert_eq!(design_width(200, 5, true, true), 206);
    }
}
