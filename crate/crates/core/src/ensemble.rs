//! Ensemble deep RVFL.
//!
//! One forward pass through a stack whose layers after the first see both the
//! previous layer's features and the raw input, `Hˡ = g([Hˡ⁻¹ X]Wˡ + bˡ)`. Each
//! layer gets its own output weights over `Dₗ = [Hˡ X]`, solved independently,
//! and the per-layer predictions are combined by vote or by averaging. The
//! true-ensemble baseline trains several deep models from distinct seeds.

use std::fmt;
use std::str::FromStr;

use crate::data::{argmax_rows, Dataset, NormalizationParams};
use crate::deep::{train_drvfl, DeepModel};
use crate::error::{Error, Result};
use crate::linalg::{DenseMatrix, RidgePath};
use crate::network::{
    check_width, draw_for, output_design, Classifier, HiddenLayerParams, NetworkConfig, Prediction,
};
use crate::scalar::Scalar;
use crate::shallow::{prepare, single};
use crate::sparse::{pretrain_layer, FistaConfig};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum CombineRule {
    /// Each member votes its argmax; ties go to the highest mean score, then
    /// to the lowest class index.
    #[default]
    MajorityVote,
    /// Argmax of the mean score matrix.
    ScoreAverage,
}

impl CombineRule {
    pub fn name(self) -> &'static str {
        match self {
            CombineRule::MajorityVote => "vote",
            CombineRule::ScoreAverage => "average",
        }
    }
}

impl fmt::Display for CombineRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CombineRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vote" | "majority_vote" => Ok(CombineRule::MajorityVote),
            "average" | "score_average" => Ok(CombineRule::ScoreAverage),
            other => Err(Error::InvalidConfig(format!("unknown combine rule {other:?}"))),
        }
    }
}

/// Combined labels, the mean score matrix and every member's scores.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsemblePrediction<T> {
    pub labels: Vec<usize>,
    pub mean_scores: DenseMatrix<T>,
    pub member_scores: Vec<DenseMatrix<T>>,
}

/// Elementwise mean of equally shaped score matrices, summed in member order.
pub fn mean_scores<T: Scalar>(members: &[DenseMatrix<T>]) -> Result<DenseMatrix<T>> {
    let first = members.first().ok_or_else(|| Error::InvalidConfig("ensemble has no members".into()))?;
    let mut acc = first.clone();
    for m in &members[1..] {
        acc = acc.add(m)?;
    }
    acc.scale(T::one() / T::of(members.len() as f64))
}

/// Applies a combine rule to per-member score matrices.
pub fn combine_scores<T: Scalar>(members: &[DenseMatrix<T>], rule: CombineRule) -> Result<EnsemblePrediction<T>> {
    let mean = mean_scores(members)?;
    let labels = match rule {
        CombineRule::ScoreAverage => argmax_rows(&mean),
        CombineRule::MajorityVote => {
            let votes: Vec<Vec<usize>> = members.iter().map(argmax_rows).collect();
            let classes = mean.cols();
            (0..mean.rows())
                .map(|i| {
                    let mut counts = vec![0usize; classes];
                    for v in &votes {
                        counts[v[i]] += 1;
                    }
                    let top = *counts.iter().max().expect("at least one class");
                    let mut best: Option<usize> = None;
                    for c in (0..classes).filter(|&c| counts[c] == top) {
                        match best {
                            Some(b) if mean.get(i, c) <= mean.get(i, b) => {}
                            _ => best = Some(c),
                        }
                    }
                    best.expect("some class has the top count")
                })
                .collect()
        }
    };
    Ok(EnsemblePrediction {
        labels,
        mean_scores: mean,
        member_scores: members.to_vec(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleDeepModel<T> {
    pub layers: Vec<HiddenLayerParams<T>>,
    /// One `(N + d [+1]) × K` block per layer (`(N + 1) × K` without direct links).
    pub betas: Vec<DenseMatrix<T>>,
    pub combine: CombineRule,
    pub config: NetworkConfig<T>,
    pub norm_params: NormalizationParams<T>,
    pub classes: usize,
    pub pretrained: bool,
}

impl<T: Scalar> EnsembleDeepModel<T> {
    /// Per-layer output designs `Dₗ` for normalized input.
    pub fn member_designs(&self, x: &DenseMatrix<T>) -> Result<Vec<DenseMatrix<T>>> {
        ensemble_hidden(x, &self.layers, self.config.direct_links)?
            .iter()
            .map(|h| output_design(&[h], x, self.config.direct_links, self.config.bias_in_output))
            .collect()
    }

    /// `Dₗ βₗ` for every member, on raw input.
    pub fn member_scores(&self, x: &DenseMatrix<T>) -> Result<Vec<DenseMatrix<T>>> {
        check_width(self.norm_params.feature_count(), x)?;
        let xn = self.norm_params.apply(x)?;
        self.member_designs(&xn)?
            .iter()
            .zip(&self.betas)
            .map(|(d, b)| d.matmul(b))
            .collect()
    }

    /// The first `layers` members. Because layers are drawn in order from one
    /// stream, this equals training with `layers` directly.
    pub fn truncated(&self, layers: usize) -> Result<Self> {
        if layers == 0 || layers > self.layers.len() {
            return Err(Error::InvalidConfig(format!(
                "cannot keep {layers} of {} layers",
                self.layers.len()
            )));
        }
        let mut config = self.config.clone();
        config.layers = layers;
        if let Some(ls) = &mut config.layer_lambdas {
            ls.truncate(layers);
        }
        Ok(Self {
            layers: self.layers[..layers].to_vec(),
            betas: self.betas[..layers].to_vec(),
            config,
            ..self.clone()
        })
    }

    pub fn with_combine(mut self, rule: CombineRule) -> Self {
        self.combine = rule;
        self
    }
}

impl<T: Scalar> Classifier<T> for EnsembleDeepModel<T> {
    fn predict(&self, x: &DenseMatrix<T>) -> Result<Prediction<T>> {
        let p = ensemble_predict(self, x, self.combine)?;
        Ok(Prediction {
            labels: p.labels,
            scores: p.mean_scores,
        })
    }

    fn class_count(&self) -> usize {
        self.classes
    }
}

pub fn ensemble_predict<T: Scalar>(
    model: &EnsembleDeepModel<T>,
    x: &DenseMatrix<T>,
    rule: CombineRule,
) -> Result<EnsemblePrediction<T>> {
    combine_scores(&model.member_scores(x)?, rule)
}

/// `H¹ = g(XW¹ + b¹)`, then `Hˡ = g([Hˡ⁻¹ X]Wˡ + bˡ)` (or `g(Hˡ⁻¹Wˡ + bˡ)`
/// without direct links).
pub fn ensemble_hidden<T: Scalar>(
    x: &DenseMatrix<T>,
    layers: &[HiddenLayerParams<T>],
    direct_links: bool,
) -> Result<Vec<DenseMatrix<T>>> {
    let mut out: Vec<DenseMatrix<T>> = Vec::with_capacity(layers.len());
    for layer in layers {
        let h = match out.last() {
            None => layer.forward(x)?,
            Some(prev) => layer.forward(&layer_input(prev, x, direct_links)?)?,
        };
        out.push(h);
    }
    Ok(out)
}

fn layer_input<T: Scalar>(prev: &DenseMatrix<T>, x: &DenseMatrix<T>, direct_links: bool) -> Result<DenseMatrix<T>> {
    if direct_links {
        DenseMatrix::hconcat(&[prev, x])
    } else {
        Ok(prev.clone())
    }
}

fn next_width<T: Scalar>(cfg: &NetworkConfig<T>, d: usize) -> usize {
    cfg.hidden_nodes + if cfg.direct_links { d } else { 0 }
}

/// edRVFL; per-layer λ from `cfg.layer_lambdas` when given.
pub fn train_edrvfl<T: Scalar>(ds: &Dataset<T>, cfg: &NetworkConfig<T>) -> Result<EnsembleDeepModel<T>> {
    cfg.validate()?;
    let prep = prepare(ds, cfg)?;
    let layers = draw_ensemble_layers(cfg, prep.x.cols())?;
    let lambdas: Vec<T> = (0..cfg.layers).map(|l| cfg.lambda_for_layer(l)).collect();
    let betas = solve_members(&prep.x, &prep.y, cfg, &layers, &[lambdas])?
        .pop()
        .expect("one lambda set");
    Ok(EnsembleDeepModel {
        layers,
        betas,
        combine: CombineRule::default(),
        config: cfg.clone(),
        norm_params: prep.norm,
        classes: prep.classes,
        pretrained: false,
    })
}

/// edRVFL for several shared λ values, one forward pass and one Gram matrix
/// per layer.
pub fn train_edrvfl_path<T: Scalar>(
    ds: &Dataset<T>,
    cfg: &NetworkConfig<T>,
    lambdas: &[T],
) -> Result<Vec<EnsembleDeepModel<T>>> {
    cfg.validate()?;
    let prep = prepare(ds, cfg)?;
    let layers = draw_ensemble_layers(cfg, prep.x.cols())?;
    build_path(prep.x, prep.y, prep.norm, prep.classes, cfg, layers, false, lambdas)
}

/// edSP-RVFL: each layer pretrained by the sparse autoencoder on its own
/// input (`X` first, then `[Hˡ⁻¹ X]`).
pub fn train_edsp_rvfl<T: Scalar>(
    ds: &Dataset<T>,
    cfg: &NetworkConfig<T>,
    fcfg: &FistaConfig<T>,
) -> Result<EnsembleDeepModel<T>> {
    let mut uniform = cfg.clone();
    uniform.layer_lambdas = None;
    let mut model = single(train_edsp_rvfl_path(ds, &uniform, fcfg, &[cfg.lambda])?)?;
    if cfg.layer_lambdas.is_some() {
        let prep = prepare(ds, cfg)?;
        let lambdas: Vec<T> = (0..cfg.layers).map(|l| cfg.lambda_for_layer(l)).collect();
        model.betas = solve_members(&prep.x, &prep.y, cfg, &model.layers, &[lambdas])?
            .pop()
            .expect("one lambda set");
        model.config = cfg.clone();
    }
    Ok(model)
}

pub fn train_edsp_rvfl_path<T: Scalar>(
    ds: &Dataset<T>,
    cfg: &NetworkConfig<T>,
    fcfg: &FistaConfig<T>,
    lambdas: &[T],
) -> Result<Vec<EnsembleDeepModel<T>>> {
    cfg.validate()?;
    let prep = prepare(ds, cfg)?;
    let mut rng = cfg.rng();
    let mut layers: Vec<HiddenLayerParams<T>> = Vec::with_capacity(cfg.layers);
    let mut prev: Option<DenseMatrix<T>> = None;
    for _ in 0..cfg.layers {
        let input = match &prev {
            None => prep.x.clone(),
            Some(h) => layer_input(h, &prep.x, cfg.direct_links)?,
        };
        let (layer, _) = pretrain_layer(&mut rng, &input, cfg, fcfg)?;
        prev = Some(layer.forward(&input)?);
        layers.push(layer);
    }
    build_path(prep.x, prep.y, prep.norm, prep.classes, cfg, layers, true, lambdas)
}

fn draw_ensemble_layers<T: Scalar>(cfg: &NetworkConfig<T>, d: usize) -> Result<Vec<HiddenLayerParams<T>>> {
    let mut rng = cfg.rng();
    let mut layers = Vec::with_capacity(cfg.layers);
    let mut width = d;
    for _ in 0..cfg.layers {
        layers.push(draw_for(&mut rng, cfg, width)?);
        width = next_width(cfg, d);
    }
    Ok(layers)
}

/// Betas for every per-layer λ assignment in `lambda_sets`.
fn solve_members<T: Scalar>(
    x: &DenseMatrix<T>,
    y: &DenseMatrix<T>,
    cfg: &NetworkConfig<T>,
    layers: &[HiddenLayerParams<T>],
    lambda_sets: &[Vec<T>],
) -> Result<Vec<Vec<DenseMatrix<T>>>> {
    let hidden = ensemble_hidden(x, layers, cfg.direct_links)?;
    let mut out: Vec<Vec<DenseMatrix<T>>> = lambda_sets.iter().map(|_| Vec::with_capacity(layers.len())).collect();
    for (l, h) in hidden.iter().enumerate() {
        let d = output_design(&[h], x, cfg.direct_links, cfg.bias_in_output)?;
        let mut path = RidgePath::new(&d, y)?;
        for (set, betas) in lambda_sets.iter().zip(out.iter_mut()) {
            betas.push(path.solve(set[l])?);
        }
    }
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn build_path<T: Scalar>(
    x: DenseMatrix<T>,
    y: DenseMatrix<T>,
    norm: NormalizationParams<T>,
    classes: usize,
    cfg: &NetworkConfig<T>,
    layers: Vec<HiddenLayerParams<T>>,
    pretrained: bool,
    lambdas: &[T],
) -> Result<Vec<EnsembleDeepModel<T>>> {
    let sets: Vec<Vec<T>> = lambdas.iter().map(|&l| vec![l; cfg.layers]).collect();
    let all = solve_members(&x, &y, cfg, &layers, &sets)?;
    Ok(all
        .into_iter()
        .zip(lambdas)
        .map(|(betas, &lambda)| EnsembleDeepModel {
            layers: layers.clone(),
            betas,
            combine: CombineRule::default(),
            config: NetworkConfig {
                lambda,
                layer_lambdas: None,
                ..cfg.clone()
            },
            norm_params: norm.clone(),
            classes,
            pretrained,
        })
        .collect())
}

/// Independently trained deep models combined by averaging.
#[derive(Clone, Debug, PartialEq)]
pub struct TrueEnsemble<T> {
    pub members: Vec<DeepModel<T>>,
    pub combine: CombineRule,
}

impl<T: Scalar> TrueEnsemble<T> {
    pub fn member_scores(&self, x: &DenseMatrix<T>) -> Result<Vec<DenseMatrix<T>>> {
        self.members.iter().map(|m| m.scores(x)).collect()
    }
}

impl<T: Scalar> Classifier<T> for TrueEnsemble<T> {
    fn predict(&self, x: &DenseMatrix<T>) -> Result<Prediction<T>> {
        let p = combine_scores(&self.member_scores(x)?, self.combine)?;
        Ok(Prediction {
            labels: p.labels,
            scores: p.mean_scores,
        })
    }

    fn class_count(&self) -> usize {
        self.members[0].classes
    }
}

/// `member_count` deep models with seeds `base_seed + i`, averaged.
pub fn train_tedrvfl<T: Scalar>(
    ds: &Dataset<T>,
    cfg: &NetworkConfig<T>,
    member_count: usize,
    base_seed: u64,
) -> Result<TrueEnsemble<T>> {
    if member_count == 0 {
        return Err(Error::InvalidConfig("true ensemble needs at least one member".into()));
    }
    let members = (0..member_count)
        .map(|i| {
            let member_cfg = NetworkConfig {
                seed: base_seed.wrapping_add(i as u64),
                ..cfg.clone()
            };
            train_drvfl(ds, &member_cfg)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TrueEnsemble {
        members,
        combine: CombineRule::ScoreAverage,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::synthetic;
    use crate::shallow::train_rvfl;

    fn cfg(nodes: usize, layers: usize) -> NetworkConfig<f64> {
        NetworkConfig {
            hidden_nodes: nodes,
            layers,
            lambda: 0.5,
            seed: 2024,
            ..Default::default()
        }
    }

    fn scores(rows: &[&[f64]]) -> DenseMatrix<f64> {
        DenseMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn unanimity_and_majority() {
        let vote3 = scores(&[&[0.0, 0.0, 0.0, 1.0]]);
        let p = combine_scores(&[vote3.clone(), vote3.clone(), vote3], CombineRule::MajorityVote).unwrap();
        assert_eq!(p.labels, vec![3]);
        let a = scores(&[&[0.9, 0.1]]);
        let b = scores(&[&[0.2, 0.6]]);
        let p = combine_scores(&[a, b.clone(), b], CombineRule::MajorityVote).unwrap();
        assert_eq!(p.labels, vec![1]);
    }

    #[test]
    fn two_two_vote_tie_resolution() {
        // Row 0: votes 0,0,2,2. Mean score class 0 = (0.5+0.6+0.3+0.1)/4 = 0.375,
        // class 2 = (0.4+0.3+0.7+0.8)/4 = 0.55, so class 2 wins on mean score.
        // Row 1: votes 1,1,0,0 with equal means for classes 0 and 1 (0.375
        // each, exact in binary), so the lowest index, class 0, wins.
        let m = [
            scores(&[&[0.5, 0.1, 0.4], &[0.25, 0.5, 0.25]]),
            scores(&[&[0.6, 0.1, 0.3], &[0.25, 0.5, 0.25]]),
            scores(&[&[0.3, 0.0, 0.7], &[0.5, 0.25, 0.25]]),
            scores(&[&[0.1, 0.1, 0.8], &[0.5, 0.25, 0.25]]),
        ];
        let p = combine_scores(&m, CombineRule::MajorityVote).unwrap();
        assert_eq!(p.labels, vec![2, 0]);
        let avg = combine_scores(&m, CombineRule::ScoreAverage).unwrap();
        assert_eq!(avg.labels, vec![2, 0]);
    }

    #[test]
    fn single_layer_is_shallow_rvfl() {
        let ds = synthetic::gaussian_blobs::<f64>(60, 4, 3, 0.5, 1).unwrap();
        let e = train_edrvfl(&ds, &cfg(15, 1)).unwrap();
        let s = train_rvfl(&ds, &cfg(15, 1)).unwrap();
        assert_eq!(e.layers[0], s.layer);
        assert_eq!(e.betas[0], s.beta);
        for rule in [CombineRule::MajorityVote, CombineRule::ScoreAverage] {
            let p = ensemble_predict(&e, ds.features(), rule).unwrap();
            assert_eq!(p.labels, s.predict(ds.features()).unwrap().labels);
        }
    }

    #[test]
    fn member_shapes_and_replay() {
        let ds = synthetic::gaussian_blobs::<f64>(40, 6, 2, 0.5, 2).unwrap();
        let e = train_edrvfl(&ds, &cfg(9, 4)).unwrap();
        assert_eq!(e.betas.len(), 4);
        assert!(e.betas.iter().all(|b| b.shape() == (15, 2)));
        assert_eq!(e.layers[1].weights.shape(), (15, 9));

        let xn = e.norm_params.apply(ds.features()).unwrap();
        let mut prev: Option<DenseMatrix<f64>> = None;
        let members = e.member_scores(ds.features()).unwrap();
        for (l, layer) in e.layers.iter().enumerate() {
            let input = match &prev {
                None => xn.clone(),
                Some(h) => DenseMatrix::hconcat(&[h, &xn]).unwrap(),
            };
            let h = layer.forward(&input).unwrap();
            let d = DenseMatrix::hconcat(&[&h, &xn]).unwrap();
            let s = d.matmul(&e.betas[l]).unwrap();
            assert!(s.max_abs_diff(&members[l]).unwrap() < 1e-12);
            prev = Some(h);
        }

        let mut no_dl = cfg(9, 3);
        no_dl.direct_links = false;
        let e = train_edrvfl(&ds, &no_dl).unwrap();
        assert!(e.betas.iter().all(|b| b.rows() == 10));
        assert_eq!(e.layers[1].weights.shape(), (9, 9));
    }

    #[test]
    fn per_layer_lambda_only_touches_its_member() {
        let ds = synthetic::gaussian_blobs::<f64>(40, 3, 2, 0.5, 3).unwrap();
        let base = cfg(8, 3);
        let a = train_edrvfl(&ds, &base).unwrap();
        let mut changed = base.clone();
        changed.layer_lambdas = Some(vec![0.5, 8.0, 0.5]);
        let b = train_edrvfl(&ds, &changed).unwrap();
        assert_eq!(a.betas[0], b.betas[0]);
        assert_ne!(a.betas[1], b.betas[1]);
        assert_eq!(a.betas[2], b.betas[2]);
    }

    #[test]
    fn truncation_equals_direct_training() {
        let ds = synthetic::gaussian_blobs::<f64>(40, 3, 2, 0.5, 4).unwrap();
        let full = train_edrvfl(&ds, &cfg(8, 5)).unwrap();
        let direct = train_edrvfl(&ds, &cfg(8, 3)).unwrap();
        assert_eq!(full.truncated(3).unwrap(), direct);
        assert!(full.truncated(6).is_err());
        let path = train_edrvfl_path(&ds, &cfg(8, 5), &[0.5, 2.0]).unwrap();
        assert_eq!(path[0], full);
    }

    #[test]
    fn vote_with_one_member_is_argmax() {
        let ds = synthetic::gaussian_blobs::<f64>(50, 3, 4, 0.8, 5).unwrap();
        let e = train_edrvfl(&ds, &cfg(10, 1)).unwrap();
        let p = ensemble_predict(&e, ds.features(), CombineRule::MajorityVote).unwrap();
        assert_eq!(p.labels, argmax_rows(&p.member_scores[0]));
    }

    #[test]
    fn average_ignores_member_order() {
        let ds = synthetic::gaussian_blobs::<f64>(50, 3, 3, 0.8, 6).unwrap();
        let e = train_edrvfl(&ds, &cfg(10, 4)).unwrap();
        let mut members = e.member_scores(ds.features()).unwrap();
        let a = combine_scores(&members, CombineRule::ScoreAverage).unwrap();
        members.reverse();
        let b = combine_scores(&members, CombineRule::ScoreAverage).unwrap();
        assert!(a.mean_scores.max_abs_diff(&b.mean_scores).unwrap() < 1e-14);
        assert_eq!(a.labels, b.labels);
    }

    #[test]
    fn sparse_ensemble_single_layer_matches_sp_rvfl() {
        let ds = synthetic::gaussian_blobs::<f64>(40, 4, 2, 0.5, 7).unwrap();
        let f = FistaConfig::default();
        let e = train_edsp_rvfl(&ds, &cfg(10, 1), &f).unwrap();
        let s = crate::sparse::train_sp_rvfl(&ds, &cfg(10, 1), &f).unwrap();
        assert_eq!(e.betas[0], s.beta);
        let deeper = train_edsp_rvfl(&ds, &cfg(10, 3), &f).unwrap();
        assert_eq!(deeper.layers[1].weights.shape(), (14, 10));
        assert!(deeper.pretrained);
    }

    #[test]
    fn true_ensemble() {
        let ds = synthetic::gaussian_blobs::<f64>(40, 4, 3, 0.6, 8).unwrap();
        let c = cfg(10, 2);
        let one = train_tedrvfl(&ds, &c, 1, 77).unwrap();
        let solo = train_drvfl(&ds, &NetworkConfig { seed: 77, ..c.clone() }).unwrap();
        assert_eq!(one.predict(ds.features()).unwrap().labels, solo.predict(ds.features()).unwrap().labels);

        let three = train_tedrvfl(&ds, &c, 3, 77).unwrap();
        assert_ne!(three.members[0].layers[0].weights, three.members[1].layers[0].weights);
        let members = three.member_scores(ds.features()).unwrap();
        let p = three.predict(ds.features()).unwrap();
        for i in 0..40 {
            for k in 0..3 {
                let mean = (members[0].get(i, k) + members[1].get(i, k) + members[2].get(i, k)) / 3.0;
                assert!((p.scores.get(i, k) - mean).abs() < 1e-12);
            }
        }
        assert!(train_tedrvfl(&ds, &c, 0, 1).is_err());
    }
}
