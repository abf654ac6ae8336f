//! Cross-validation, grid search and timing.
//!
//! Folds are stratified and drawn from the `seed` argument. Within fold `f`
//! the network seed is `fold_seed(seed, f)`, for every grid cell alike, so a
//! cell's report does not depend on which other cells are in the grid.

use std::time::Instant;

use rayon::prelude::*;

use crate::data::{accuracy, stratified_kfold, Dataset};
use crate::ensemble::combine_scores;
use crate::error::{Error, Result};
use crate::method::{train, train_path, MethodSpec, Model};
use crate::network::{Classifier, NetworkConfig};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport<T> {
    pub method: String,
    pub dataset: String,
    pub fold_accuracies: Vec<f64>,
    pub mean_accuracy: f64,
    /// Population standard deviation over folds.
    pub std_accuracy: f64,
    pub train_seconds: f64,
    pub test_seconds: f64,
    pub chosen_config: NetworkConfig<T>,
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Network seed used inside fold `fold` (SplitMix64 of the pair).
pub fn fold_seed(seed: u64, fold: usize) -> u64 {
    let mut z = seed ^ (fold as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Split<T> {
    train: Dataset<T>,
    test: Dataset<T>,
    seed: u64,
}

fn splits<T: Scalar>(ds: &Dataset<T>, k: usize, seed: u64) -> Result<Vec<Split<T>>> {
    let plan = stratified_kfold(ds, k, seed)?;
    (0..k)
        .map(|f| {
            Ok(Split {
                train: ds.subset(&plan.train_indices(f))?,
                test: ds.subset(&plan.test_indices(f))?,
                seed: fold_seed(seed, f),
            })
        })
        .collect()
}

/// Cross-validation with a caller-supplied trainer. The trainer receives the
/// training split and the fold's seed and must not see anything else.
pub fn cross_validate_with<T, M, F>(
    method: &str,
    ds: &Dataset<T>,
    k: usize,
    seed: u64,
    chosen_config: NetworkConfig<T>,
    fit: F,
) -> Result<EvalReport<T>>
where
    T: Scalar,
    M: Classifier<T>,
    F: Fn(&Dataset<T>, u64) -> Result<M> + Sync,
{
    let folds = splits(ds, k, seed)?;
    let results = folds
        .par_iter()
        .map(|s| {
            let start = Instant::now();
            let model = fit(&s.train, s.seed)?;
            let trained = start.elapsed().as_secs_f64();
            let start = Instant::now();
            let pred = model.predict(s.test.features())?;
            let tested = start.elapsed().as_secs_f64();
            Ok((accuracy(&pred.labels, s.test.labels()), trained, tested))
        })
        .collect::<Result<Vec<_>>>()?;
    let fold_accuracies: Vec<f64> = results.iter().map(|r| r.0).collect();
    let (mean_accuracy, std_accuracy) = mean_std(&fold_accuracies);
    Ok(EvalReport {
        method: method.to_string(),
        dataset: ds.name().to_string(),
        fold_accuracies,
        mean_accuracy,
        std_accuracy,
        train_seconds: results.iter().map(|r| r.1).sum(),
        test_seconds: results.iter().map(|r| r.2).sum(),
        chosen_config,
    })
}

pub fn cross_validate<T: Scalar>(spec: &MethodSpec<T>, ds: &Dataset<T>, k: usize, seed: u64) -> Result<EvalReport<T>> {
    let mut chosen = spec.effective_network();
    chosen.seed = seed;
    cross_validate_with(spec.id.name(), ds, k, seed, chosen, |train_ds, s| {
        train(&spec.clone().with_seed(s), train_ds)
    })
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GridSpec {
    /// λ = 2^-x for each exponent x (C = 2^x).
    pub c_exponents: Vec<i32>,
    pub l_values: Vec<usize>,
    pub n_values: Vec<usize>,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            c_exponents: (-6..=12).step_by(2).collect(),
            l_values: (1..=10).collect(),
            n_values: vec![100],
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.c_exponents.is_empty() || self.l_values.is_empty() || self.n_values.is_empty() {
            return Err(Error::InvalidConfig("grid lists must be nonempty".into()));
        }
        if self.l_values.contains(&0) || self.n_values.contains(&0) {
            return Err(Error::InvalidConfig("grid layer and node counts must be positive".into()));
        }
        Ok(())
    }

    /// Layer values actually searched for a method: shallow methods use {1}.
    pub fn layers_for(&self, spec: &MethodSpec<impl Scalar>) -> Vec<usize> {
        if spec.id.is_shallow() {
            vec![1]
        } else {
            let mut l = self.l_values.clone();
            l.sort_unstable();
            l.dedup();
            l
        }
    }

    fn sorted_c(&self) -> Vec<i32> {
        let mut c = self.c_exponents.clone();
        c.sort_unstable();
        c.dedup();
        c
    }

    fn sorted_n(&self) -> Vec<usize> {
        let mut n = self.n_values.clone();
        n.sort_unstable();
        n.dedup();
        n
    }

    /// Number of cells searched for `spec`.
    pub fn cell_count(&self, spec: &MethodSpec<impl Scalar>) -> usize {
        self.sorted_c().len() * self.layers_for(spec).len() * self.sorted_n().len()
    }
}

pub fn lambda_for_exponent<T: Scalar>(x: i32) -> T {
    T::of(2f64.powi(-x))
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridCell<T> {
    pub c_exponent: i32,
    pub layers: usize,
    pub hidden_nodes: usize,
    pub report: EvalReport<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridResult<T> {
    /// Ordered by N, then L, then C, all ascending.
    pub cells: Vec<GridCell<T>>,
    pub best: usize,
}

impl<T: Scalar> GridResult<T> {
    pub fn best_cell(&self) -> &GridCell<T> {
        &self.cells[self.best]
    }

    pub fn best_config(&self) -> &NetworkConfig<T> {
        &self.best_cell().report.chosen_config
    }
}

/// Index of the best cell: highest mean accuracy, ties to smaller C, then L,
/// then N.
pub fn select_best<T>(cells: &[GridCell<T>]) -> usize {
    let mut best = 0;
    for (i, c) in cells.iter().enumerate().skip(1) {
        let b = &cells[best];
        let better = c.report.mean_accuracy > b.report.mean_accuracy
            || (c.report.mean_accuracy == b.report.mean_accuracy
                && (c.c_exponent, c.layers, c.hidden_nodes) < (b.c_exponent, b.layers, b.hidden_nodes));
        if better {
            best = i;
        }
    }
    best
}

/// Every cell evaluated exactly as `cross_validate` would, but sharing work:
/// within a fold, all λ values reuse one forward pass and one Gram matrix,
/// and for layer-ensemble methods all L values reuse the deepest stack.
///
/// Cell timing fields are the fold time of the shared computation divided
/// evenly among the cells it served.
pub fn grid_search<T: Scalar>(
    spec: &MethodSpec<T>,
    ds: &Dataset<T>,
    grid: &GridSpec,
    k: usize,
    seed: u64,
) -> Result<GridResult<T>> {
    grid.validate()?;
    let cs = grid.sorted_c();
    let ls = grid.layers_for(spec);
    let ns = grid.sorted_n();
    let lambdas: Vec<T> = cs.iter().map(|&x| lambda_for_exponent(x)).collect();
    let folds = splits(ds, k, seed)?;

    // per fold: [n][l][c] accuracy, plus train/test seconds per (n, l) cell
    let per_fold = folds
        .par_iter()
        .map(|s| {
            ns.iter()
                .map(|&n| fold_grid(spec, s, n, &ls, &lambdas))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let mut cells = Vec::with_capacity(cs.len() * ls.len() * ns.len());
    for (ni, &n) in ns.iter().enumerate() {
        for (li, &l) in ls.iter().enumerate() {
            for (ci, &x) in cs.iter().enumerate() {
                let fold_accuracies: Vec<f64> = per_fold.iter().map(|f| f[ni].acc[li][ci]).collect();
                let (mean_accuracy, std_accuracy) = mean_std(&fold_accuracies);
                let mut chosen = spec.effective_network();
                chosen.hidden_nodes = n;
                chosen.layers = l;
                chosen.lambda = lambdas[ci];
                chosen.layer_lambdas = None;
                chosen.seed = seed;
                cells.push(GridCell {
                    c_exponent: x,
                    layers: l,
                    hidden_nodes: n,
                    report: EvalReport {
                        method: spec.id.name().to_string(),
                        dataset: ds.name().to_string(),
                        fold_accuracies,
                        mean_accuracy,
                        std_accuracy,
                        train_seconds: per_fold.iter().map(|f| f[ni].train_seconds[li]).sum(),
                        test_seconds: per_fold.iter().map(|f| f[ni].test_seconds[li]).sum(),
                        chosen_config: chosen,
                    },
                });
            }
        }
    }
    let best = select_best(&cells);
    Ok(GridResult { cells, best })
}

struct FoldGrid {
    acc: Vec<Vec<f64>>,
    train_seconds: Vec<f64>,
    test_seconds: Vec<f64>,
}

fn fold_grid<T: Scalar>(spec: &MethodSpec<T>, s: &Split<T>, n: usize, ls: &[usize], lambdas: &[T]) -> Result<FoldGrid> {
    let mut cell_spec = spec.clone().with_seed(s.seed);
    cell_spec.network.hidden_nodes = n;
    cell_spec.network.layer_lambdas = None;

    if spec.id.is_layer_ensemble() {
        let max_l = *ls.last().expect("nonempty layer list");
        cell_spec.network.layers = max_l;
        let start = Instant::now();
        let models = train_path(&cell_spec, &s.train, lambdas)?;
        let trained = start.elapsed().as_secs_f64();
        let start = Instant::now();
        let mut acc = vec![vec![0.0; lambdas.len()]; ls.len()];
        for (ci, model) in models.iter().enumerate() {
            let Model::Ensemble(m) = model else {
                unreachable!("layer ensembles train to ensemble models")
            };
            let members = m.member_scores(s.test.features())?;
            for (li, &l) in ls.iter().enumerate() {
                let p = combine_scores(&members[..l], spec.combine)?;
                acc[li][ci] = accuracy(&p.labels, s.test.labels());
            }
        }
        let tested = start.elapsed().as_secs_f64();
        let cells = (ls.len() * lambdas.len()) as f64;
        return Ok(FoldGrid {
            acc,
            train_seconds: vec![trained / cells; ls.len()],
            test_seconds: vec![tested / cells; ls.len()],
        });
    }

    let per_cell = 1.0 / lambdas.len() as f64;
    let mut out = FoldGrid {
        acc: Vec::with_capacity(ls.len()),
        train_seconds: Vec::with_capacity(ls.len()),
        test_seconds: Vec::with_capacity(ls.len()),
    };
    for &l in ls {
        cell_spec.network.layers = l;
        let start = Instant::now();
        let models = train_path(&cell_spec, &s.train, lambdas)?;
        out.train_seconds.push(start.elapsed().as_secs_f64() * per_cell);
        let start = Instant::now();
        let row = models
            .iter()
            .map(|m| Ok(accuracy(&m.predict(s.test.features())?.labels, s.test.labels())))
            .collect::<Result<Vec<_>>>()?;
        out.test_seconds.push(start.elapsed().as_secs_f64() * per_cell);
        out.acc.push(row);
    }
    Ok(out)
}

/// Tunes one λ per layer for a layer-ensemble method at fixed L and N: layer
/// l's λ maximizes the cross-validated accuracy of member l alone (ties to
/// smaller C). Returns the λ vector and the cross-validated report of the
/// resulting ensemble.
pub fn tune_layer_lambdas<T: Scalar>(
    spec: &MethodSpec<T>,
    ds: &Dataset<T>,
    c_exponents: &[i32],
    k: usize,
    seed: u64,
) -> Result<(Vec<T>, EvalReport<T>)> {
    if !spec.id.is_layer_ensemble() {
        return Err(Error::InvalidConfig(format!("{} has no per-layer output solves", spec.id)));
    }
    if c_exponents.is_empty() {
        return Err(Error::InvalidConfig("grid lists must be nonempty".into()));
    }
    let mut cs = c_exponents.to_vec();
    cs.sort_unstable();
    cs.dedup();
    let lambdas: Vec<T> = cs.iter().map(|&x| lambda_for_exponent(x)).collect();
    let layers = spec.effective_network().layers;
    let folds = splits(ds, k, seed)?;
    let mut base = spec.clone();
    base.network.layer_lambdas = None;

    // [fold][layer][c]
    let per_fold = folds
        .par_iter()
        .map(|s| {
            let models = train_path(&base.clone().with_seed(s.seed), &s.train, &lambdas)?;
            let mut acc = vec![vec![0.0; lambdas.len()]; layers];
            for (ci, model) in models.iter().enumerate() {
                let Model::Ensemble(m) = model else {
                    unreachable!("layer ensembles train to ensemble models")
                };
                for (l, scores) in m.member_scores(s.test.features())?.iter().enumerate() {
                    let p = crate::network::Prediction::from_scores(scores.clone());
                    acc[l][ci] = accuracy(&p.labels, s.test.labels());
                }
            }
            Ok(acc)
        })
        .collect::<Result<Vec<_>>>()?;

    let chosen: Vec<T> = (0..layers)
        .map(|l| {
            let means: Vec<f64> = (0..lambdas.len())
                .map(|ci| mean_std(&per_fold.iter().map(|f| f[l][ci]).collect::<Vec<_>>()).0)
                .collect();
            let mut best = 0;
            for ci in 1..means.len() {
                if means[ci] > means[best] {
                    best = ci;
                }
            }
            lambdas[best]
        })
        .collect();
    let mut tuned = spec.clone();
    tuned.network.layer_lambdas = Some(chosen.clone());
    let report = cross_validate(&tuned, ds, k, seed)?;
    Ok((chosen, report))
}

/// Held-out protocol: each outer fold runs its own grid search on its
/// training split and reports the accuracy of the chosen cell on the held-out
/// fold.
pub fn nested_cross_validate<T: Scalar>(
    spec: &MethodSpec<T>,
    ds: &Dataset<T>,
    grid: &GridSpec,
    outer_k: usize,
    inner_k: usize,
    seed: u64,
) -> Result<EvalReport<T>> {
    let folds = splits(ds, outer_k, seed)?;
    let results = folds
        .iter()
        .map(|s| {
            let start = Instant::now();
            let inner = grid_search(spec, &s.train, grid, inner_k, s.seed)?;
            let mut chosen = spec.clone();
            chosen.network = inner.best_config().clone();
            chosen.network.seed = s.seed;
            let model = train(&chosen, &s.train)?;
            let trained = start.elapsed().as_secs_f64();
            let start = Instant::now();
            let pred = model.predict(s.test.features())?;
            let tested = start.elapsed().as_secs_f64();
            Ok((accuracy(&pred.labels, s.test.labels()), trained, tested))
        })
        .collect::<Result<Vec<_>>>()?;
    let fold_accuracies: Vec<f64> = results.iter().map(|r| r.0).collect();
    let (mean_accuracy, std_accuracy) = mean_std(&fold_accuracies);
    let mut chosen_config = spec.effective_network();
    chosen_config.seed = seed;
    Ok(EvalReport {
        method: spec.id.name().to_string(),
        dataset: ds.name().to_string(),
        fold_accuracies,
        mean_accuracy,
        std_accuracy,
        train_seconds: results.iter().map(|r| r.1).sum(),
        test_seconds: results.iter().map(|r| r.2).sum(),
        chosen_config,
    })
}

/// Wall-clock seconds for one training run on `ds` and one prediction pass
/// over it.
pub fn time_method<T: Scalar>(spec: &MethodSpec<T>, ds: &Dataset<T>) -> Result<(f64, f64)> {
    let start = Instant::now();
    let model = train(spec, ds)?;
    let trained = start.elapsed().as_secs_f64();
    let start = Instant::now();
    model.predict(ds.features())?;
    Ok((trained, start.elapsed().as_secs_f64()))
}

#[cfg(test)]
mod tests {
    use std::sync::Mutex;

    use super::*;
    use crate::data::{synthetic, NormalizationParams};
    use crate::linalg::DenseMatrix;
    use crate::method::MethodId;
    use crate::network::Prediction;
    use proptest::prelude::*;

    struct Constant {
        classes: usize,
    }

    impl Classifier<f64> for Constant {
        fn predict(&self, x: &DenseMatrix<f64>) -> Result<Prediction<f64>> {
            Ok(Prediction::from_scores(DenseMatrix::zeros(x.rows(), self.classes)?))
        }

        fn class_count(&self) -> usize {
            self.classes
        }
    }

    fn small_spec(id: MethodId) -> MethodSpec<f64> {
        let mut spec = MethodSpec::new(id);
        spec.network.hidden_nodes = 10;
        spec.fista.max_iterations = 50;
        spec
    }

    #[test]
    fn constant_predictor_scores_base_rate() {
        let ds = synthetic::gaussian_blobs::<f64>(100, 2, 2, 1.0, 1).unwrap();
        let r = cross_validate_with("constant", &ds, 10, 3, NetworkConfig::default(), |_, _| Ok(Constant { classes: 2 })).unwrap();
        assert_eq!(r.fold_accuracies.len(), 10);
        assert!((r.mean_accuracy - 0.5).abs() < 1e-12);
        assert!(r.std_accuracy < 1e-12);
    }

    #[test]
    fn perfect_folds() {
        let (m, s) = mean_std(&[1.0; 10]);
        assert_eq!((m, s), (1.0, 0.0));
    }

    #[test]
    fn no_test_rows_reach_the_trainer() {
        // every sample gets a unique first feature so rows can be traced
        let base = synthetic::gaussian_blobs::<f64>(60, 3, 3, 0.7, 5).unwrap();
        let feats = DenseMatrix::from_fn(60, 3, |i, j| if j == 0 { i as f64 } else { base.features().get(i, j) }).unwrap();
        let ds = base.with_features(feats).unwrap();
        let seen: Mutex<Vec<(u64, Vec<u64>)>> = Mutex::new(Vec::new());
        let spec = small_spec(MethodId::Rvfl);
        cross_validate_with("spy", &ds, 5, 9, NetworkConfig::default(), |train_ds, s| {
            let ids: Vec<u64> = (0..train_ds.len()).map(|i| train_ds.features().get(i, 0) as u64).collect();
            seen.lock().unwrap().push((s, ids));
            let model = train(&spec.clone().with_seed(s), train_ds)?;
            let Model::Shallow(m) = &model else { unreachable!() };
            // normalization fitted on the training rows alone
            assert_eq!(m.norm_params, NormalizationParams::fit(train_ds.features(), spec.network.normalization));
            Ok(model)
        })
        .unwrap();
        let plan = stratified_kfold(&ds, 5, 9).unwrap();
        let seen = seen.into_inner().unwrap();
        assert_eq!(seen.len(), 5);
        for f in 0..5 {
            let (_, ids) = seen.iter().find(|(s, _)| *s == fold_seed(9, f)).unwrap();
            for t in plan.test_indices(f) {
                assert!(!ids.contains(&(t as u64)), "fold {f} leaked sample {t}");
            }
            assert_eq!(ids.len(), plan.train_indices(f).len());
        }
    }

    #[test]
    fn reports_are_reproducible() {
        let ds = synthetic::two_spirals::<f64>(80, 1.5, 0.05, 2).unwrap();
        let spec = small_spec(MethodId::Edrvfl);
        let a = cross_validate(&spec, &ds, 4, 17).unwrap();
        let b = cross_validate(&spec, &ds, 4, 17).unwrap();
        assert_eq!(a.fold_accuracies, b.fold_accuracies);
        assert_eq!(a.mean_accuracy.to_bits(), b.mean_accuracy.to_bits());
    }

    #[test]
    fn singleton_grid_equals_cross_validate() {
        let ds = synthetic::two_spirals::<f64>(60, 1.5, 0.05, 3).unwrap();
        for id in MethodId::ALL {
            let mut spec = small_spec(id);
            spec.network.layers = 2;
            spec.network.lambda = 0.25;
            let grid = GridSpec {
                c_exponents: vec![2],
                l_values: vec![2],
                n_values: vec![10],
            };
            let g = grid_search(&spec, &ds, &grid, 3, 8).unwrap();
            assert_eq!(g.cells.len(), 1);
            let cv = cross_validate(&spec, &ds, 3, 8).unwrap();
            assert_eq!(g.best_cell().report.fold_accuracies, cv.fold_accuracies, "{id}");
            assert_eq!(g.best_config(), &cv.chosen_config, "{id}");
        }
    }

    #[test]
    fn shared_work_matches_naive_cells() {
        let ds = synthetic::two_spirals::<f64>(60, 1.5, 0.05, 4).unwrap();
        let grid = GridSpec {
            c_exponents: vec![4, -2, 0],
            l_values: vec![3, 1],
            n_values: vec![6, 9],
        };
        for id in [MethodId::Rvfl, MethodId::Drvfl, MethodId::Edrvfl, MethodId::EdspRvfl, MethodId::Tedrvfl] {
            let spec = small_spec(id);
            let g = grid_search(&spec, &ds, &grid, 3, 21).unwrap();
            assert_eq!(g.cells.len(), grid.cell_count(&spec));
            for cell in &g.cells {
                let mut naive = spec.clone();
                naive.network.hidden_nodes = cell.hidden_nodes;
                naive.network.layers = cell.layers;
                naive.network.lambda = lambda_for_exponent(cell.c_exponent);
                let cv = cross_validate(&naive, &ds, 3, 21).unwrap();
                assert_eq!(cell.report.fold_accuracies, cv.fold_accuracies, "{id} {}", cell.c_exponent);
            }
            // exhaustive rescan oracle
            let top = g.cells.iter().map(|c| c.report.mean_accuracy).fold(f64::MIN, f64::max);
            assert_eq!(g.best_cell().report.mean_accuracy, top);
            let first = g.cells.iter().filter(|c| c.report.mean_accuracy == top).min_by_key(|c| (c.c_exponent, c.layers, c.hidden_nodes)).unwrap();
            assert_eq!(first, g.best_cell());
        }
    }

    #[test]
    fn default_grid_sizes() {
        let grid = GridSpec::default();
        assert_eq!(grid.c_exponents, vec![-6, -4, -2, 0, 2, 4, 6, 8, 10, 12]);
        assert_eq!(grid.cell_count(&MethodSpec::<f64>::new(MethodId::Edrvfl)), 100);
        assert_eq!(grid.cell_count(&MethodSpec::<f64>::new(MethodId::Rvfl)), 10);
        assert!(GridSpec { l_values: vec![], ..GridSpec::default() }.validate().is_err());
    }

    #[test]
    fn tie_break_prefers_small_c_then_l_then_n() {
        let rep = |acc: f64| EvalReport {
            method: String::new(),
            dataset: String::new(),
            fold_accuracies: vec![acc],
            mean_accuracy: acc,
            std_accuracy: 0.0,
            train_seconds: 0.0,
            test_seconds: 0.0,
            chosen_config: NetworkConfig::<f64>::default(),
        };
        let cell = |c, l, n, acc| GridCell { c_exponent: c, layers: l, hidden_nodes: n, report: rep(acc) };
        let cells = vec![cell(4, 1, 100, 0.9), cell(2, 3, 100, 0.9), cell(2, 2, 200, 0.9), cell(2, 2, 100, 0.9), cell(8, 1, 50, 0.8)];
        assert_eq!(select_best(&cells), 3);
    }

    #[test]
    fn layer_lambda_tuning() {
        let ds = synthetic::two_spirals::<f64>(60, 1.5, 0.05, 6).unwrap();
        let mut spec = small_spec(MethodId::Edrvfl);
        spec.network.layers = 3;
        let (lambdas, report) = tune_layer_lambdas(&spec, &ds, &[-2, 0, 6], 3, 4).unwrap();
        assert_eq!(lambdas.len(), 3);
        assert!(lambdas.iter().all(|l| [4.0, 1.0, 1.0 / 64.0].contains(l)));
        assert_eq!(report.chosen_config.layer_lambdas, Some(lambdas));
        assert!(tune_layer_lambdas(&small_spec(MethodId::Drvfl), &ds, &[0], 3, 4).is_err());
    }

    #[test]
    fn nested_and_timing() {
        let ds = synthetic::gaussian_blobs::<f64>(60, 3, 2, 0.5, 7).unwrap();
        let spec = small_spec(MethodId::Rvfl);
        let grid = GridSpec { c_exponents: vec![0, 4], l_values: vec![1], n_values: vec![10] };
        let r = nested_cross_validate(&spec, &ds, &grid, 3, 3, 5).unwrap();
        assert_eq!(r.fold_accuracies.len(), 3);
        let (a, b) = time_method(&spec, &ds).unwrap();
        assert!(a >= 0.0 && b >= 0.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn mean_std_matches_reordered_accumulation(mut v in proptest::collection::vec(0.0f64..=1.0, 2..30)) {
            let (m, s) = mean_std(&v);
            v.reverse();
            let n = v.len() as f64;
            let mut total = 0.0;
            for x in &v {
                total += x;
            }
            let mean = total / n;
            let mut sq = 0.0;
            for x in &v {
                sq += (x - mean).powi(2);
            }
            prop_assert!((m - mean).abs() < 1e-12);
            prop_assert!((s - (sq / n).sqrt()).abs() < 1e-12);
        }

        #[test]
        fn fold_seeds_differ(seed in any::<u64>()) {
            let seeds: Vec<u64> = (0..10).map(|f| fold_seed(seed, f)).collect();
            for i in 0..10 {
                for j in (i + 1)..10 {
                    prop_assert_ne!(seeds[i], seeds[j]);
                }
            }
        }
    }
}
