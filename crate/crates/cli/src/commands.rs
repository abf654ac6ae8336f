use std::path::{Path, PathBuf};
use std::time::Instant;

use randlink::data::{load_csv, load_features};
use randlink::harness::{cross_validate, grid_search, nested_cross_validate, time_method, tune_layer_lambdas};
use randlink::method::train;
use randlink::stats::{friedman, nemenyi_cd, rank_matrix, significance_pairs};
use randlink::{Classifier, Dataset, DenseMatrix, Error as CoreError, MethodSpec};

use crate::config::{join, ExperimentConfig};
use crate::error::{CliError, Context};
use crate::model_io::{self, SavedModel};
use crate::report::{self, eval_records, parse_reports, Format, Record, TIMING_KIND};

/// Writes records to `out` (format chosen by extension) or to stdout.
pub fn emit(records: &[Record], out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => model_io::write_atomic(path, report::render(records, Format::for_path(path)).as_bytes()),
        None => {
            print!("{}", report::render(records, Format::Text));
            Ok(())
        }
    }
}

pub fn load_datasets(cfg: &ExperimentConfig) -> Result<Vec<Dataset<f64>>, CliError> {
    if cfg.data.is_empty() {
        return Err(CliError::Usage("data.path is required".into()));
    }
    cfg.data
        .iter()
        .map(|p| load_csv(p, &cfg.label_column, cfg.header).context(|| format!("loading {}", p.display())))
        .collect()
}

fn output_path(flag: Option<PathBuf>, cfg: &ExperimentConfig) -> Option<PathBuf> {
    flag.or_else(|| cfg.output.clone())
}

pub fn train_cmd(cfg: &ExperimentConfig, out: Option<PathBuf>) -> Result<(), CliError> {
    let out = output_path(out, cfg).ok_or_else(|| CliError::Usage("train needs --out or an output key".into()))?;
    let datasets = load_datasets(cfg)?;
    let [ds] = &datasets[..] else {
        return Err(CliError::Usage("train takes exactly one dataset".into()));
    };
    let mut spec = cfg.seeded_spec();
    spec.network = spec.effective_network();
    let start = Instant::now();
    let model = train(&spec, ds).context(|| format!("training {} on {}", spec.id, ds.name()))?;
    let seconds = start.elapsed().as_secs_f64();
    let saved = SavedModel {
        spec,
        class_names: ds.class_names().to_vec(),
        model,
    };
    model_io::save(&out, &saved)?;

    let mut records = vec![Record::new("train")
        .str("method", saved.spec.id.name())
        .str("dataset", ds.name())
        .int("samples", ds.len() as u64)
        .int("features", ds.feature_count() as u64)
        .int("classes", ds.class_count() as u64)
        .str("model", out.display().to_string())];
    records.extend(shape_records(&saved));
    records.push(Record::new(TIMING_KIND).num("train_seconds", seconds));
    emit(&records, None)
}

fn shape_records(saved: &SavedModel) -> Vec<Record> {
    use randlink::method::Model;
    let shape = |name: String, m: &DenseMatrix<f64>| {
        Record::new("shape")
            .str("name", name)
            .int("rows", m.rows() as u64)
            .int("cols", m.cols() as u64)
    };
    let mut out = Vec::new();
    let mut deep = |prefix: &str, layers: &[randlink::HiddenLayerParams<f64>], betas: &[&DenseMatrix<f64>]| {
        for (l, p) in layers.iter().enumerate() {
            out.push(shape(format!("{prefix}layer{l}.weights"), &p.weights));
        }
        for (i, b) in betas.iter().enumerate() {
            let name = if betas.len() == 1 { "beta".to_string() } else { format!("beta{i}") };
            out.push(shape(format!("{prefix}{name}"), b));
        }
    };
    match &saved.model {
        Model::Shallow(m) => deep("", std::slice::from_ref(&m.layer), &[&m.beta]),
        Model::Deep(m) => deep("", &m.layers, &[&m.beta]),
        Model::Ensemble(m) => deep("", &m.layers, &m.betas.iter().collect::<Vec<_>>()),
        Model::True(t) => {
            for (i, m) in t.members.iter().enumerate() {
                deep(&format!("member{i}."), &m.layers, &[&m.beta]);
            }
        }
    }
    out
}

/// `labels` names the label column when the input carries one; accuracy
/// against it is then reported as well.
pub fn predict_cmd(
    model_path: &Path,
    data: &Path,
    header: bool,
    labels: Option<&str>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let saved = model_io::load(model_path)?;
    let (features, truth) = match labels {
        Some(col) => {
            let ds = load_csv::<f64>(data, &randlink::data::LabelColumn::parse(col), header)
                .context(|| format!("loading {}", data.display()))?;
            let truth: Vec<Option<usize>> = ds
                .labels()
                .iter()
                .map(|&l| saved.class_names.iter().position(|n| *n == ds.class_names()[l]))
                .collect();
            (ds.features().clone(), Some(truth))
        }
        None => (
            load_features::<f64>(data, header).context(|| format!("loading {}", data.display()))?,
            None,
        ),
    };
    if features.cols() != saved.feature_count() {
        return Err(CliError::Usage(format!(
            "model expects {} features, {} has {}",
            saved.feature_count(),
            data.display(),
            features.cols()
        )));
    }
    let pred = saved.model.predict(&features).context(|| "predicting".to_string())?;
    let mut records: Vec<Record> = pred
        .labels
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            Record::new("prediction")
                .int("row", i as u64)
                .int("class", l as u64)
                .str("label", &saved.class_names[l])
        })
        .collect();
    if let Some(truth) = truth {
        let correct = pred.labels.iter().zip(&truth).filter(|(p, t)| Some(**p) == **t).count();
        records.push(
            Record::new("accuracy")
                .int("correct", correct as u64)
                .int("total", truth.len() as u64)
                .num("value", correct as f64 / truth.len() as f64),
        );
    }
    emit(&records, out.as_deref())
}

pub fn cv_records(cfg: &ExperimentConfig, datasets: &[Dataset<f64>]) -> Result<Vec<Record>, CliError> {
    let spec = cfg.seeded_spec();
    let mut records = Vec::new();
    for ds in datasets {
        let report = if cfg.nested {
            nested_cross_validate(&spec, ds, &cfg.grid, cfg.k, cfg.inner_k, cfg.seed)
        } else {
            cross_validate(&spec, ds, cfg.k, cfg.seed)
        }
        .context(|| format!("cross-validating {} on {}", spec.id, ds.name()))?;
        records.extend(eval_records(&report, cfg.k, cfg.seed));
    }
    Ok(records)
}

pub fn cv_cmd(cfg: &ExperimentConfig, out: Option<PathBuf>) -> Result<(), CliError> {
    let datasets = load_datasets(cfg)?;
    emit(&cv_records(cfg, &datasets)?, output_path(out, cfg).as_deref())
}

/// Every cell, then the chosen setting and its full report per dataset. For
/// layer-ensemble methods the best cell is refined with one λ per layer when
/// that does not lower the cross-validated accuracy.
pub fn grid_records(cfg: &ExperimentConfig, datasets: &[Dataset<f64>]) -> Result<Vec<Record>, CliError> {
    let spec = cfg.seeded_spec();
    let mut records = Vec::new();
    for ds in datasets {
        let result = grid_search(&spec, ds, &cfg.grid, cfg.k, cfg.seed)
            .context(|| format!("grid search for {} on {}", spec.id, ds.name()))?;
        for (i, cell) in result.cells.iter().enumerate() {
            records.push(
                Record::new("cell")
                    .str("dataset", ds.name())
                    .int("index", i as u64)
                    .int("c_exponent", cell.c_exponent as i64)
                    .int("layers", cell.layers as u64)
                    .int("hidden_nodes", cell.hidden_nodes as u64)
                    .num("mean_accuracy", cell.report.mean_accuracy)
                    .num("std_accuracy", cell.report.std_accuracy),
            );
        }
        let best = result.best_cell();
        let mut chosen = best.report.clone();
        let mut layer_lambdas = None;
        if cfg.tune_layer_lambdas && spec.id.is_layer_ensemble() && best.layers > 1 {
            let mut base = spec.clone();
            base.network = best.report.chosen_config.clone();
            let cell_id = format!("c_exponent={} layers={} hidden_nodes={}", best.c_exponent, best.layers, best.hidden_nodes);
            let (lambdas, tuned) = tune_layer_lambdas(&base, ds, &cfg.grid.c_exponents, cfg.k, cfg.seed)
                .context(|| format!("per-layer tuning of {} on {} at {cell_id}", spec.id, ds.name()))?;
            if tuned.mean_accuracy > chosen.mean_accuracy {
                chosen = tuned;
                layer_lambdas = Some(lambdas);
            }
        }
        let mut best_rec = Record::new("best")
            .str("dataset", ds.name())
            .int("index", result.best as u64)
            .int("c_exponent", best.c_exponent as i64)
            .int("layers", best.layers as u64)
            .int("hidden_nodes", best.hidden_nodes as u64);
        if let Some(ls) = &layer_lambdas {
            best_rec = best_rec.str("layer_lambdas", join(ls));
        }
        records.push(best_rec.num("mean_accuracy", chosen.mean_accuracy));
        records.extend(eval_records(&chosen, cfg.k, cfg.seed));
    }
    Ok(records)
}

pub fn grid_cmd(cfg: &ExperimentConfig, out: Option<PathBuf>) -> Result<(), CliError> {
    let datasets = load_datasets(cfg)?;
    emit(&grid_records(cfg, &datasets)?, output_path(out, cfg).as_deref())
}

/// Rank table and Friedman/Nemenyi statistics over the `report` blocks of
/// the given files. Methods and datasets keep their order of first
/// appearance.
pub fn compare_records(files: &[PathBuf], alpha: f64) -> Result<Vec<Record>, CliError> {
    let mut methods: Vec<String> = Vec::new();
    let mut datasets: Vec<String> = Vec::new();
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    for path in files {
        let records = report::read_records(path)?;
        let reports = parse_reports(&records).map_err(|message| CliError::Report {
            path: path.clone(),
            message,
        })?;
        for r in reports {
            let mi = index_of(&mut methods, &r.method);
            let di = index_of(&mut datasets, &r.dataset);
            if entries.iter().any(|&(m, d, _)| (m, d) == (mi, di)) {
                return Err(CliError::Usage(format!(
                    "{} has two reports for dataset {}",
                    r.method, r.dataset
                )));
            }
            entries.push((mi, di, r.mean_accuracy));
        }
    }
    if methods.len() < 2 || datasets.len() < 2 {
        return Err(CliError::Usage(format!(
            "compare needs at least 2 methods and 2 datasets, found {} and {}",
            methods.len(),
            datasets.len()
        )));
    }
    let mut acc = vec![f64::NAN; datasets.len() * methods.len()];
    for &(m, d, a) in &entries {
        acc[d * methods.len() + m] = a;
    }
    if let Some(i) = acc.iter().position(|a| a.is_nan()) {
        return Err(CliError::Usage(format!(
            "method {} has no report for dataset {}",
            methods[i % methods.len()],
            datasets[i / methods.len()]
        )));
    }
    let acc = DenseMatrix::new(datasets.len(), methods.len(), acc).context(|| "accuracy table".to_string())?;
    let table = rank_matrix(&acc).context(|| "ranking".to_string())?;

    let mut out = vec![Record::new("compare")
        .int("methods", methods.len() as u64)
        .int("datasets", datasets.len() as u64)
        .num("alpha", alpha)];
    for (d, name) in datasets.iter().enumerate() {
        for (m, method) in methods.iter().enumerate() {
            out.push(
                Record::new("rank")
                    .str("dataset", name)
                    .str("method", method)
                    .num("accuracy", acc.get(d, m))
                    .num("rank", table.ranks.get(d, m)),
            );
        }
    }
    for (m, method) in methods.iter().enumerate() {
        out.push(Record::new("avg_rank").str("method", method).num("rank", table.avg_ranks[m]));
    }
    let (m, big) = (methods.len(), datasets.len());
    out.push(match friedman(&table.avg_ranks, big) {
        Ok(f) => Record::new("friedman")
            .num("chi_squared", f.chi_squared)
            .num("f_statistic", f.f_statistic)
            .int("df1", f.df1 as u64)
            .int("df2", f.df2 as u64),
        Err(CoreError::DegenerateFStatistic { chi_squared, .. }) => Record::new("friedman")
            .num("chi_squared", chi_squared)
            .num("f_statistic", f64::INFINITY)
            .int("df1", (m - 1) as u64)
            .int("df2", ((m - 1) * (big - 1)) as u64)
            .flag("degenerate", true),
        Err(e) => return Err(e).context(|| "Friedman test".to_string()),
    });
    let nem = nemenyi_cd(m, big, alpha).context(|| "Nemenyi test".to_string())?;
    out.push(
        Record::new("nemenyi")
            .num("alpha", nem.alpha)
            .num("q_alpha", nem.q_alpha)
            .num("critical_difference", nem.critical_difference),
    );
    for p in significance_pairs(&table.avg_ranks, nem.critical_difference).context(|| "pairs".to_string())? {
        out.push(
            Record::new("pair")
                .str("first", &methods[p.first])
                .str("second", &methods[p.second])
                .num("rank_difference", p.rank_difference)
                .flag("significant", p.significant),
        );
    }
    Ok(out)
}

fn index_of(names: &mut Vec<String>, name: &str) -> usize {
    names.iter().position(|n| n == name).unwrap_or_else(|| {
        names.push(name.to_string());
        names.len() - 1
    })
}

pub fn compare_cmd(files: &[PathBuf], alpha: f64, out: Option<PathBuf>) -> Result<(), CliError> {
    emit(&compare_records(files, alpha)?, out.as_deref())
}

/// Median train and test seconds over the configured repeats for each layer
/// count in `bench.layers`.
pub fn bench_records(cfg: &ExperimentConfig, datasets: &[Dataset<f64>]) -> Result<Vec<Record>, CliError> {
    let base = cfg.seeded_spec();
    let mut out = Vec::new();
    for ds in datasets {
        for &layers in &cfg.bench_layers {
            let mut spec: MethodSpec<f64> = base.clone();
            spec.network.layers = layers;
            let mut train_s = Vec::with_capacity(cfg.bench_repeats);
            let mut test_s = Vec::with_capacity(cfg.bench_repeats);
            for _ in 0..cfg.bench_repeats {
                let (a, b) = time_method(&spec, ds).context(|| format!("timing {} at L={layers}", spec.id))?;
                train_s.push(a);
                test_s.push(b);
            }
            out.push(
                Record::new("bench")
                    .str("method", spec.id.name())
                    .str("dataset", ds.name())
                    .int("layers", spec.effective_network().layers as u64)
                    .int("repeats", cfg.bench_repeats as u64)
                    .num("train_seconds_median", median(train_s))
                    .num("test_seconds_median", median(test_s)),
            );
        }
    }
    Ok(out)
}

pub fn bench_cmd(cfg: &ExperimentConfig, out: Option<PathBuf>) -> Result<(), CliError> {
    let datasets = load_datasets(cfg)?;
    emit(&bench_records(cfg, &datasets)?, output_path(out, cfg).as_deref())
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
