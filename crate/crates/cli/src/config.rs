//! Flat `key = value` experiment files.
//!
//! ```text
//! # comments start with '#'
//! data.path = spirals.csv
//! data.label = last
//! method = edrvfl
//! network.hidden_nodes = 100
//! network.layers = 8
//! grid.c_exponents = -6..12:2
//! cv.k = 10
//! seed = 7
//! ```
//!
//! Relative data paths resolve against the directory of the config file.

use std::path::{Path, PathBuf};

use randlink::data::LabelColumn;
use randlink::harness::GridSpec;
use randlink::sparse::StepSize;
use randlink::{Activation, MethodId, MethodSpec, NetworkConfig, NormMethod};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub data: Vec<PathBuf>,
    pub label_column: LabelColumn,
    pub header: bool,
    pub spec: MethodSpec<f64>,
    pub grid: GridSpec,
    /// Refine layer-ensemble methods with one λ per layer after the grid.
    pub tune_layer_lambdas: bool,
    pub k: usize,
    pub nested: bool,
    pub inner_k: usize,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub bench_repeats: usize,
    pub bench_layers: Vec<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            data: Vec::new(),
            label_column: LabelColumn::Last,
            header: false,
            spec: MethodSpec::new(MethodId::Rvfl),
            grid: GridSpec::default(),
            tune_layer_lambdas: true,
            k: 10,
            nested: false,
            inner_k: 5,
            seed: 0,
            output: None,
            bench_repeats: 5,
            bench_layers: vec![1, 5, 10],
        }
    }
}

impl ExperimentConfig {
    /// The method spec with the experiment seed applied.
    pub fn seeded_spec(&self) -> MethodSpec<f64> {
        self.spec.clone().with_seed(self.seed)
    }

    pub fn set(&mut self, key: &str, value: &str, base_dir: &Path) -> Result<(), String> {
        match key {
            "data.path" | "data.paths" => {
                self.data = list(value)
                    .into_iter()
                    .map(|p| base_dir.join(p))
                    .collect();
            }
            "data.label" => self.label_column = LabelColumn::parse(value),
            "data.header" => self.header = parse_bool(value)?,
            "method" => self.spec.id = value.parse().map_err(|e: randlink::Error| e.to_string())?,
            "seed" => self.seed = parse_num(value)?,
            "output" => self.output = Some(base_dir.join(value)),
            "cv.k" => self.k = parse_num(value)?,
            "cv.nested" => self.nested = parse_bool(value)?,
            "cv.inner_k" => self.inner_k = parse_num(value)?,
            "grid.c_exponents" => self.grid.c_exponents = parse_int_list(value)?,
            "grid.l_values" => self.grid.l_values = parse_usize_list(value)?,
            "grid.n_values" => self.grid.n_values = parse_usize_list(value)?,
            "grid.layer_lambdas" => self.tune_layer_lambdas = parse_bool(value)?,
            "fista.l1_weight" => self.spec.fista.l1_weight = parse_num(value)?,
            "fista.max_iterations" => self.spec.fista.max_iterations = parse_num(value)?,
            "fista.tolerance" => self.spec.fista.tolerance = parse_num(value)?,
            "fista.step" => {
                self.spec.fista.step = match value {
                    "auto" | "lipschitz" => StepSize::Lipschitz,
                    v => StepSize::Fixed(parse_num(v)?),
                }
            }
            "ensemble.combine" => self.spec.combine = value.parse().map_err(|e: randlink::Error| e.to_string())?,
            "ensemble.members" => self.spec.members = Some(parse_num(value)?),
            "bench.repeats" => self.bench_repeats = parse_num(value)?,
            "bench.layers" => self.bench_layers = parse_usize_list(value)?,
            k if k.starts_with("network.") => set_network(&mut self.spec.network, &k["network.".len()..], value)?,
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.k < 2 {
            return Err(CliError::Usage(format!("cv.k must be at least 2, got {}", self.k)));
        }
        if self.bench_repeats == 0 {
            return Err(CliError::Usage("bench.repeats must be positive".into()));
        }
        self.grid.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        self.spec
            .effective_network()
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        self.spec.fista.validate().map_err(|e| CliError::Usage(e.to_string()))
    }
}

pub fn parse_config(text: &str, path: &Path) -> Result<ExperimentConfig, CliError> {
    let base_dir = path.parent().unwrap_or(Path::new("."));
    let mut cfg = ExperimentConfig::default();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let err = |message: String| CliError::Config {
            path: path.to_path_buf(),
            line: n + 1,
            message,
        };
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, got {line:?}")))?;
        cfg.set(key.trim(), value.trim(), base_dir).map_err(err)?;
    }
    Ok(cfg)
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config(&text, path)
}

/// Applies one `network.*` key (without the prefix).
pub fn set_network(cfg: &mut NetworkConfig<f64>, key: &str, value: &str) -> Result<(), String> {
    match key {
        "hidden_nodes" => cfg.hidden_nodes = parse_num(value)?,
        "layers" => cfg.layers = parse_num(value)?,
        "lambda" => cfg.lambda = parse_num(value)?,
        "c" => cfg.lambda = 1.0 / parse_num::<f64>(value)?,
        "c_exponent" => cfg.lambda = 2f64.powi(-parse_num::<i32>(value)?),
        "layer_lambdas" => {
            cfg.layer_lambdas = match value {
                "none" | "" => None,
                v => Some(list(v).iter().map(|x| parse_num(x)).collect::<Result<_, _>>()?),
            }
        }
        "direct_links" => cfg.direct_links = parse_bool(value)?,
        "bias_in_output" => cfg.bias_in_output = parse_bool(value)?,
        "hidden_bias" => cfg.hidden_bias = parse_bool(value)?,
        "activation" => cfg.activation = value.parse::<Activation>().map_err(|e| e.to_string())?,
        "seed" => cfg.seed = parse_num(value)?,
        "weight_range" => cfg.weight_range = parse_pair(value)?,
        "bias_range" => cfg.bias_range = parse_pair(value)?,
        "normalization" => cfg.normalization = value.parse::<NormMethod>().map_err(|e| e.to_string())?,
        other => return Err(format!("unknown key \"network.{other}\"")),
    }
    Ok(())
}

/// Every network setting as `(key, value)` with keys relative to `network.`;
/// floats print in shortest round-trip form.
pub fn network_pairs(cfg: &NetworkConfig<f64>) -> Vec<(&'static str, String)> {
    vec![
        ("hidden_nodes", cfg.hidden_nodes.to_string()),
        ("layers", cfg.layers.to_string()),
        ("lambda", cfg.lambda.to_string()),
        (
            "layer_lambdas",
            match &cfg.layer_lambdas {
                None => "none".to_string(),
                Some(ls) => join(ls),
            },
        ),
        ("direct_links", cfg.direct_links.to_string()),
        ("bias_in_output", cfg.bias_in_output.to_string()),
        ("hidden_bias", cfg.hidden_bias.to_string()),
        ("activation", cfg.activation.to_string()),
        ("seed", cfg.seed.to_string()),
        ("weight_range", format!("{},{}", cfg.weight_range.0, cfg.weight_range.1)),
        ("bias_range", format!("{},{}", cfg.bias_range.0, cfg.bias_range.1)),
        ("normalization", cfg.normalization.to_string()),
    ]
}

pub fn join<T: ToString>(values: &[T]) -> String {
    values.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
}

fn list(value: &str) -> Vec<&str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty()).collect()
}

fn parse_num<T: std::str::FromStr>(value: &str) -> Result<T, String> {
    value.trim().parse().map_err(|_| format!("cannot parse {value:?} as a number"))
}

fn parse_bool(value: &str) -> Result<bool, String> {
    match value {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        other => Err(format!("expected true or false, got {other:?}")),
    }
}

fn parse_pair(value: &str) -> Result<(f64, f64), String> {
    match list(value).as_slice() {
        [a, b] => Ok((parse_num(a)?, parse_num(b)?)),
        _ => Err(format!("expected `lo,hi`, got {value:?}")),
    }
}

/// Comma lists and inclusive ranges `lo..hi` or `lo..hi:step`, mixed freely.
fn parse_int_list(value: &str) -> Result<Vec<i32>, String> {
    let mut out = Vec::new();
    for item in list(value) {
        if let Some((lo, rest)) = item.split_once("..") {
            let (hi, step) = match rest.split_once(':') {
                Some((h, s)) => (h, parse_num::<i32>(s)?),
                None => (rest, 1),
            };
            if step <= 0 {
                return Err(format!("range step must be positive in {item:?}"));
            }
            let (lo, hi) = (parse_num::<i32>(lo)?, parse_num::<i32>(hi)?);
            out.extend((lo..=hi).step_by(step as usize));
        } else {
            out.push(parse_num(item)?);
        }
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

fn parse_usize_list(value: &str) -> Result<Vec<usize>, String> {
    parse_int_list(value)?
        .into_iter()
        .map(|v| usize::try_from(v).map_err(|_| format!("negative count {v}")))
        .collect()
}
