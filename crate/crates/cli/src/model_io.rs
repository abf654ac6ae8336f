//! Self-describing model files.
//!
//! A model file is UTF-8 text, one keyword per line. Every matrix is stored
//! as `matrix <name> <rows> <cols> <base64 of little-endian f64, row-major>`
//! and every vector as `vector <name> <len> <base64>`, so values round-trip
//! bit for bit. The last line is `checksum sha256 <hex>` over all preceding
//! bytes.
//!
//! ```text
//! randlink-model 1
//! method edrvfl
//! scalar f64
//! seed 7
//! class_names ["a","b"]
//! spec hidden_nodes 100
//! ...
//! model ensemble
//! unit 0
//! ...
//! checksum sha256 9f2c...
//! ```

use std::io::Write as _;
use std::path::Path;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine as _;
use randlink::method::Model;
use randlink::sparse::StepSize;
use randlink::{
    Activation, Classifier, CombineRule, DeepModel, DenseMatrix, EnsembleDeepModel, HiddenLayerParams, MethodId,
    MethodSpec, NetworkConfig, NormMethod, NormalizationParams, ShallowKind, ShallowModel, TrueEnsemble,
};
use sha2::{Digest, Sha256};

use crate::config::{network_pairs, set_network};
use crate::error::CliError;

pub const FORMAT_VERSION: u32 = 1;
const MAGIC: &str = "randlink-model";

/// A trained model plus everything needed to use it without the config.
#[derive(Clone, Debug, PartialEq)]
pub struct SavedModel {
    /// Method and settings as trained; `spec.network.seed` is the seed.
    pub spec: MethodSpec<f64>,
    pub class_names: Vec<String>,
    pub model: Model<f64>,
}

impl SavedModel {
    pub fn feature_count(&self) -> usize {
        units(&self.model)[0].norm.feature_count()
    }
}

struct UnitRef<'a> {
    config: &'a NetworkConfig<f64>,
    norm: &'a NormalizationParams<f64>,
    classes: usize,
    layers: Vec<&'a HiddenLayerParams<f64>>,
    betas: Vec<&'a DenseMatrix<f64>>,
}

fn units(model: &Model<f64>) -> Vec<UnitRef<'_>> {
    fn deep(m: &DeepModel<f64>) -> UnitRef<'_> {
        UnitRef {
            config: &m.config,
            norm: &m.norm_params,
            classes: m.classes,
            layers: m.layers.iter().collect(),
            betas: vec![&m.beta],
        }
    }
    match model {
        Model::Shallow(m) => vec![UnitRef {
            config: &m.config,
            norm: &m.norm_params,
            classes: m.classes,
            layers: vec![&m.layer],
            betas: vec![&m.beta],
        }],
        Model::Deep(m) => vec![deep(m)],
        Model::Ensemble(m) => vec![UnitRef {
            config: &m.config,
            norm: &m.norm_params,
            classes: m.classes,
            layers: m.layers.iter().collect(),
            betas: m.betas.iter().collect(),
        }],
        Model::True(t) => t.members.iter().map(deep).collect(),
    }
}

fn encode(values: &[f64]) -> String {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    B64.encode(bytes)
}

pub fn to_text(saved: &SavedModel) -> String {
    let mut out = String::new();
    let mut line = |s: String| {
        out.push_str(&s);
        out.push('\n');
    };
    let spec = &saved.spec;
    line(format!("{MAGIC} {FORMAT_VERSION}"));
    line(format!("method {}", spec.id));
    line("scalar f64".into());
    line(format!("seed {}", spec.network.seed));
    line(format!(
        "class_names {}",
        serde_json::to_string(&saved.class_names).expect("strings serialize")
    ));
    for (k, v) in network_pairs(&spec.network) {
        line(format!("spec {k} {v}"));
    }
    line(format!("fista l1_weight {}", spec.fista.l1_weight));
    line(format!("fista max_iterations {}", spec.fista.max_iterations));
    line(format!("fista tolerance {}", spec.fista.tolerance));
    line(match spec.fista.step {
        StepSize::Lipschitz => "fista step auto".into(),
        StepSize::Fixed(s) => format!("fista step {s}"),
    });
    line(format!("combine {}", spec.combine));
    line(format!("members {}", spec.members.map_or("default".to_string(), |m| m.to_string())));

    let (kind, extra) = match &saved.model {
        Model::Shallow(m) => ("shallow", format!("kind {}", m.kind)),
        Model::Deep(m) => ("deep", format!("pretrained {}", m.pretrained)),
        Model::Ensemble(m) => ("ensemble", format!("pretrained {} {}", m.pretrained, m.combine)),
        Model::True(t) => ("true", format!("combine {}", t.combine)),
    };
    line(format!("model {kind}"));
    line(extra);
    let units = units(&saved.model);
    line(format!("units {}", units.len()));
    for (i, u) in units.iter().enumerate() {
        line(format!("unit {i}"));
        for (k, v) in network_pairs(u.config) {
            line(format!("config {k} {v}"));
        }
        line(format!("classes {}", u.classes));
        line(format!("norm {}", u.norm.method));
        line(format!("vector offsets {} {}", u.norm.offsets.len(), encode(&u.norm.offsets)));
        line(format!("vector scales {} {}", u.norm.scales.len(), encode(&u.norm.scales)));
        line(format!("layers {}", u.layers.len()));
        for (l, p) in u.layers.iter().enumerate() {
            line(format!("layer {l} {}", p.activation));
            let (r, c) = p.weights.shape();
            line(format!("matrix weights {r} {c} {}", encode(p.weights.as_slice())));
            line(format!("vector biases {} {}", p.biases.len(), encode(&p.biases)));
        }
        line(format!("betas {}", u.betas.len()));
        for b in &u.betas {
            let (r, c) = b.shape();
            line(format!("matrix beta {r} {c} {}", encode(b.as_slice())));
        }
    }
    line("end".into());
    let digest = hex_digest(out.as_bytes());
    out.push_str(&format!("checksum sha256 {digest}\n"));
    out
}

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so readers never observe a partial file.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    tmp.write_all(contents).map_err(|e| CliError::io(path, e))?;
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

pub fn save(path: &Path, saved: &SavedModel) -> Result<(), CliError> {
    write_atomic(path, to_text(saved).as_bytes())
}

pub fn load(path: &Path) -> Result<SavedModel, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    from_bytes(&bytes).map_err(|message| CliError::ModelFormat {
        path: path.to_path_buf(),
        message,
    })
}

pub fn from_bytes(bytes: &[u8]) -> Result<SavedModel, String> {
    let body_end = bytes
        .strip_suffix(b"\n")
        .and_then(|b| b.iter().rposition(|&c| c == b'\n'))
        .map(|i| i + 1)
        .ok_or("truncated model file")?;
    let (body, trailer) = bytes.split_at(body_end);
    let trailer = std::str::from_utf8(trailer).map_err(|_| "checksum line is not UTF-8")?;
    let expected = trailer
        .strip_prefix("checksum sha256 ")
        .and_then(|t| t.strip_suffix('\n'))
        .ok_or("missing checksum line")?;
    if hex_digest(body) != expected {
        return Err("checksum mismatch".into());
    }
    let text = std::str::from_utf8(body).map_err(|_| "model body is not UTF-8")?;
    let mut r = Reader {
        lines: text.lines().enumerate().peekable(),
    };
    let saved = r.read_model()?;
    validate(&saved)?;
    Ok(saved)
}

struct Reader<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
}

impl<'a> Reader<'a> {
    /// Next line, which must start with `keyword`; returns the remainder.
    fn expect(&mut self, keyword: &str) -> Result<&'a str, String> {
        let (n, line) = self.lines.next().ok_or_else(|| format!("expected {keyword:?}, found end of file"))?;
        match line.split_once(' ') {
            Some((k, rest)) if k == keyword => Ok(rest),
            None if line == keyword => Ok(""),
            _ => Err(format!("line {}: expected {keyword:?}", n + 1)),
        }
    }

    fn peek_is(&mut self, keyword: &str) -> bool {
        self.lines
            .peek()
            .is_some_and(|(_, l)| l.split(' ').next() == Some(keyword))
    }

    fn key_value(&mut self, keyword: &str) -> Result<(&'a str, &'a str), String> {
        let rest = self.expect(keyword)?;
        Ok(rest.split_once(' ').unwrap_or((rest, "")))
    }

    fn number<T: std::str::FromStr>(&mut self, keyword: &str) -> Result<T, String> {
        let rest = self.expect(keyword)?;
        rest.parse().map_err(|_| format!("bad {keyword} value {rest:?}"))
    }

    fn vector(&mut self, name: &str) -> Result<Vec<f64>, String> {
        let rest = self.expect("vector")?;
        let parts: Vec<&str> = rest.split(' ').collect();
        let [n, len, data] = parts[..] else {
            return Err(format!("malformed vector {name}"));
        };
        if n != name {
            return Err(format!("expected vector {name}, found {n}"));
        }
        decode(data, parse_count(len)?, name)
    }

    fn matrix(&mut self, name: &str) -> Result<DenseMatrix<f64>, String> {
        let rest = self.expect("matrix")?;
        let parts: Vec<&str> = rest.split(' ').collect();
        let [n, rows, cols, data] = parts[..] else {
            return Err(format!("malformed matrix {name}"));
        };
        if n != name {
            return Err(format!("expected matrix {name}, found {n}"));
        }
        let (rows, cols) = (parse_count(rows)?, parse_count(cols)?);
        let len = rows.checked_mul(cols).ok_or("matrix shape overflows")?;
        let values = decode(data, len, name)?;
        DenseMatrix::new(rows, cols, values).map_err(|e| format!("matrix {name}: {e}"))
    }

    fn network(&mut self, keyword: &str) -> Result<NetworkConfig<f64>, String> {
        let mut cfg = NetworkConfig::default();
        while self.peek_is(keyword) {
            let (k, v) = self.key_value(keyword)?;
            set_network(&mut cfg, k, v)?;
        }
        Ok(cfg)
    }

    fn read_model(&mut self) -> Result<SavedModel, String> {
        let version: u32 = self.number(MAGIC).map_err(|_| "not a randlink model file".to_string())?;
        if version != FORMAT_VERSION {
            return Err(format!("unsupported model format version {version}"));
        }
        let id: MethodId = self.expect("method")?.parse().map_err(|e: randlink::Error| e.to_string())?;
        let scalar = self.expect("scalar")?;
        if scalar != "f64" {
            return Err(format!("unsupported scalar type {scalar:?}"));
        }
        let seed: u64 = self.number("seed")?;
        let class_names: Vec<String> =
            serde_json::from_str(self.expect("class_names")?).map_err(|e| format!("class names: {e}"))?;
        let network = self.network("spec")?;
        if network.seed != seed {
            return Err("seed line disagrees with the stored config".into());
        }
        let mut spec = MethodSpec::with_network(id, network);
        spec.fista.l1_weight = self.fista_value("l1_weight")?;
        spec.fista.max_iterations = self.fista_value("max_iterations")?;
        spec.fista.tolerance = self.fista_value("tolerance")?;
        spec.fista.step = match self.fista_raw("step")? {
            "auto" => StepSize::Lipschitz,
            s => StepSize::Fixed(s.parse().map_err(|_| format!("bad FISTA step {s:?}"))?),
        };
        spec.combine = parse_combine(self.expect("combine")?)?;
        spec.members = match self.expect("members")? {
            "default" => None,
            m => Some(parse_count(m)?),
        };

        let kind = self.expect("model")?;
        let model = match kind {
            "shallow" => {
                let kind = match self.expect("kind")? {
                    "rvfl" => ShallowKind::Rvfl,
                    "elm" => ShallowKind::Elm,
                    "sp-rvfl" => ShallowKind::SpRvfl,
                    other => return Err(format!("unknown shallow kind {other:?}")),
                };
                let mut u = self.single_unit()?;
                Model::Shallow(ShallowModel {
                    kind,
                    layer: u.layers.pop().filter(|_| u.layers.is_empty()).ok_or("shallow model needs one layer")?,
                    beta: one(u.betas)?,
                    config: u.config,
                    norm_params: u.norm,
                    classes: u.classes,
                })
            }
            "deep" => {
                let pretrained = parse_bool(self.expect("pretrained")?)?;
                Model::Deep(self.single_unit()?.into_deep(pretrained)?)
            }
            "ensemble" => {
                let rest = self.expect("pretrained")?;
                let (p, c) = rest.split_once(' ').ok_or("malformed ensemble line")?;
                let (pretrained, combine) = (parse_bool(p)?, parse_combine(c)?);
                let u = self.single_unit()?;
                if u.betas.len() != u.layers.len() {
                    return Err("ensemble needs one output matrix per layer".into());
                }
                Model::Ensemble(EnsembleDeepModel {
                    layers: u.layers,
                    betas: u.betas,
                    combine,
                    config: u.config,
                    norm_params: u.norm,
                    classes: u.classes,
                    pretrained,
                })
            }
            "true" => {
                let combine = parse_combine(self.expect("combine")?)?;
                let count = parse_count(self.expect("units")?)?;
                let members = (0..count)
                    .map(|i| self.unit(i)?.into_deep(false))
                    .collect::<Result<Vec<_>, _>>()?;
                if members.is_empty() {
                    return Err("true ensemble without members".into());
                }
                Model::True(TrueEnsemble { members, combine })
            }
            other => return Err(format!("unknown model kind {other:?}")),
        };
        self.expect("end")?;
        if let Some((n, _)) = self.lines.next() {
            return Err(format!("line {}: trailing content after end", n + 1));
        }
        Ok(SavedModel {
            spec,
            class_names,
            model,
        })
    }

    fn fista_raw(&mut self, key: &str) -> Result<&'a str, String> {
        let (k, v) = self.key_value("fista")?;
        if k != key {
            return Err(format!("expected fista {key}, found fista {k}"));
        }
        Ok(v)
    }

    fn fista_value<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, String> {
        let v = self.fista_raw(key)?;
        v.parse().map_err(|_| format!("bad fista {key} value {v:?}"))
    }

    fn single_unit(&mut self) -> Result<Unit, String> {
        if parse_count(self.expect("units")?)? != 1 {
            return Err("expected exactly one unit".into());
        }
        self.unit(0)
    }

    fn unit(&mut self, index: usize) -> Result<Unit, String> {
        if parse_count(self.expect("unit")?)? != index {
            return Err(format!("units out of order at {index}"));
        }
        let config = self.network("config")?;
        let classes = parse_count(self.expect("classes")?)?;
        let method: NormMethod = self.expect("norm")?.parse().map_err(|e: randlink::Error| e.to_string())?;
        let offsets = self.vector("offsets")?;
        let scales = self.vector("scales")?;
        if offsets.len() != scales.len() {
            return Err("normalization vectors differ in length".into());
        }
        let layer_count = parse_count(self.expect("layers")?)?;
        let mut layers = Vec::with_capacity(layer_count.min(1024));
        for l in 0..layer_count {
            let rest = self.expect("layer")?;
            let (idx, act) = rest.split_once(' ').ok_or("malformed layer line")?;
            if parse_count(idx)? != l {
                return Err(format!("layers out of order at {l}"));
            }
            let activation: Activation = act.parse().map_err(|e: randlink::Error| e.to_string())?;
            let weights = self.matrix("weights")?;
            let biases = self.vector("biases")?;
            layers.push(HiddenLayerParams::new(weights, biases, activation).map_err(|e| e.to_string())?);
        }
        let beta_count = parse_count(self.expect("betas")?)?;
        let betas = (0..beta_count).map(|_| self.matrix("beta")).collect::<Result<Vec<_>, _>>()?;
        Ok(Unit {
            config,
            norm: NormalizationParams {
                method,
                offsets,
                scales,
            },
            classes,
            layers,
            betas,
        })
    }
}

struct Unit {
    config: NetworkConfig<f64>,
    norm: NormalizationParams<f64>,
    classes: usize,
    layers: Vec<HiddenLayerParams<f64>>,
    betas: Vec<DenseMatrix<f64>>,
}

impl Unit {
    fn into_deep(self, pretrained: bool) -> Result<DeepModel<f64>, String> {
        Ok(DeepModel {
            layers: self.layers,
            beta: one(self.betas)?,
            config: self.config,
            norm_params: self.norm,
            classes: self.classes,
            pretrained,
        })
    }
}

fn one(mut betas: Vec<DenseMatrix<f64>>) -> Result<DenseMatrix<f64>, String> {
    match (betas.pop(), betas.is_empty()) {
        (Some(b), true) => Ok(b),
        _ => Err("expected exactly one output matrix".into()),
    }
}

fn decode(data: &str, len: usize, name: &str) -> Result<Vec<f64>, String> {
    let bytes = B64.decode(data).map_err(|e| format!("{name}: {e}"))?;
    if bytes.len() != len * 8 {
        return Err(format!("{name}: expected {len} values, found {} bytes", bytes.len()));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunks of eight")))
        .collect())
}

fn parse_count(s: &str) -> Result<usize, String> {
    s.parse().map_err(|_| format!("bad count {s:?}"))
}

fn parse_bool(s: &str) -> Result<bool, String> {
    s.parse().map_err(|_| format!("bad flag {s:?}"))
}

fn parse_combine(s: &str) -> Result<CombineRule, String> {
    s.parse().map_err(|e: randlink::Error| e.to_string())
}

/// Shape checks beyond what parsing enforces: every unit agrees on input
/// width and class count, and a forward pass on one row succeeds.
fn validate(saved: &SavedModel) -> Result<(), String> {
    let units = units(&saved.model);
    let d = units[0].norm.feature_count();
    let classes = saved.class_names.len();
    if d == 0 {
        return Err("model has no input features".into());
    }
    for u in &units {
        if u.norm.feature_count() != d || u.classes != classes {
            return Err("units disagree on input width or class count".into());
        }
        if u.layers.is_empty() || u.layers[0].weights.rows() != d {
            return Err("first hidden layer does not match the input width".into());
        }
        if u.betas.iter().any(|b| b.cols() != classes) {
            return Err("output matrix width does not match the class count".into());
        }
    }
    let probe = DenseMatrix::zeros(1, d).map_err(|e| e.to_string())?;
    let p = saved.model.predict(&probe).map_err(|e| format!("inconsistent shapes: {e}"))?;
    if p.scores.cols() != classes {
        return Err("score width does not match the class count".into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use randlink::data::synthetic;
    use randlink::method::train;

    fn saved(id: MethodId) -> (SavedModel, randlink::Dataset<f64>) {
        let ds = synthetic::gaussian_blobs::<f64>(40, 3, 3, 0.6, 5).unwrap();
        let mut spec = MethodSpec::<f64>::new(id).with_seed(17);
        spec.network.hidden_nodes = 6;
        spec.network.layers = 3;
        spec.network.lambda = 0.1;
        spec.network = spec.effective_network();
        let model = train(&spec, &ds).unwrap();
        let class_names = ds.class_names().to_vec();
        (SavedModel { spec, class_names, model }, ds)
    }

    #[test]
    fn every_method_round_trips_bit_exactly() {
        for id in MethodId::ALL {
            let (s, ds) = saved(id);
            let back = from_bytes(to_text(&s).as_bytes()).unwrap();
            assert_eq!(back, s, "{id}");
            let (a, b) = (s.model.predict(ds.features()).unwrap(), back.model.predict(ds.features()).unwrap());
            assert_eq!(a.labels, b.labels);
            let bits = |m: &DenseMatrix<f64>| m.as_slice().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(&a.scores), bits(&b.scores), "{id}");
        }
    }

    #[test]
    fn every_single_bit_flip_is_rejected() {
        let (s, _) = saved(MethodId::Edrvfl);
        let bytes = to_text(&s).into_bytes();
        // Every byte position, one bit each, cycling through bit indices.
        for i in 0..bytes.len() {
            let mut b = bytes.clone();
            b[i] ^= 1 << (i % 8);
            assert!(from_bytes(&b).is_err(), "flip at byte {i} was accepted");
        }
    }

    #[test]
    fn shape_errors_are_caught_even_with_a_valid_checksum() {
        let (s, _) = saved(MethodId::Rvfl);
        let text = to_text(&s);
        let body = text.rsplit_once("checksum").unwrap().0;
        // Drop the final beta column by claiming 2 classes in the header.
        let broken = body.replacen("class_names [\"0\",\"1\",\"2\"]", "class_names [\"0\",\"1\"]", 1);
        assert_ne!(broken, body);
        let resigned = format!("{broken}checksum sha256 {}\n", hex_digest(broken.as_bytes()));
        let err = from_bytes(resigned.as_bytes()).unwrap_err();
        assert!(err.contains("class count"), "{err}");
    }

    #[test]
    fn truncation_and_version_are_checked() {
        let (s, _) = saved(MethodId::Elm);
        let text = to_text(&s);
        assert!(from_bytes(&text.as_bytes()[..text.len() / 2]).is_err());
        assert!(from_bytes(b"").is_err());
        let body = text.rsplit_once("checksum").unwrap().0.replacen("randlink-model 1", "randlink-model 2", 1);
        let resigned = format!("{body}checksum sha256 {}\n", hex_digest(body.as_bytes()));
        assert!(from_bytes(resigned.as_bytes()).unwrap_err().contains("version"));
    }

    #[test]
    fn atomic_write_replaces_whole_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.model");
        std::fs::write(&path, "old contents that are longer than nothing").unwrap();
        let (s, _) = saved(MethodId::Drvfl);
        save(&path, &s).unwrap();
        assert_eq!(load(&path).unwrap(), s);
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
