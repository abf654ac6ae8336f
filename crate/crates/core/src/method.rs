use std::fmt;
use std::str::FromStr;

use crate::data::Dataset;
use crate::deep::{train_drvfl_path, train_dsp_rvfl_path, DeepModel};
use crate::ensemble::{train_edrvfl, train_edrvfl_path, train_edsp_rvfl, train_edsp_rvfl_path, CombineRule, EnsembleDeepModel, TrueEnsemble};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::network::{Classifier, NetworkConfig, Prediction};
use crate::scalar::Scalar;
use crate::shallow::{single, train_shallow_path, ShallowKind, ShallowModel};
use crate::sparse::{train_sp_rvfl_path, FistaConfig};

/// The compared methods, by command-line id.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MethodId {
    Elm,
    Rvfl,
    SpRvfl,
    Drvfl,
    DrvflNoDl,
    Edrvfl,
    EdrvflNoDl,
    DspRvfl,
    EdspRvfl,
    Tedrvfl,
}

impl MethodId {
    pub const ALL: [MethodId; 10] = [
        MethodId::Elm,
        MethodId::Rvfl,
        MethodId::SpRvfl,
        MethodId::Drvfl,
        MethodId::DrvflNoDl,
        MethodId::Edrvfl,
        MethodId::EdrvflNoDl,
        MethodId::DspRvfl,
        MethodId::EdspRvfl,
        MethodId::Tedrvfl,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MethodId::Elm => "elm",
            MethodId::Rvfl => "rvfl",
            MethodId::SpRvfl => "sp-rvfl",
            MethodId::Drvfl => "drvfl",
            MethodId::DrvflNoDl => "drvfl-no-dl",
            MethodId::Edrvfl => "edrvfl",
            MethodId::EdrvflNoDl => "edrvfl-no-dl",
            MethodId::DspRvfl => "dsp-rvfl",
            MethodId::EdspRvfl => "edsp-rvfl",
            MethodId::Tedrvfl => "tedrvfl",
        }
    }

    /// Single hidden layer; the layer count is fixed at 1.
    pub fn is_shallow(self) -> bool {
        matches!(self, MethodId::Elm | MethodId::Rvfl | MethodId::SpRvfl)
    }

    /// One output solve per layer over a shared stack, so an L-layer model is
    /// a prefix of any deeper one.
    pub fn is_layer_ensemble(self) -> bool {
        matches!(self, MethodId::Edrvfl | MethodId::EdrvflNoDl | MethodId::EdspRvfl)
    }

    pub fn uses_fista(self) -> bool {
        matches!(self, MethodId::SpRvfl | MethodId::DspRvfl | MethodId::EdspRvfl)
    }

    /// Direct-link setting imposed by the method, if any.
    pub fn forced_direct_links(self) -> Option<bool> {
        match self {
            MethodId::DrvflNoDl | MethodId::EdrvflNoDl => Some(false),
            MethodId::Elm => Some(false),
            _ => None,
        }
    }
}

impl fmt::Display for MethodId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MethodId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MethodId::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown method id {s:?}")))
    }
}

/// A method together with everything needed to train it.
#[derive(Clone, Debug, PartialEq)]
pub struct MethodSpec<T> {
    pub id: MethodId,
    pub network: NetworkConfig<T>,
    pub fista: FistaConfig<T>,
    pub combine: CombineRule,
    /// TedRVFL member count; defaults to the layer count.
    pub members: Option<usize>,
}

impl<T: Scalar> MethodSpec<T> {
    pub fn new(id: MethodId) -> Self {
        Self::with_network(id, NetworkConfig::default())
    }

    pub fn with_network(id: MethodId, network: NetworkConfig<T>) -> Self {
        Self {
            id,
            network,
            fista: FistaConfig::default(),
            combine: CombineRule::default(),
            members: None,
        }
    }

    /// The network config actually trained: method-imposed settings applied.
    pub fn effective_network(&self) -> NetworkConfig<T> {
        let mut cfg = self.network.clone();
        if self.id.is_shallow() {
            cfg.layers = 1;
            cfg.layer_lambdas = cfg.layer_lambdas.map(|mut l| {
                l.truncate(1);
                l
            });
        }
        if let Some(dl) = self.id.forced_direct_links() {
            cfg.direct_links = dl;
        }
        cfg
    }

    pub fn member_count(&self) -> usize {
        self.members.unwrap_or(self.effective_network().layers)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.network.seed = seed;
        self
    }
}

/// Any trained model.
#[derive(Clone, Debug, PartialEq)]
pub enum Model<T> {
    Shallow(ShallowModel<T>),
    Deep(DeepModel<T>),
    Ensemble(EnsembleDeepModel<T>),
    True(TrueEnsemble<T>),
}

impl<T: Scalar> Classifier<T> for Model<T> {
    fn predict(&self, x: &DenseMatrix<T>) -> Result<Prediction<T>> {
        match self {
            Model::Shallow(m) => m.predict(x),
            Model::Deep(m) => m.predict(x),
            Model::Ensemble(m) => m.predict(x),
            Model::True(m) => m.predict(x),
        }
    }

    fn class_count(&self) -> usize {
        match self {
            Model::Shallow(m) => m.class_count(),
            Model::Deep(m) => m.class_count(),
            Model::Ensemble(m) => m.class_count(),
            Model::True(m) => m.class_count(),
        }
    }
}

pub fn train<T: Scalar>(spec: &MethodSpec<T>, ds: &Dataset<T>) -> Result<Model<T>> {
    let cfg = spec.effective_network();
    if cfg.layer_lambdas.is_some() && spec.id.is_layer_ensemble() {
        cfg.validate()?;
        let model = match spec.id {
            MethodId::EdspRvfl => train_edsp_rvfl(ds, &cfg, &spec.fista)?,
            _ => train_edrvfl(ds, &cfg)?,
        };
        return Ok(Model::Ensemble(model.with_combine(spec.combine)));
    }
    single(train_path(spec, ds, &[cfg.lambda])?)
}

/// One model per λ; models in the same call share every random draw.
pub fn train_path<T: Scalar>(spec: &MethodSpec<T>, ds: &Dataset<T>, lambdas: &[T]) -> Result<Vec<Model<T>>> {
    let cfg = spec.effective_network();
    let models = match spec.id {
        MethodId::Elm => wrap(train_shallow_path(ds, &cfg, ShallowKind::Elm, lambdas)?, Model::Shallow),
        MethodId::Rvfl => wrap(train_shallow_path(ds, &cfg, ShallowKind::Rvfl, lambdas)?, Model::Shallow),
        MethodId::SpRvfl => wrap(train_sp_rvfl_path(ds, &cfg, &spec.fista, lambdas)?, Model::Shallow),
        MethodId::Drvfl | MethodId::DrvflNoDl => wrap(train_drvfl_path(ds, &cfg, lambdas)?, Model::Deep),
        MethodId::DspRvfl => wrap(train_dsp_rvfl_path(ds, &cfg, &spec.fista, lambdas)?, Model::Deep),
        MethodId::Edrvfl | MethodId::EdrvflNoDl => wrap(train_edrvfl_path(ds, &cfg, lambdas)?, |m| {
            Model::Ensemble(m.with_combine(spec.combine))
        }),
        MethodId::EdspRvfl => wrap(train_edsp_rvfl_path(ds, &cfg, &spec.fista, lambdas)?, |m| {
            Model::Ensemble(m.with_combine(spec.combine))
        }),
        MethodId::Tedrvfl => {
            let count = spec.member_count();
            if count == 0 {
                return Err(Error::InvalidConfig("true ensemble needs at least one member".into()));
            }
            let mut per_lambda: Vec<Vec<DeepModel<T>>> = lambdas.iter().map(|_| Vec::with_capacity(count)).collect();
            for i in 0..count {
                let member_cfg = NetworkConfig {
                    seed: cfg.seed.wrapping_add(i as u64),
                    ..cfg.clone()
                };
                for (slot, m) in per_lambda.iter_mut().zip(train_drvfl_path(ds, &member_cfg, lambdas)?) {
                    slot.push(m);
                }
            }
            per_lambda
                .into_iter()
                .map(|members| {
                    Model::True(TrueEnsemble {
                        members,
                        combine: CombineRule::ScoreAverage,
                    })
                })
                .collect()
        }
    };
    Ok(models)
}

fn wrap<M, T>(models: Vec<M>, f: impl Fn(M) -> Model<T>) -> Vec<Model<T>> {
    models.into_iter().map(f).collect()
}
