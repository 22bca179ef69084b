//! Experiment configuration as read from JSON.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tpp_core::models::{HawkesModel, SinePoisson};
use tpp_core::objectives::CompensatorRule;
use tpp_core::simulate::SimConfig;
use tpp_core::{Error, IntensityModel, OptimConfig, ParamVector, Result, ScoreKind, WeightFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelName {
    SinePoisson,
    ExpHawkes,
    GaussHawkes,
    HalfSinHawkes,
}

impl ModelName {
    pub fn parse(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Config(format!("unknown model {s:?}")))
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ModelName::SinePoisson => "sine_poisson",
            ModelName::ExpHawkes => "exp_hawkes",
            ModelName::GaussHawkes => "gauss_hawkes",
            ModelName::HalfSinHawkes => "half_sin_hawkes",
        }
    }

    /// Score used where an estimator is not tied to one: the joint score of
    /// a Poisson process, the conditional score of a Hawkes process.
    pub fn native_score(self) -> ScoreKind {
        match self {
            ModelName::SinePoisson => ScoreKind::Joint,
            _ => ScoreKind::Conditional,
        }
    }
}

fn one() -> usize {
    1
}

/// Model family, dimension and named parameter values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub model: ModelName,
    #[serde(rename = "K", default = "one")]
    pub num_types: usize,
    /// Decay rate of the exponential kernel, held fixed unless
    /// `estimate_beta` is set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub estimate_beta: bool,
    /// Gauss–Legendre nodes of the sine-Poisson compensator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quadrature_nodes: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truth: Option<BTreeMap<String, f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<BTreeMap<String, f64>>,
}

pub const DEFAULT_BETA: f64 = 5.0;

impl ModelConfig {
    pub fn new(model: ModelName, num_types: usize) -> Self {
        Self {
            model,
            num_types,
            beta: None,
            estimate_beta: false,
            quadrature_nodes: None,
            truth: None,
            init: None,
        }
    }

    pub fn build(&self) -> Result<Box<dyn IntensityModel>> {
        if self.num_types == 0 {
            return Err(Error::Config("K must be at least 1".into()));
        }
        Ok(match self.model {
            ModelName::SinePoisson => {
                if self.num_types != 1 {
                    return Err(Error::Config("sine_poisson has a single type".into()));
                }
                Box::new(SinePoisson::new(self.quadrature_nodes.unwrap_or(100)))
            }
            ModelName::ExpHawkes if self.estimate_beta => Box::new(HawkesModel::exponential_free_beta(self.num_types)),
            ModelName::ExpHawkes => {
                let beta = self.beta.unwrap_or(DEFAULT_BETA);
                if !(beta > 0.0) {
                    return Err(Error::Config(format!("beta must be positive, got {beta}")));
                }
                Box::new(HawkesModel::exponential(self.num_types, beta))
            }
            ModelName::GaussHawkes => Box::new(HawkesModel::gaussian(self.num_types)),
            ModelName::HalfSinHawkes => Box::new(HawkesModel::half_sin(self.num_types)),
        })
    }

    /// Ground truth; every parameter must be named.
    pub fn truth_params(&self, model: &dyn IntensityModel) -> Result<ParamVector> {
        let map = self
            .truth
            .as_ref()
            .ok_or_else(|| Error::Config("the configuration has no ground truth".into()))?;
        ParamVector::from_map(model.param_specs(), map, None)
    }

    /// Initial values; unnamed parameters take the model default.
    pub fn init_params(&self, model: &dyn IntensityModel) -> Result<ParamVector> {
        let default = model.default_init();
        match &self.init {
            Some(map) => ParamVector::from_map(model.param_specs(), map, Some(&default)),
            None => Ok(default),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveName {
    Mle,
    Sm,
    Asm,
    Wsm,
    Awsm,
    Dsm,
    Combined,
    Ce,
}

impl ObjectiveName {
    pub fn as_str(self) -> &'static str {
        match self {
            ObjectiveName::Mle => "mle",
            ObjectiveName::Sm => "sm",
            ObjectiveName::Asm => "asm",
            ObjectiveName::Wsm => "wsm",
            ObjectiveName::Awsm => "awsm",
            ObjectiveName::Dsm => "dsm",
            ObjectiveName::Combined => "combined",
            ObjectiveName::Ce => "ce",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureLayout {
    Global,
    PerSegment,
    Exact,
}

fn default_alpha() -> f64 {
    20.0
}
fn default_dsm_sigma() -> f64 {
    0.01
}
fn default_dsm_samples() -> usize {
    1
}
fn default_mle_nodes() -> usize {
    100
}
fn default_layout() -> QuadratureLayout {
    QuadratureLayout::Global
}

/// Objective selection and hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveConfig {
    pub name: ObjectiveName,
    /// Weight of the event-type cross-entropy on marked data.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_dsm_sigma")]
    pub dsm_sigma: f64,
    #[serde(rename = "dsm_L", default = "default_dsm_samples")]
    pub dsm_samples: usize,
    #[serde(default = "default_mle_nodes")]
    pub mle_nodes: usize,
    #[serde(default = "default_layout")]
    pub mle_layout: QuadratureLayout,
}

impl ObjectiveConfig {
    pub fn named(name: ObjectiveName) -> Self {
        Self {
            name,
            alpha: default_alpha(),
            dsm_sigma: default_dsm_sigma(),
            dsm_samples: default_dsm_samples(),
            mle_nodes: default_mle_nodes(),
            mle_layout: default_layout(),
        }
    }

    pub fn compensator_rule(&self) -> CompensatorRule {
        match self.mle_layout {
            QuadratureLayout::Global => CompensatorRule::Global { nodes: self.mle_nodes },
            QuadratureLayout::PerSegment => CompensatorRule::PerSegment { nodes: self.mle_nodes },
            QuadratureLayout::Exact => CompensatorRule::Exact,
        }
    }
}

impl Default for ObjectiveConfig {
    fn default() -> Self {
        Self::named(ObjectiveName::Awsm)
    }
}

fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2]
}

/// A full experiment: model, data, estimator choices and optimizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub model: ModelConfig,
    /// Inline simulation settings; `seed` is overridden per repetition.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimConfig>,
    /// A JSONL file or directory used instead of simulation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub data: Option<PathBuf>,
    #[serde(default = "WeightFunction::tent")]
    pub weight: WeightFunction,
    #[serde(default)]
    pub objective: ObjectiveConfig,
    /// Estimators compared by table runs.
    #[serde(default)]
    pub estimators: Vec<ObjectiveName>,
    #[serde(default)]
    pub optim: OptimConfig,
    /// Data seeds, one repetition each.
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is needed".into()));
        }
        self.optim.validate()?;
        let model = self.model.build()?;
        if self.model.truth.is_some() {
            self.model.truth_params(model.as_ref())?;
        }
        self.model.init_params(model.as_ref())?;
        Ok(())
    }

    /// Simulation settings for repetition seed `seed`.
    pub fn sim_for_seed(&self, seed: u64) -> Result<SimConfig> {
        let mut sim = self
            .simulate
            .ok_or_else(|| Error::Config("the configuration has no simulate section".into()))?;
        sim.seed = seed;
        Ok(sim)
    }

    /// Canonical JSON used for hashing and manifests.
    pub fn canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("configuration serializes");
        serde_json::to_string(&value).expect("value serializes")
    }

    /// Built-in parameter-recovery setting for `model`.
    pub fn table1_preset(model: ModelName) -> Result<Self> {
        let (model_cfg, t_end, weight, estimators) = match model {
            ModelName::SinePoisson => {
                let mut m = ModelConfig::new(model, 1);
                m.truth = Some(map(&[("theta", 2.0)]));
                (
                    m,
                    2.0,
                    WeightFunction::new(tpp_core::WeightKind::ProductH1),
                    vec![ObjectiveName::Mle, ObjectiveName::Sm, ObjectiveName::Wsm],
                )
            }
            ModelName::ExpHawkes | ModelName::GaussHawkes => {
                let mut m = ModelConfig::new(model, 2);
                let mut truth = vec![
                    ("mu_1", 1.0),
                    ("mu_2", 1.0),
                    ("alpha_1_1", 1.6),
                    ("alpha_1_2", 0.2),
                    ("alpha_2_1", 1.0),
                    ("alpha_2_2", 1.0),
                ];
                if model == ModelName::ExpHawkes {
                    m.beta = Some(DEFAULT_BETA);
                } else {
                    truth.push(("sigma", 1.0));
                }
                m.truth = Some(map(&truth));
                (
                    m,
                    10.0,
                    WeightFunction::tent(),
                    vec![ObjectiveName::Mle, ObjectiveName::Asm, ObjectiveName::Awsm],
                )
            }
            ModelName::HalfSinHawkes => {
                return Err(Error::Config("half_sin_hawkes has no built-in table setting".into()));
            }
        };
        let cfg = Self {
            model: model_cfg,
            simulate: Some(SimConfig::new(t_end, 1000, 0)),
            data: None,
            weight,
            objective: ObjectiveConfig::default(),
            estimators,
            optim: OptimConfig::default(),
            seeds: default_seeds(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

pub(crate) fn map(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}
