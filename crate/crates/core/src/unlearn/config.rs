use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::select::DEFAULT_EPSILON;
use super::sensitivity::SensitivityPolicy;
use crate::nn::OptimizerSpec;
use crate::{Error, Result};

/// Top-K count used when none is configured.
pub const DEFAULT_TOP_K: usize = 45;
/// Random-k ratio used when none is configured.
pub const DEFAULT_RANDOM_RATIO: f64 = 0.05;
pub const DEFAULT_LAMBDA: f64 = 0.1;
/// Learning rate for the EU-K and CF-K baselines.
pub const BASELINE_LEARNING_RATE: f64 = 1e-4;
/// Learning rate for fine-tuning the perturbed parameters.
pub const PERTURBATION_LEARNING_RATE: f64 = 1e-2;

/// An unlearning strategy and its own parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "kebab-case")]
pub enum Strategy {
    /// Perturb and fine-tune the `k` most sensitive scalars.
    TopK { k: usize },
    /// Perturb and fine-tune a random `ratio` of all scalars.
    RandomK { ratio: f64 },
    /// Random-k draw with `k` members replaced by the Top-K scalars.
    Mixed { k: usize, ratio: f64 },
    /// Reinitialise and train the last `layers` layers on the remain set.
    EuK { layers: usize },
    /// Fine-tune the last `layers` layers on the remain set.
    CfK { layers: usize },
    /// Train a fresh network on the remain set.
    Retrain,
}

impl Strategy {
    pub fn label(&self) -> &'static str {
        match self {
            Strategy::TopK { .. } => "top-k",
            Strategy::RandomK { .. } => "random-k",
            Strategy::Mixed { .. } => "mixed",
            Strategy::EuK { .. } => "eu-k",
            Strategy::CfK { .. } => "cf-k",
            Strategy::Retrain => "retrain",
        }
    }

    /// Label with parameters, usable in file names.
    pub fn tag(&self) -> String {
        match *self {
            Strategy::TopK { k } => format!("top-k{k}"),
            Strategy::RandomK { ratio } => format!("random-k{ratio}"),
            Strategy::Mixed { k, ratio } => format!("mixed{k}-{ratio}"),
            Strategy::EuK { layers } => format!("eu-{layers}"),
            Strategy::CfK { layers } => format!("cf-{layers}"),
            Strategy::Retrain => "retrain".into(),
        }
    }

    /// The K or k parameter as reported in outcome JSON.
    pub fn k_or_ratio(&self) -> Value {
        match *self {
            Strategy::TopK { k } => json!(k),
            Strategy::RandomK { ratio } => json!(ratio),
            Strategy::Mixed { k, ratio } => json!([k, ratio]),
            Strategy::EuK { layers } | Strategy::CfK { layers } => json!(layers),
            Strategy::Retrain => Value::Null,
        }
    }

    /// Inverse of [`Strategy::label`] plus [`Strategy::k_or_ratio`].
    pub fn from_parts(label: &str, param: &Value) -> Result<Self> {
        let bad = || Error::Format(format!("bad parameter {param} for strategy {label:?}"));
        let uint = |v: &Value| v.as_u64().map(|k| k as usize).ok_or_else(bad);
        let float = |v: &Value| v.as_f64().ok_or_else(bad);
        Ok(match label {
            "top-k" => Strategy::TopK { k: uint(param)? },
            "random-k" => Strategy::RandomK { ratio: float(param)? },
            "mixed" => match param.as_array().map(Vec::as_slice) {
                Some([k, r]) => Strategy::Mixed {
                    k: uint(k)?,
                    ratio: float(r)?,
                },
                _ => return Err(bad()),
            },
            "eu-k" => Strategy::EuK { layers: uint(param)? },
            "cf-k" => Strategy::CfK { layers: uint(param)? },
            "retrain" => Strategy::Retrain,
            _ => return Err(Error::Format(format!("unknown strategy {label:?}"))),
        })
    }

    pub fn is_perturbation(&self) -> bool {
        matches!(
            self,
            Strategy::TopK { .. } | Strategy::RandomK { .. } | Strategy::Mixed { .. }
        )
    }

    /// Accepts `top-k`, `random-k`, `mixed`, `eu-k`, `cf-k`, `retrain`,
    /// optionally followed by `:PARAM` (e.g. `top-k:45`, `random-k:0.05`,
    /// `mixed:45:0.05`, `eu-k:2`).
    pub fn parse(s: &str) -> Result<Self> {
        let mut parts = s.split(':');
        let name = parts.next().unwrap_or_default();
        let args: Vec<&str> = parts.collect();
        let bad = |what: &str| Error::Config(format!("bad {what} in strategy {s:?}"));
        let uint = |i: usize, default: usize| -> Result<usize> {
            args.get(i).map_or(Ok(default), |a| a.parse().map_err(|_| bad("integer")))
        };
        let float = |i: usize, default: f64| -> Result<f64> {
            args.get(i).map_or(Ok(default), |a| a.parse().map_err(|_| bad("ratio")))
        };
        let strategy = match name {
            "top-k" => Strategy::TopK { k: uint(0, DEFAULT_TOP_K)? },
            "random-k" => Strategy::RandomK { ratio: float(0, DEFAULT_RANDOM_RATIO)? },
            "mixed" => Strategy::Mixed {
                k: uint(0, DEFAULT_TOP_K)?,
                ratio: float(1, DEFAULT_RANDOM_RATIO)?,
            },
            "eu-k" => Strategy::EuK { layers: uint(0, 1)? },
            "cf-k" => Strategy::CfK { layers: uint(0, 1)? },
            "retrain" => Strategy::Retrain,
            _ => return Err(Error::Config(format!("unknown strategy {name:?}"))),
        };
        Ok(strategy)
    }
}

/// Which model's output distribution the JS term pulls toward.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Guidance {
    /// The source model stands in for a retrained one.
    #[default]
    Source,
    /// A retrained model supplied by the caller.
    Retrained,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UnlearnConfig {
    /// Weight of the JS term against the cross-entropy term.
    pub lambda: f64,
    /// Multiplicative perturbation applied to selected parameters.
    pub epsilon: f64,
    pub max_epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerSpec,
    /// Epochs without enough accuracy gain before stopping.
    pub patience: usize,
    /// Smallest remain-set accuracy gain (as a fraction) that counts.
    pub min_acc_delta: f64,
    pub guidance: Guidance,
    pub sensitivity_policy: SensitivityPolicy,
    pub seed: u64,
}

impl Default for UnlearnConfig {
    fn default() -> Self {
        Self {
            lambda: DEFAULT_LAMBDA,
            epsilon: DEFAULT_EPSILON,
            max_epochs: 100,
            batch_size: 64,
            optimizer: OptimizerSpec::adam(1e-3),
            patience: 5,
            min_acc_delta: 0.001,
            guidance: Guidance::Source,
            sensitivity_policy: SensitivityPolicy::SingleSample,
            seed: 0,
        }
    }
}

impl UnlearnConfig {
    /// Default settings adjusted for a strategy: the layer baselines train
    /// with a learning rate of 1e-4, the perturbation strategies with 1e-2
    /// (only a handful of scalars move, so they need larger steps).
    pub fn for_strategy(strategy: &Strategy) -> Self {
        let mut c = Self::default();
        match strategy {
            Strategy::EuK { .. } | Strategy::CfK { .. } => {
                c.optimizer = OptimizerSpec::adam(BASELINE_LEARNING_RATE)
            }
            s if s.is_perturbation() => {
                c.optimizer = OptimizerSpec::adam(PERTURBATION_LEARNING_RATE)
            }
            _ => {}
        }
        c
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!("lambda must be >= 0, got {}", self.lambda)));
        }
        if !self.epsilon.is_finite() {
            return Err(Error::Config("epsilon must be finite".into()));
        }
        if self.patience == 0 {
            return Err(Error::Config("patience must be >= 1".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.min_acc_delta.is_nan() || self.min_acc_delta < 0.0 {
            return Err(Error::Config("min_acc_delta must be >= 0".into()));
        }
        self.optimizer.validate()
    }
}
