use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{generate_blobs, load_idx, BlobSpec, Dataset};
use crate::degree::DegreeConfig;
use crate::nn::train::TrainConfig;
use crate::nn::{NetworkShape, OptimizerSpec};
use crate::unlearn::{Guidance, SensitivityPolicy, Strategy, UnlearnConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DatasetSpec {
    Blobs(BlobSpec),
    Idx {
        images: PathBuf,
        labels: PathBuf,
        /// Keep only the first `limit` samples.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        limit: Option<usize>,
    },
}

impl DatasetSpec {
    /// Blob fixture used by the default experiment: 10 classes of 500
    /// points in 32 dimensions.
    pub fn fixture() -> Self {
        DatasetSpec::Blobs(BlobSpec {
            class_count: 10,
            per_class: 500,
            dims: 32,
            spread: 1.2,
            seed: 2024,
        })
    }

    pub fn load(&self) -> Result<Dataset> {
        match self {
            DatasetSpec::Blobs(spec) => generate_blobs(spec),
            DatasetSpec::Idx {
                images,
                labels,
                limit,
            } => {
                let ds = load_idx(images, labels)?;
                Ok(match limit {
                    Some(n) => ds.truncate(*n),
                    None => ds,
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    /// Widths of the ReLU hidden layers.
    pub hidden: Vec<usize>,
}

impl ModelSpec {
    pub fn shape(&self, input_dim: usize, classes: usize) -> NetworkShape {
        NetworkShape::classifier(input_dim, &self.hidden, classes)
    }
}

/// Fields that override the per-strategy unlearning defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UnlearnOverrides {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_epochs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<OptimizerSpec>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub patience: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_acc_delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub guidance: Option<Guidance>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sensitivity_policy: Option<SensitivityPolicy>,
}

impl UnlearnOverrides {
    /// Fields set here, falling back to `other`.
    pub fn or(&self, other: &Self) -> Self {
        Self {
            lambda: self.lambda.or(other.lambda),
            epsilon: self.epsilon.or(other.epsilon),
            max_epochs: self.max_epochs.or(other.max_epochs),
            batch_size: self.batch_size.or(other.batch_size),
            optimizer: self.optimizer.or(other.optimizer),
            patience: self.patience.or(other.patience),
            min_acc_delta: self.min_acc_delta.or(other.min_acc_delta),
            guidance: self.guidance.or(other.guidance),
            sensitivity_policy: self.sensitivity_policy.or(other.sensitivity_policy),
        }
    }

    /// Strategy defaults with these overrides applied, seeded with `seed`.
    pub fn resolve(&self, strategy: &Strategy, seed: u64) -> UnlearnConfig {
        let mut c = UnlearnConfig::for_strategy(strategy);
        macro_rules! set {
            ($($f:ident),*) => {$( if let Some(v) = self.$f { c.$f = v; } )*};
        }
        set!(
            lambda,
            epsilon,
            max_epochs,
            batch_size,
            optimizer,
            patience,
            min_acc_delta,
            guidance,
            sensitivity_policy
        );
        c.seed = seed;
        c
    }
}

/// One experiment: every strategy on every (ratio, seed) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub model: ModelSpec,
    /// Source-model training; its seed is replaced by each cell's seed.
    pub training: TrainConfig,
    pub ratios: Vec<f64>,
    pub strategies: Vec<Strategy>,
    pub seeds: Vec<u64>,
    /// Applied to every strategy.
    pub unlearn: UnlearnOverrides,
    /// Applied per strategy on top of `unlearn`, keyed by strategy label.
    pub overrides: std::collections::BTreeMap<String, UnlearnOverrides>,
    pub evaluate_degree: bool,
    pub degree: DegreeConfig,
    pub out_dir: PathBuf,
    /// Strategy runs executed concurrently within a cell.
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dataset: DatasetSpec::fixture(),
            model: ModelSpec {
                hidden: vec![64, 32],
            },
            training: TrainConfig {
                epochs: 30,
                ..TrainConfig::default()
            },
            ratios: vec![0.05, 0.10, 0.15, 0.20],
            strategies: vec![
                Strategy::Retrain,
                Strategy::TopK { k: 45 },
                Strategy::RandomK { ratio: 0.05 },
                Strategy::EuK { layers: 1 },
                Strategy::EuK { layers: 2 },
                Strategy::CfK { layers: 1 },
                Strategy::CfK { layers: 2 },
            ],
            seeds: vec![0, 1, 2, 3, 4],
            unlearn: UnlearnOverrides::default(),
            overrides: Default::default(),
            evaluate_degree: true,
            degree: DegreeConfig::default(),
            out_dir: PathBuf::from("runs/fixture"),
            jobs: 1,
        }
    }
}

/// Semantic content of a config: everything except where outputs go and
/// how many threads run them.
#[derive(Serialize)]
struct HashedFields<'a> {
    dataset: &'a DatasetSpec,
    model: &'a ModelSpec,
    training: &'a TrainConfig,
    ratios: &'a [f64],
    strategies: &'a [Strategy],
    seeds: &'a [u64],
    unlearn: &'a UnlearnOverrides,
    overrides: &'a std::collections::BTreeMap<String, UnlearnOverrides>,
    evaluate_degree: bool,
    degree: &'a DegreeConfig,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty() || self.ratios.is_empty() || self.seeds.is_empty() {
            return Err(Error::Config(
                "need at least one strategy, one ratio and one seed".into(),
            ));
        }
        for (i, s) in self.strategies.iter().enumerate() {
            if self.strategies[..i].contains(s) {
                return Err(Error::Config(format!("strategy {} listed twice", s.tag())));
            }
        }
        if let Some(r) = self.ratios.iter().find(|r| !(**r > 0.0 && **r < 1.0)) {
            return Err(Error::Config(format!("ratio {r} outside (0, 1)")));
        }
        if self.model.hidden.contains(&0) {
            return Err(Error::Config("hidden layer widths must be positive".into()));
        }
        if self.jobs == 0 {
            return Err(Error::Config("jobs must be >= 1".into()));
        }
        if self.training.batch_size == 0 {
            return Err(Error::Config("training batch_size must be >= 1".into()));
        }
        self.training.optimizer.validate()?;
        let has_retrain = self.strategies.contains(&Strategy::Retrain);
        for s in &self.strategies {
            let c = self.unlearn_config(s, 0);
            c.validate()?;
            if s.is_perturbation() && c.guidance == Guidance::Retrained && !has_retrain {
                return Err(Error::Config(format!(
                    "{} uses retrained guidance but no retrain strategy is configured",
                    s.tag()
                )));
            }
        }
        if let Some(k) = self
            .overrides
            .keys()
            .find(|k| !self.strategies.iter().any(|s| s.label() == k.as_str()))
        {
            return Err(Error::Config(format!("override for unconfigured strategy {k:?}")));
        }
        if self.evaluate_degree {
            self.degree.validate()?;
        }
        Ok(())
    }

    /// Resolved unlearning settings for `strategy` in a cell seeded `seed`.
    pub fn unlearn_config(&self, strategy: &Strategy, seed: u64) -> UnlearnConfig {
        match self.overrides.get(strategy.label()) {
            Some(o) => o.or(&self.unlearn).resolve(strategy, seed),
            None => self.unlearn.resolve(strategy, seed),
        }
    }

    /// SHA-256 over the semantic fields, hex encoded.
    pub fn hash(&self) -> String {
        let fields = HashedFields {
            dataset: &self.dataset,
            model: &self.model,
            training: &self.training,
            ratios: &self.ratios,
            strategies: &self.strategies,
            seeds: &self.seeds,
            unlearn: &self.unlearn,
            overrides: &self.overrides,
            evaluate_degree: self.evaluate_degree,
            degree: &self.degree,
        };
        let bytes = serde_json::to_vec(&fields).expect("config fields serialise");
        hex::encode(Sha256::digest(&bytes))
    }
}
