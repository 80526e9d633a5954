use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::config::Strategy;
use crate::nn::Network;
use crate::Result;

/// Per-epoch training record. Accuracies are running values over the
/// epoch's batches, measured before each update.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Mean cross-entropy over the remain set.
    pub ce: f64,
    /// Mean JS divergence over the unlearn set, unweighted. Absent for
    /// strategies trained on pure cross-entropy.
    pub js: Option<f64>,
    pub acc_re: f64,
    pub acc_ul: Option<f64>,
}

/// Result of one strategy run.
#[derive(Debug, Clone)]
pub struct UnlearnOutcome {
    pub strategy: Strategy,
    pub model: Network,
    /// Seconds from the start of perturbation (or reinitialisation) until
    /// training stopped.
    pub wall_time_s: f64,
    /// Seconds spent scoring and selecting parameters, before perturbation.
    pub selection_time_s: f64,
    pub epochs_run: usize,
    pub loss_trace: Vec<EpochRecord>,
    pub perturbed_count: usize,
    pub epsilon: Option<f64>,
    pub lambda: Option<f64>,
    /// Accuracy of the final model over the full unlearn set.
    pub acc_ul: f64,
    /// Accuracy of the final model over the full remain set.
    pub acc_re: f64,
}

/// JSON form of an [`UnlearnOutcome`] (the model is stored separately).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeRecord {
    pub strategy: String,
    #[serde(rename = "K_or_k")]
    pub k_or_k: Value,
    pub epsilon: Option<f64>,
    pub lambda: Option<f64>,
    pub epochs_run: usize,
    pub wall_time_s: f64,
    pub perturbed_count: usize,
    pub loss_trace: Vec<EpochRecord>,
    pub acc_ul: f64,
    pub acc_re: f64,
    pub selection_time_s: f64,
}

/// Fields holding wall-clock measurements; excluded from determinism checks.
pub const TIMING_FIELDS: &[&str] = &["wall_time_s", "selection_time_s"];

impl UnlearnOutcome {
    pub fn record(&self) -> OutcomeRecord {
        OutcomeRecord {
            strategy: self.strategy.label().to_owned(),
            k_or_k: self.strategy.k_or_ratio(),
            epsilon: self.epsilon,
            lambda: self.lambda,
            epochs_run: self.epochs_run,
            wall_time_s: self.wall_time_s,
            perturbed_count: self.perturbed_count,
            loss_trace: self.loss_trace.clone(),
            acc_ul: self.acc_ul,
            acc_re: self.acc_re,
            selection_time_s: self.selection_time_s,
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(&self.record())
    }

    /// Rebuilds an outcome from its JSON record and the saved model.
    pub fn from_record(record: OutcomeRecord, model: Network) -> Result<Self> {
        Ok(Self {
            strategy: Strategy::from_parts(&record.strategy, &record.k_or_k)?,
            model,
            wall_time_s: record.wall_time_s,
            selection_time_s: record.selection_time_s,
            epochs_run: record.epochs_run,
            loss_trace: record.loss_trace,
            perturbed_count: record.perturbed_count,
            epsilon: record.epsilon,
            lambda: record.lambda,
            acc_ul: record.acc_ul,
            acc_re: record.acc_re,
        })
    }

    /// Mean wall time per training epoch.
    pub fn epoch_time_s(&self) -> f64 {
        self.wall_time_s / self.epochs_run.max(1) as f64
    }
}

/// Drops the timing fields from an outcome JSON document.
pub fn strip_timing(mut doc: Value) -> Value {
    if let Some(obj) = doc.as_object_mut() {
        for f in TIMING_FIELDS {
            obj.remove(*f);
        }
    }
    doc
}
