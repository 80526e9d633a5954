//! Unlearning strategies: sensitivity scoring, parameter selection,
//! perturbation and JS-regularised fine-tuning, plus the EU-K, CF-K and
//! retrain baselines.

mod baseline;
mod config;
mod diagnostics;
mod finetune;
mod js;
mod outcome;
mod select;
mod sensitivity;

use std::time::Instant;

pub use baseline::run_baseline;
pub use config::{
    Guidance, Strategy, UnlearnConfig, BASELINE_LEARNING_RATE, DEFAULT_LAMBDA,
    DEFAULT_RANDOM_RATIO, DEFAULT_TOP_K, PERTURBATION_LEARNING_RATE,
};
pub use diagnostics::gradient_norm_gap;
pub use finetune::{unlearn_finetune, unlearn_finetune_guided};
pub use js::{js_divergence, mean_js};
pub use outcome::{strip_timing, EpochRecord, OutcomeRecord, UnlearnOutcome, TIMING_FIELDS};
pub use select::{
    perturb, ratio_count, select_mixed, select_random_k, select_top_k, PerturbationPlan, PlanKind,
    DEFAULT_EPSILON,
};
pub use sensitivity::{sensitivity, sensitivity_batch, SensitivityMap, SensitivityPolicy};

use crate::data::{Dataset, Partition};
use crate::nn::Network;
use crate::{Error, Result};

/// Builds the perturbation plan for a perturbation strategy. Sensitivity is
/// scored on samples from the full training set `full`.
pub fn plan_for(
    strategy: &Strategy,
    source: &Network,
    full: &Dataset,
    config: &UnlearnConfig,
) -> Result<PerturbationPlan> {
    let n = source.param_count();
    let scores = || {
        let (x, y) = sensitivity_batch(full, config.sensitivity_policy, config.seed);
        sensitivity(source, &x, &y, config.sensitivity_policy)
    };
    let plan = match *strategy {
        Strategy::TopK { k } => select_top_k(&scores()?, k)?,
        Strategy::RandomK { ratio } => select_random_k(n, ratio, config.seed)?,
        Strategy::Mixed { k, ratio } => select_mixed(&scores()?, k, ratio, config.seed)?,
        other => {
            return Err(Error::Domain(format!(
                "{} does not perturb parameters",
                other.label()
            )))
        }
    };
    Ok(plan.with_epsilon(config.epsilon))
}

/// Runs any strategy end to end. `guide` is the retrained model used when
/// `config.guidance` is [`Guidance::Retrained`].
pub fn run_strategy(
    strategy: Strategy,
    source: &Network,
    full: &Dataset,
    partition: &Partition,
    config: &UnlearnConfig,
    guide: Option<&Network>,
) -> Result<UnlearnOutcome> {
    if !strategy.is_perturbation() {
        return run_baseline(strategy, source, partition, config);
    }
    let t0 = Instant::now();
    let plan = plan_for(&strategy, source, full, config)?;
    let selection_time_s = t0.elapsed().as_secs_f64();
    let guide = match config.guidance {
        Guidance::Source => source,
        Guidance::Retrained => guide.ok_or_else(|| {
            Error::Config("retrained guidance requested but no retrained model supplied".into())
        })?,
    };
    let mut outcome = unlearn_finetune_guided(source, guide, partition, config, &plan, strategy)?;
    outcome.selection_time_s = selection_time_s;
    Ok(outcome)
}
