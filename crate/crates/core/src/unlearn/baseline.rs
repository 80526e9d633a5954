use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{Strategy, UnlearnConfig};
use super::finetune::train_until_converged;
use super::outcome::UnlearnOutcome;
use crate::data::Partition;
use crate::metrics::accuracy;
use crate::nn::{Network, ParamMask};
use crate::{Error, Result};

/// Stream offset separating reinitialisation draws from shuffling draws.
const REINIT_STREAM: u64 = 0x5eed_0001;

/// Runs one of the EU-K, CF-K or retrain baselines on the remain set with
/// plain cross-entropy and the same stopping rule as the perturbation
/// strategies.
pub fn run_baseline(
    strategy: Strategy,
    source: &Network,
    partition: &Partition,
    config: &UnlearnConfig,
) -> Result<UnlearnOutcome> {
    config.validate()?;
    let depth = source.shape().depth();
    let start = Instant::now();
    let (mut model, mask) = match strategy {
        Strategy::EuK { layers } | Strategy::CfK { layers } => {
            if layers == 0 || layers > depth {
                return Err(Error::Domain(format!(
                    "layer count {layers} must lie in [1, {depth}]"
                )));
            }
            let mut model = source.clone();
            let first = depth - layers;
            if matches!(strategy, Strategy::EuK { .. }) {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ REINIT_STREAM);
                for layer in first..depth {
                    model.reinit_layer(layer, &mut rng);
                }
            }
            let mask = ParamMask::trailing_layers(model.params().layout(), first);
            (model, Some(mask))
        }
        Strategy::Retrain => (
            Network::init_random(source.shape().clone(), config.seed ^ REINIT_STREAM)?,
            None,
        ),
        other => {
            return Err(Error::Domain(format!(
                "{} is not a baseline strategy",
                other.label()
            )))
        }
    };
    let result = train_until_converged(&mut model, &partition.remain, None, mask.as_ref(), config)?;
    let wall_time_s = start.elapsed().as_secs_f64();
    Ok(UnlearnOutcome {
        strategy,
        acc_ul: accuracy(&model, &partition.unlearn)?,
        acc_re: accuracy(&model, &partition.remain)?,
        perturbed_count: mask.as_ref().map_or(model.param_count(), ParamMask::count),
        model,
        wall_time_s,
        selection_time_s: 0.0,
        epochs_run: result.trace.len(),
        loss_trace: result.trace,
        epsilon: None,
        lambda: None,
    })
}
