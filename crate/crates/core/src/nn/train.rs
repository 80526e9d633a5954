//! Plain mini-batch training used to produce source models.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::network::{argmax, check_labels, cross_entropy_head, softmax_rows, GradientSource, Network};
use super::optim::{OptimizerSpec, OptimizerState};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: OptimizerSpec,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 40,
            batch_size: 64,
            optimizer: OptimizerSpec::adam(1e-3),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub loss: f64,
    pub accuracy: f64,
}

/// Trains every parameter of `net` for a fixed number of epochs. Batches
/// are drawn from a shuffle seeded by `config.seed`.
pub fn fit(
    net: &mut Network,
    x: &Matrix,
    labels: &[usize],
    config: &TrainConfig,
) -> Result<Vec<EpochStats>> {
    if config.batch_size == 0 {
        return Err(Error::Config("batch_size must be positive".into()));
    }
    config.optimizer.validate()?;
    check_labels(labels, x.rows(), net.class_count())?;
    let n = x.rows();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut opt = OptimizerState::new(config.optimizer, net.param_count());
    let mut order: Vec<usize> = (0..n).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for chunk in order.chunks(config.batch_size) {
            let xb = x.select_rows(chunk);
            let yb: Vec<usize> = chunk.iter().map(|&i| labels[i]).collect();
            let trace = net.forward_trace(&xb)?;
            let probs = softmax_rows(trace.output());
            correct += (0..probs.rows())
                .filter(|&b| argmax(probs.row(b)) == yb[b])
                .count();
            let (loss, d) = cross_entropy_head(&probs, &yb)?;
            if !loss.is_finite() {
                return Err(Error::Numeric(format!("non-finite loss in epoch {epoch}")));
            }
            loss_sum += loss * chunk.len() as f64;
            let mut grads = super::network::GradientRecord::zeros(
                net.param_count(),
                GradientSource::BatchMean,
            );
            net.backprop(&xb, &trace, d, None, &mut grads.grads, false)?;
            opt.step(net.params_mut(), &grads)?;
        }
        history.push(EpochStats {
            loss: loss_sum / n as f64,
            accuracy: correct as f64 / n as f64,
        });
    }
    Ok(history)
}
