use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::nn::{Matrix, Network};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SensitivityPolicy {
    /// Gradient of one sample.
    #[default]
    SingleSample,
    /// Gradient averaged over a batch, then made absolute.
    BatchMean,
}

/// Per-scalar sensitivity: absolute cross-entropy gradient, aligned with
/// the flat parameter store.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityMap {
    pub scores: Vec<f64>,
    pub policy: SensitivityPolicy,
}

pub fn sensitivity(
    net: &Network,
    x: &Matrix,
    labels: &[usize],
    policy: SensitivityPolicy,
) -> Result<SensitivityMap> {
    if policy == SensitivityPolicy::SingleSample && x.rows() != 1 {
        return Err(Error::Shape(format!(
            "single-sample sensitivity needs exactly one row, got {}",
            x.rows()
        )));
    }
    let g = net.backward(x, labels, None)?;
    Ok(SensitivityMap {
        scores: g.grads.iter().map(|v| v.abs()).collect(),
        policy,
    })
}

/// Samples used for scoring: the first row of a seeded shuffle of `ds`
/// for the single-sample policy, every row for batch-mean.
pub fn sensitivity_batch(
    ds: &Dataset,
    policy: SensitivityPolicy,
    seed: u64,
) -> (Matrix, Vec<usize>) {
    match policy {
        SensitivityPolicy::SingleSample => {
            let mut order: Vec<usize> = (0..ds.len()).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let pick = &order[..1.min(order.len())];
            (ds.features().select_rows(pick), pick.iter().map(|&i| ds.labels()[i]).collect())
        }
        SensitivityPolicy::BatchMean => (ds.features().clone(), ds.labels().to_vec()),
    }
}
