use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::{Error, Result};

/// Partition of training rows into the unlearn set and the remain set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSplit {
    /// Sorted row indices of the data to forget.
    pub unlearn_indices: Vec<usize>,
    /// Sorted row indices of the data to keep.
    pub remain_indices: Vec<usize>,
    pub unlearn_ratio: f64,
    pub seed: u64,
}

impl DatasetSplit {
    pub fn total(&self) -> usize {
        self.unlearn_indices.len() + self.remain_indices.len()
    }
}

/// Uniform sample of `round(ratio * n)` rows without replacement, not
/// stratified by class. Deterministic per seed.
pub fn split(n: usize, unlearn_ratio: f64, seed: u64) -> Result<DatasetSplit> {
    if !(unlearn_ratio > 0.0 && unlearn_ratio < 1.0) {
        return Err(Error::Domain(format!(
            "unlearn ratio must lie in (0, 1), got {unlearn_ratio}"
        )));
    }
    let m = (unlearn_ratio * n as f64).round() as usize;
    if m == 0 || m >= n {
        return Err(Error::Domain(format!(
            "ratio {unlearn_ratio} on {n} rows leaves an empty partition"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = vec![false; n];
    let mut unlearn_indices = index::sample(&mut rng, n, m).into_vec();
    unlearn_indices.sort_unstable();
    for &i in &unlearn_indices {
        chosen[i] = true;
    }
    let remain_indices = (0..n).filter(|&i| !chosen[i]).collect();
    Ok(DatasetSplit {
        unlearn_indices,
        remain_indices,
        unlearn_ratio,
        seed,
    })
}

/// The two materialized sides of a split.
#[derive(Debug, Clone)]
pub struct Partition {
    pub unlearn: Dataset,
    pub remain: Dataset,
}

impl Partition {
    pub fn new(ds: &Dataset, split: &DatasetSplit) -> Result<Self> {
        if split.total() != ds.len() {
            return Err(Error::Consistency(format!(
                "split covers {} rows, dataset has {}",
                split.total(),
                ds.len()
            )));
        }
        Ok(Self {
            unlearn: ds.subset(&split.unlearn_indices),
            remain: ds.subset(&split.remain_indices),
        })
    }
}
