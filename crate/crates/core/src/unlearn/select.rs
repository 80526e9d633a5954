use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sensitivity::SensitivityMap;
use crate::nn::ParameterStore;
use crate::{Error, Result};

pub const DEFAULT_EPSILON: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlanKind {
    TopK,
    RandomK,
    Mixed,
}

/// Which scalar parameters get perturbed, and by how much.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerturbationPlan {
    /// Sorted, distinct flat indices.
    pub selected: Vec<usize>,
    pub epsilon: f64,
    pub kind: PlanKind,
}

impl PerturbationPlan {
    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }
}

/// Number of parameters a ratio selects: `round(ratio · n)`.
pub fn ratio_count(n: usize, ratio: f64) -> usize {
    (ratio * n as f64).round() as usize
}

/// Indices of the `k` largest scores, larger first, ties to lower index.
fn ranked_top(scores: &[f64], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    order.truncate(k);
    order
}

pub fn select_top_k(sens: &SensitivityMap, k: usize) -> Result<PerturbationPlan> {
    let n = sens.scores.len();
    if k == 0 || k > n {
        return Err(Error::Domain(format!("K must lie in [1, {n}], got {k}")));
    }
    let mut selected = ranked_top(&sens.scores, k);
    selected.sort_unstable();
    Ok(PerturbationPlan {
        selected,
        epsilon: DEFAULT_EPSILON,
        kind: PlanKind::TopK,
    })
}

/// Seeded random permutation prefix of length `m`, in draw order.
fn random_draw(n: usize, m: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    index::sample(&mut rng, n, m).into_vec()
}

fn check_ratio(n: usize, ratio: f64) -> Result<usize> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Domain(format!("ratio k must lie in (0, 1), got {ratio}")));
    }
    let m = ratio_count(n, ratio);
    if m == 0 {
        return Err(Error::Domain(format!(
            "ratio {ratio} of {n} parameters selects nothing"
        )));
    }
    Ok(m)
}

/// Uniform sample of `round(ratio · n)` distinct indices.
pub fn select_random_k(n: usize, ratio: f64, seed: u64) -> Result<PerturbationPlan> {
    let m = check_ratio(n, ratio)?;
    let mut selected = random_draw(n, m, seed);
    selected.sort_unstable();
    Ok(PerturbationPlan {
        selected,
        epsilon: DEFAULT_EPSILON,
        kind: PlanKind::RandomK,
    })
}

/// Random-k draw of `round(ratio · n)` indices in which `k` members are
/// replaced by the Top-K indices. Random members already in the Top-K set
/// are dropped first, then the latest draws, so the total stays
/// `round(ratio · n)`.
pub fn select_mixed(
    sens: &SensitivityMap,
    k: usize,
    ratio: f64,
    seed: u64,
) -> Result<PerturbationPlan> {
    let n = sens.scores.len();
    let m = check_ratio(n, ratio)?;
    if k > m {
        return Err(Error::Domain(format!(
            "K = {k} exceeds the {m} parameters selected by ratio {ratio}"
        )));
    }
    let top = ranked_top(&sens.scores, k);
    let mut in_top = vec![false; n];
    for &i in &top {
        in_top[i] = true;
    }
    let mut selected: Vec<usize> = random_draw(n, m, seed)
        .into_iter()
        .filter(|&i| !in_top[i])
        .take(m - k)
        .collect();
    selected.extend(top);
    selected.sort_unstable();
    Ok(PerturbationPlan {
        selected,
        epsilon: DEFAULT_EPSILON,
        kind: PlanKind::Mixed,
    })
}

/// Scales each selected parameter by `1 + ε`; every other entry is copied
/// unchanged.
pub fn perturb(params: &ParameterStore, plan: &PerturbationPlan) -> Result<ParameterStore> {
    let mut out = params.clone();
    let values = out.values_mut();
    for &i in &plan.selected {
        let v = values.get_mut(i).ok_or_else(|| {
            Error::Domain(format!("plan index {i} out of range for {} parameters", params.len()))
        })?;
        *v += plan.epsilon * *v;
    }
    Ok(out)
}
