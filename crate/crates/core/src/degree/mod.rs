//! Unlearning-degree quantifier: a bounded noise generator trained against
//! the frozen pair (source model, unlearned model). The degree is the
//! source model's accuracy on the perturbed unlearn set minus the
//! unlearned model's accuracy on it.

mod generator;
mod report;

pub use generator::{perturb_data, Generator, GeneratorEpoch};
pub use report::{write_sample_dump, DegreeReport, SAMPLE_DUMP_ROWS};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, FeatureScaling};
use crate::metrics::accuracy;
use crate::nn::{
    cross_entropy_head, softmax_rows, GradientRecord, GradientSource, Matrix, Network,
    OptimizerSpec, OptimizerState, ParamMask,
};
use crate::{Error, Result};

/// Generator objective below which training is considered to have diverged.
pub const DIVERGENCE_LOSS: f64 = -50.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DegreeConfig {
    /// Weight of the unlearned model's cross-entropy in the objective.
    pub eta: f64,
    pub epochs: usize,
    pub batch_size: usize,
    /// Bound on each noise entry.
    pub delta_max: f64,
    /// Allowed gap between the source model's accuracy on the perturbed and
    /// the clean unlearn set.
    pub tolerance: f64,
    pub optimizer: OptimizerSpec,
    pub hidden: usize,
    pub bottleneck: usize,
    pub seed: u64,
}

impl Default for DegreeConfig {
    fn default() -> Self {
        Self {
            eta: 0.03,
            epochs: 30,
            batch_size: 64,
            delta_max: 0.1,
            tolerance: 0.05,
            optimizer: OptimizerSpec::adam(1e-3),
            hidden: 64,
            bottleneck: 16,
            seed: 0,
        }
    }
}

impl DegreeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(Error::Config(format!("eta must be > 0, got {}", self.eta)));
        }
        if !(self.tolerance > 0.0 && self.tolerance < 1.0) {
            return Err(Error::Config(format!(
                "tolerance must lie in (0, 1), got {}",
                self.tolerance
            )));
        }
        if !(self.delta_max >= 0.0 && self.delta_max.is_finite()) {
            return Err(Error::Config(format!("delta_max must be >= 0, got {}", self.delta_max)));
        }
        if self.batch_size == 0 || self.hidden == 0 || self.bottleneck == 0 {
            return Err(Error::Config("batch_size, hidden and bottleneck must be >= 1".into()));
        }
        self.optimizer.validate()
    }
}

/// Input gradient of the mean cross-entropy of `net` on `(x, y)`, with the
/// loss value.
fn ce_input_grad(net: &Network, freeze: &ParamMask, x: &Matrix, y: &[usize]) -> Result<(f64, Matrix)> {
    let trace = net.forward_trace(x)?;
    let probs = softmax_rows(trace.output());
    let (loss, d_logits) = cross_entropy_head(&probs, y)?;
    let mut scratch = vec![0.0; net.param_count()];
    let g = net
        .backprop(x, &trace, d_logits, Some(freeze), &mut scratch, true)?
        .expect("input gradient requested");
    Ok((loss, g))
}

/// Trains a generator to minimise `CE(M(D_p)) - eta * CE(M_UL(D_p))` over
/// the unlearn set. Neither model is modified.
pub fn train_generator(
    source: &Network,
    unlearned: &Network,
    unlearn: &Dataset,
    config: &DegreeConfig,
) -> Result<Generator> {
    config.validate()?;
    if source.shape() != unlearned.shape() {
        return Err(Error::Shape("source and unlearned models differ in shape".into()));
    }
    if unlearn.is_empty() {
        return Err(Error::Domain("unlearn set is empty".into()));
    }
    let dims = unlearn.dims();
    let mut gen = Generator::new(dims, config.hidden, config.bottleneck, config.delta_max, config.seed)?;
    let freeze_m = ParamMask::from_bools(source.params().layout(), vec![false; source.param_count()])?;
    let freeze_ul = ParamMask::from_bools(unlearned.params().layout(), vec![false; unlearned.param_count()])?;
    let n_gen = gen.network().param_count();
    let mut opt = OptimizerState::new(config.optimizer, n_gen);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..unlearn.len()).collect();
    let clamp = unlearn.scaling() == FeatureScaling::UnitInterval;
    let delta = config.delta_max;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let (mut ce_m_sum, mut ce_ul_sum) = (0.0, 0.0);
        for chunk in order.chunks(config.batch_size) {
            let x = unlearn.features().select_rows(chunk);
            let y: Vec<usize> = chunk.iter().map(|&i| unlearn.labels()[i]).collect();
            let net = gen.network();
            let trace = net.forward_trace(&x)?;
            let mut xp = x.clone();
            let mut inside = vec![true; xp.as_slice().len()];
            for ((p, t), ins) in xp.as_mut_slice().iter_mut().zip(trace.output().as_slice()).zip(&mut inside) {
                *p += delta * t;
                if clamp && !(0.0..=1.0).contains(p) {
                    *p = p.clamp(0.0, 1.0);
                    *ins = false;
                }
            }
            let (ce_m, g_m) = ce_input_grad(source, &freeze_m, &xp, &y)?;
            let (ce_ul, g_ul) = ce_input_grad(unlearned, &freeze_ul, &xp, &y)?;
            let loss = ce_m - config.eta * ce_ul;
            if loss < DIVERGENCE_LOSS {
                return Err(Error::Divergence { epoch, loss });
            }
            ce_m_sum += ce_m * chunk.len() as f64;
            ce_ul_sum += ce_ul * chunk.len() as f64;
            let mut d_out = g_m;
            for ((d, u), ins) in d_out.as_mut_slice().iter_mut().zip(g_ul.as_slice()).zip(&inside) {
                *d = if *ins { delta * (*d - config.eta * u) } else { 0.0 };
            }
            let mut rec = GradientRecord::zeros(n_gen, GradientSource::BatchMean);
            net.backprop(&x, &trace, d_out, None, &mut rec.grads, false)?;
            opt.step(gen.network_mut().params_mut(), &rec)?;
        }
        let n = unlearn.len() as f64;
        let (ce_source, ce_unlearned) = (ce_m_sum / n, ce_ul_sum / n);
        let loss = ce_source - config.eta * ce_unlearned;
        if !loss.is_finite() || loss < DIVERGENCE_LOSS {
            return Err(Error::Divergence { epoch, loss });
        }
        gen.loss_trace.push(GeneratorEpoch {
            epoch,
            loss,
            ce_source,
            ce_unlearned,
        });
    }
    Ok(gen)
}

/// Accuracies of both models on the perturbed and clean sets, and the
/// resulting degree. The degree is reported even when the constraint fails.
pub fn evaluate_degree(
    source: &Network,
    unlearned: &Network,
    gen: &Generator,
    unlearn: &Dataset,
    remain: &Dataset,
    tolerance: f64,
) -> Result<DegreeReport> {
    let dp = perturbed_set(gen, unlearn)?;
    let acc_m_on_dp = accuracy(source, &dp)?;
    let acc_m_on_dul = accuracy(source, unlearn)?;
    let acc_mul_on_dp = accuracy(unlearned, &dp)?;
    let degree = acc_m_on_dp - acc_mul_on_dp;
    let class_count = unlearn.class_count();
    let upper = 1.0 - 1.0 / class_count as f64;
    let warning = (!(0.0..=upper).contains(&degree))
        .then(|| format!("degree {degree} outside the expected range [0, {upper}]"));
    if let Some(w) = &warning {
        log::warn!("{w}");
    }
    Ok(DegreeReport {
        degree,
        acc_m_on_dp,
        acc_m_on_dul,
        acc_mul_on_dp,
        acc_mul_on_dul: accuracy(unlearned, unlearn)?,
        acc_mul_on_dre: accuracy(unlearned, remain)?,
        tolerance,
        constraint_satisfied: (acc_m_on_dp - acc_m_on_dul).abs() <= tolerance,
        class_count,
        warning,
        loss_trace: gen.loss_trace.clone(),
    })
}

/// The unlearn set with generator noise applied, labels unchanged.
pub fn perturbed_set(gen: &Generator, unlearn: &Dataset) -> Result<Dataset> {
    let dp = perturb_data(gen, unlearn.features(), unlearn.scaling())?;
    Dataset::new(dp, unlearn.labels().to_vec(), unlearn.class_count(), unlearn.scaling())
}

/// Trains a generator and evaluates the degree in one call.
pub fn run_degree(
    source: &Network,
    unlearned: &Network,
    unlearn: &Dataset,
    remain: &Dataset,
    config: &DegreeConfig,
) -> Result<(Generator, DegreeReport)> {
    let gen = train_generator(source, unlearned, unlearn, config)?;
    let report = evaluate_degree(source, unlearned, &gen, unlearn, remain, config.tolerance)?;
    Ok((gen, report))
}
