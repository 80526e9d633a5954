//! The perturb-then-fine-tune procedure and the training loop it shares
//! with the baselines.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{Strategy, UnlearnConfig};
use super::js::js_logit_grad;
use super::outcome::{EpochRecord, UnlearnOutcome};
use super::select::{perturb, PerturbationPlan};
use crate::data::{Dataset, Partition};
use crate::metrics::accuracy;
use crate::nn::{
    argmax, cross_entropy_head, softmax_rows, GradientRecord, GradientSource, Matrix, Network,
    OptimizerState, ParamMask,
};
use crate::{Error, Result};

/// JS regulariser over the unlearn set against fixed reference outputs.
pub(crate) struct JsTerm<'a> {
    pub unlearn: &'a Dataset,
    pub reference: Matrix,
    pub lambda: f64,
}

pub(crate) struct LoopResult {
    pub trace: Vec<EpochRecord>,
}

/// Trains `model` on the remain set until the accuracy plateau criterion
/// or `max_epochs`. Only parameters in `mask` move (all when `None`).
pub(crate) fn train_until_converged(
    model: &mut Network,
    remain: &Dataset,
    js: Option<&JsTerm<'_>>,
    mask: Option<&ParamMask>,
    config: &UnlearnConfig,
) -> Result<LoopResult> {
    if remain.is_empty() {
        return Err(Error::Domain("remain set is empty".into()));
    }
    let n_params = model.param_count();
    let indices = mask.map(ParamMask::selected_indices);
    let mut opt = OptimizerState::new(config.optimizer, n_params);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut re_order: Vec<usize> = (0..remain.len()).collect();
    let mut ul_order: Vec<usize> = js.map_or(Vec::new(), |t| (0..t.unlearn.len()).collect());
    let steps = remain.len().div_ceil(config.batch_size);
    let ul_batch = ul_order.len().div_ceil(steps.max(1));

    let mut trace = Vec::new();
    let mut best = f64::NEG_INFINITY;
    let mut stale = 0;
    let mut grads = GradientRecord::zeros(n_params, GradientSource::BatchMean);
    for epoch in 1..=config.max_epochs {
        re_order.shuffle(&mut rng);
        ul_order.shuffle(&mut rng);
        let (mut ce_sum, mut re_correct) = (0.0, 0usize);
        let (mut js_sum, mut ul_correct, mut ul_seen) = (0.0, 0usize, 0usize);
        for (s, chunk) in re_order.chunks(config.batch_size).enumerate() {
            grads.grads.iter_mut().for_each(|g| *g = 0.0);

            let xb = remain.features().select_rows(chunk);
            let yb: Vec<usize> = chunk.iter().map(|&i| remain.labels()[i]).collect();
            let tr = model.forward_trace(&xb)?;
            let probs = softmax_rows(tr.output());
            re_correct += (0..probs.rows()).filter(|&b| argmax(probs.row(b)) == yb[b]).count();
            let (ce, d_ce) = cross_entropy_head(&probs, &yb)?;
            ce_sum += ce * chunk.len() as f64;
            model.backprop(&xb, &tr, d_ce, mask, &mut grads.grads, false)?;

            if let Some(term) = js {
                let lo = (s * ul_batch).min(ul_order.len());
                let hi = ((s + 1) * ul_batch).min(ul_order.len());
                if lo < hi {
                    let ids = &ul_order[lo..hi];
                    let xu = term.unlearn.features().select_rows(ids);
                    let ref_rows = term.reference.select_rows(ids);
                    let tu = model.forward_trace(&xu)?;
                    let pu = softmax_rows(tu.output());
                    ul_correct += ids
                        .iter()
                        .enumerate()
                        .filter(|&(b, &i)| argmax(pu.row(b)) == term.unlearn.labels()[i])
                        .count();
                    ul_seen += ids.len();
                    let scale = term.lambda / ids.len() as f64;
                    let (js_total, d_js) = js_logit_grad(&pu, &ref_rows, scale);
                    js_sum += js_total;
                    if term.lambda > 0.0 {
                        model.backprop(&xu, &tu, d_js, mask, &mut grads.grads, false)?;
                    }
                }
            }
            opt.step_on(model.params_mut(), &grads, indices.as_deref())
                .map_err(|e| Error::Numeric(format!("epoch {epoch}: {e}")))?;
        }
        let ce = ce_sum / remain.len() as f64;
        let js_mean = js.map(|_| js_sum / ul_seen.max(1) as f64);
        if !ce.is_finite() || js_mean.is_some_and(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("non-finite loss at epoch {epoch}")));
        }
        let acc_re = re_correct as f64 / remain.len() as f64;
        trace.push(EpochRecord {
            epoch,
            ce,
            js: js_mean,
            acc_re,
            acc_ul: js.map(|_| ul_correct as f64 / ul_seen.max(1) as f64),
        });
        if acc_re > best + config.min_acc_delta {
            best = acc_re;
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }
    Ok(LoopResult { trace })
}

/// Perturbs the source parameters per `plan`, then fine-tunes only the
/// selected parameters on the remain set with cross-entropy plus
/// `λ · JS(model ‖ source)` over the unlearn set.
pub fn unlearn_finetune(
    source: &Network,
    partition: &Partition,
    config: &UnlearnConfig,
    plan: &PerturbationPlan,
    strategy: Strategy,
) -> Result<UnlearnOutcome> {
    unlearn_finetune_guided(source, source, partition, config, plan, strategy)
}

/// As [`unlearn_finetune`], with the JS term taken against `guide`
/// (e.g. a retrained model) instead of the source model.
pub fn unlearn_finetune_guided(
    source: &Network,
    guide: &Network,
    partition: &Partition,
    config: &UnlearnConfig,
    plan: &PerturbationPlan,
    strategy: Strategy,
) -> Result<UnlearnOutcome> {
    config.validate()?;
    if guide.shape() != source.shape() {
        return Err(Error::Shape("guide and source networks differ in shape".into()));
    }
    let start = Instant::now();
    let perturbed = perturb(source.params(), plan)?;
    let mut model = source.with_params(perturbed)?;
    let mask = ParamMask::from_indices(model.params().layout(), &plan.selected)?;
    let term = JsTerm {
        unlearn: &partition.unlearn,
        reference: guide.forward(partition.unlearn.features())?,
        lambda: config.lambda,
    };
    let result = train_until_converged(&mut model, &partition.remain, Some(&term), Some(&mask), config)?;
    let wall_time_s = start.elapsed().as_secs_f64();
    Ok(UnlearnOutcome {
        strategy,
        acc_ul: accuracy(&model, &partition.unlearn)?,
        acc_re: accuracy(&model, &partition.remain)?,
        model,
        wall_time_s,
        selection_time_s: 0.0,
        epochs_run: result.trace.len(),
        loss_trace: result.trace,
        perturbed_count: plan.selected.len(),
        epsilon: Some(plan.epsilon),
        lambda: Some(config.lambda),
    })
}
