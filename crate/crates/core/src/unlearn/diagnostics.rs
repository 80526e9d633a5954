use crate::data::Partition;
use crate::nn::Network;
use crate::Result;

/// Mean squared per-sample gradient norm over the unlearn set minus the
/// same over the remain set. Reported only; larger means the model fits
/// the unlearn set worse than the remain set.
pub fn gradient_norm_gap(net: &Network, partition: &Partition) -> Result<f64> {
    let mean = |ds: &crate::data::Dataset| -> Result<f64> {
        let norms = net.per_sample_grad_sq_norms(ds.features(), ds.labels())?;
        Ok(norms.iter().sum::<f64>() / norms.len() as f64)
    };
    Ok(mean(&partition.unlearn)? - mean(&partition.remain)?)
}
