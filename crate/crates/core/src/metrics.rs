//! Evaluation metrics over a source model, an unlearned model and a split.

use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::nn::Network;
use crate::unlearn::{mean_js, UnlearnOutcome};
use crate::{Error, Result};

/// Fraction of rows whose argmax prediction equals the label.
pub fn accuracy(net: &Network, ds: &Dataset) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::Domain("accuracy of an empty set".into()));
    }
    let preds = net.predict(ds.features())?;
    let correct = preds.iter().zip(ds.labels()).filter(|(p, y)| p == y).count();
    Ok(correct as f64 / ds.len() as f64)
}

/// `(before − after) / before`; negative when accuracy rose.
pub fn forgetting_rate(acc_before: f64, acc_after: f64) -> Result<f64> {
    if acc_before <= 0.0 {
        return Err(Error::UndefinedMetric(
            "forgetting rate with zero accuracy before unlearning".into(),
        ));
    }
    Ok((acc_before - acc_after) / acc_before)
}

/// `after / before` on the remain set; may exceed 1.
pub fn memory_retention_rate(acc_re_before: f64, acc_re_after: f64) -> Result<f64> {
    if acc_re_before <= 0.0 {
        return Err(Error::UndefinedMetric(
            "memory retention rate with zero remain accuracy before unlearning".into(),
        ));
    }
    Ok(acc_re_after / acc_re_before)
}

/// `1 − mean JS(reference(x) ‖ unlearned(x))` over the unlearn set.
pub fn similarity(reference: &Network, unlearned: &Network, unlearn: &Dataset) -> Result<f64> {
    if reference.class_count() != unlearned.class_count() {
        return Err(Error::Shape("models disagree on class count".into()));
    }
    if unlearn.is_empty() {
        return Err(Error::Domain("similarity over an empty set".into()));
    }
    let p = reference.forward(unlearn.features())?;
    let q = unlearned.forward(unlearn.features())?;
    Ok(1.0 - mean_js(&p, &q)?)
}

/// `retrain_time / unlearn_time`; above 1 means the strategy was faster.
pub fn acceleration_ratio(unlearn_time_s: f64, retrain_time_s: f64) -> Result<f64> {
    if unlearn_time_s <= 0.0 {
        return Err(Error::UndefinedMetric("zero unlearn time".into()));
    }
    Ok(retrain_time_s / unlearn_time_s)
}

/// Acceleration of each outcome relative to the retrain run.
pub fn acceleration(
    outcomes: &[UnlearnOutcome],
    retrain: &UnlearnOutcome,
) -> Result<Vec<(String, f64)>> {
    outcomes
        .iter()
        .map(|o| Ok((o.strategy.tag(), acceleration_ratio(o.wall_time_s, retrain.wall_time_s)?)))
        .collect()
}

/// Which model the similarity was measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimilarityReference {
    Retrained,
    Source,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub strategy: String,
    pub ratio: f64,
    pub acc_ul_before: f64,
    pub acc_ul_after: f64,
    pub acc_re_before: f64,
    pub acc_re_after: f64,
    pub forgetting_rate: f64,
    pub memory_retention_rate: f64,
    pub similarity: f64,
    pub similarity_reference: SimilarityReference,
    pub unlearn_time_s: f64,
    pub retrain_time_s: Option<f64>,
    pub acceleration_ratio: Option<f64>,
}

pub const METRICS_CSV_HEADER: &str =
    "strategy,ratio,acc_ul,acc_re,fr,mrr,similarity,unlearn_time_s,acceleration";

impl MetricReport {
    /// Builds the report for one outcome. `retrain` supplies both the
    /// similarity reference and the acceleration baseline when present;
    /// otherwise similarity is taken against the source model.
    pub fn compute(
        source: &Network,
        outcome: &UnlearnOutcome,
        retrain: Option<&UnlearnOutcome>,
        unlearn: &Dataset,
        remain: &Dataset,
        ratio: f64,
    ) -> Result<Self> {
        let acc_ul_before = accuracy(source, unlearn)?;
        let acc_re_before = accuracy(source, remain)?;
        let (reference, similarity_reference) = match retrain {
            Some(r) => (&r.model, SimilarityReference::Retrained),
            None => (source, SimilarityReference::Source),
        };
        let acceleration_ratio = retrain
            .map(|r| acceleration_ratio(outcome.wall_time_s, r.wall_time_s))
            .transpose()?;
        Ok(Self {
            strategy: outcome.strategy.tag(),
            ratio,
            acc_ul_before,
            acc_ul_after: outcome.acc_ul,
            acc_re_before,
            acc_re_after: outcome.acc_re,
            forgetting_rate: forgetting_rate(acc_ul_before, outcome.acc_ul)?,
            memory_retention_rate: memory_retention_rate(acc_re_before, outcome.acc_re)?,
            similarity: similarity(reference, &outcome.model, unlearn)?,
            similarity_reference,
            unlearn_time_s: outcome.wall_time_s,
            retrain_time_s: retrain.map(|r| r.wall_time_s),
            acceleration_ratio,
        })
    }

    /// One CSV row matching [`METRICS_CSV_HEADER`].
    pub fn csv_row(&self) -> String {
        let opt = |v: Option<f64>| v.map(sig6).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.strategy,
            sig6(self.ratio),
            sig6(self.acc_ul_after),
            sig6(self.acc_re_after),
            sig6(self.forgetting_rate),
            sig6(self.memory_retention_rate),
            sig6(self.similarity),
            sig6(self.unlearn_time_s),
            opt(self.acceleration_ratio),
        )
    }
}

/// Formats with 6 significant digits, like C's `%.6g`.
pub fn sig6(x: f64) -> String {
    format_sig(x, 6)
}

pub fn format_sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_owned()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}
