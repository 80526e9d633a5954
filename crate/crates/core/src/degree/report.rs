use std::path::Path;

use serde::{Deserialize, Serialize};

use super::generator::GeneratorEpoch;
use crate::nn::Matrix;
use crate::{Error, Result};

/// Number of samples written by [`write_sample_dump`].
pub const SAMPLE_DUMP_ROWS: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DegreeReport {
    /// `acc_m_on_dp - acc_mul_on_dp`.
    pub degree: f64,
    pub acc_m_on_dp: f64,
    pub acc_m_on_dul: f64,
    pub acc_mul_on_dp: f64,
    pub acc_mul_on_dul: f64,
    pub acc_mul_on_dre: f64,
    pub tolerance: f64,
    /// `|acc_m_on_dp - acc_m_on_dul| <= tolerance`.
    pub constraint_satisfied: bool,
    pub class_count: usize,
    /// Set when the degree falls outside `[0, 1 - 1/C]`.
    pub warning: Option<String>,
    pub loss_trace: Vec<GeneratorEpoch>,
}

impl DegreeReport {
    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn in_expected_range(&self) -> bool {
        (0.0..=1.0 - 1.0 / self.class_count as f64).contains(&self.degree)
    }
}

/// Writes the first [`SAMPLE_DUMP_ROWS`] samples before and after
/// perturbation, one row each, tagged by `stage`.
pub fn write_sample_dump(path: &Path, before: &Matrix, after: &Matrix) -> Result<()> {
    if before.rows() != after.rows() || before.cols() != after.cols() {
        return Err(Error::Shape("before and after batches differ in shape".into()));
    }
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["sample".to_owned(), "stage".to_owned()];
    header.extend((0..before.cols()).map(|j| format!("f{j}")));
    w.write_record(&header)?;
    for i in 0..before.rows().min(SAMPLE_DUMP_ROWS) {
        for (stage, m) in [("before", before), ("after", after)] {
            let mut rec = vec![i.to_string(), stage.to_owned()];
            rec.extend(m.row(i).iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}
