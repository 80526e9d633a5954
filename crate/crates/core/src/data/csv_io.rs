//! CSV export/import with header `f0,..,f{d-1},label`.

use std::path::Path;

use super::{Dataset, FeatureScaling};
use crate::nn::Matrix;
use crate::{Error, Result};

pub fn write_csv(ds: &Dataset, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (0..ds.dims()).map(|i| format!("f{i}")).collect();
    header.push("label".into());
    w.write_record(&header)?;
    for (row, &label) in ds.labels().iter().enumerate() {
        let mut rec: Vec<String> = ds.features().row(row).iter().map(|v| v.to_string()).collect();
        rec.push(label.to_string());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a dataset written by [`write_csv`]. Features are taken as
/// unbounded; `class_count` must cover every label.
pub fn read_csv(path: &Path, class_count: usize) -> Result<Dataset> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    let dims = header.len().checked_sub(1).filter(|&d| d > 0).ok_or_else(|| {
        Error::Format(format!("{}: header needs features and a label", path.display()))
    })?;
    for (i, h) in header.iter().enumerate() {
        let expected = if i == dims { "label".to_owned() } else { format!("f{i}") };
        if h != expected {
            return Err(Error::Format(format!(
                "{}: column {i} is {h:?}, expected {expected:?}",
                path.display()
            )));
        }
    }
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        for field in rec.iter().take(dims) {
            data.push(field.parse::<f64>().map_err(|e| {
                Error::Format(format!("{}: bad feature {field:?}: {e}", path.display()))
            })?);
        }
        let label = &rec[dims];
        labels.push(label.parse::<usize>().map_err(|e| {
            Error::Format(format!("{}: bad label {label:?}: {e}", path.display()))
        })?);
    }
    let n = labels.len();
    Dataset::new(Matrix::from_vec(n, dims, data)?, labels, class_count, FeatureScaling::Unbounded)
}
