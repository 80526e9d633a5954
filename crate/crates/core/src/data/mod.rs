//! Datasets: synthetic Gaussian blobs, IDX (MNIST-format) files, CSV
//! export, and seeded unlearn/remain partitioning.

mod blobs;
mod csv_io;
mod idx;
mod split;

pub use blobs::{generate_blobs, BlobSpec};
pub use csv_io::{read_csv, write_csv};
pub use idx::{load_idx, read_idx_images, read_idx_labels, write_idx_images, write_idx_labels, IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC};
pub use split::{split, DatasetSplit, Partition};

use serde::{Deserialize, Serialize};

use crate::nn::Matrix;
use crate::{Error, Result};

/// How feature values were scaled when the dataset was built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureScaling {
    /// Values lie in `[0, 1]` (pixel bytes divided by 255).
    UnitInterval,
    /// Unbounded real features (synthetic data).
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<usize>,
    class_count: usize,
    scaling: FeatureScaling,
}

impl Dataset {
    pub fn new(
        features: Matrix,
        labels: Vec<usize>,
        class_count: usize,
        scaling: FeatureScaling,
    ) -> Result<Self> {
        if class_count < 2 {
            return Err(Error::Domain(format!(
                "need at least 2 classes, got {class_count}"
            )));
        }
        if features.rows() != labels.len() {
            return Err(Error::Consistency(format!(
                "{} feature rows but {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if let Some(&y) = labels.iter().find(|&&y| y >= class_count) {
            return Err(Error::Domain(format!(
                "label {y} out of range for {class_count} classes"
            )));
        }
        if !features.is_finite() {
            return Err(Error::Numeric("dataset contains non-finite features".into()));
        }
        if scaling == FeatureScaling::UnitInterval
            && features.as_slice().iter().any(|v| !(0.0..=1.0).contains(v))
        {
            return Err(Error::Domain("unit-interval dataset has values outside [0, 1]".into()));
        }
        Ok(Self {
            features,
            labels,
            class_count,
            scaling,
        })
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn scaling(&self) -> FeatureScaling {
        self.scaling
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dims(&self) -> usize {
        self.features.cols()
    }

    /// Rows `indices` (in order) as a new dataset.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_count: self.class_count,
            scaling: self.scaling,
        }
    }

    /// First `n` rows.
    pub fn truncate(&self, n: usize) -> Dataset {
        let idx: Vec<usize> = (0..n.min(self.len())).collect();
        self.subset(&idx)
    }
}
