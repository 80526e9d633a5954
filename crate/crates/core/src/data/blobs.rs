use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Dataset, FeatureScaling};
use crate::nn::Matrix;
use crate::{Error, Result};

/// Radius of the hypersphere carrying the class centers.
pub const CENTER_RADIUS: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub class_count: usize,
    pub per_class: usize,
    pub dims: usize,
    /// Standard deviation of each cluster, per coordinate.
    pub spread: f64,
    pub seed: u64,
}

/// Balanced isotropic Gaussian clusters. Class centers are seeded random
/// directions scaled onto a sphere of radius [`CENTER_RADIUS`]; rows are
/// emitted class by class.
pub fn generate_blobs(spec: &BlobSpec) -> Result<Dataset> {
    if spec.class_count < 2 {
        return Err(Error::Domain("blobs need at least 2 classes".into()));
    }
    if spec.per_class == 0 || spec.dims == 0 {
        return Err(Error::Domain("per_class and dims must be positive".into()));
    }
    if !(spec.spread > 0.0 && spec.spread.is_finite()) {
        return Err(Error::Domain(format!("spread must be positive, got {}", spec.spread)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let centers: Vec<Vec<f64>> = (0..spec.class_count)
        .map(|_| {
            let v: Vec<f64> = (0..spec.dims).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
            v.into_iter().map(|x| CENTER_RADIUS * x / norm).collect()
        })
        .collect();
    let n = spec.class_count * spec.per_class;
    let mut data = Vec::with_capacity(n * spec.dims);
    let mut labels = Vec::with_capacity(n);
    for (class, center) in centers.iter().enumerate() {
        for _ in 0..spec.per_class {
            for &c in center {
                let z: f64 = StandardNormal.sample(&mut rng);
                data.push(c + spec.spread * z);
            }
            labels.push(class);
        }
    }
    Dataset::new(
        Matrix::from_vec(n, spec.dims, data)?,
        labels,
        spec.class_count,
        FeatureScaling::Unbounded,
    )
}
