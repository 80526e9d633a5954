//! Dense feedforward network with explicit forward and backward passes.
//!
//! Layers compute `a = act(W a_prev + b)`. Classifier networks use ReLU on
//! hidden layers and identity on the output; softmax is applied only when
//! probabilities or the cross-entropy loss are requested.

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use super::params::{ParamLayout, ParameterStore};
use crate::{Error, Result};

/// Floor applied to probabilities before taking a logarithm.
pub const PROB_FLOOR: f64 = 1e-12;

/// Negative-side slope of [`Activation::LeakyRelu`].
pub const LEAKY_SLOPE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Activation {
    Relu,
    LeakyRelu,
    Identity,
    Tanh,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::LeakyRelu => {
                if z > 0.0 {
                    z
                } else {
                    LEAKY_SLOPE * z
                }
            }
            Activation::Identity => z,
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative given the pre-activation `z` and the output `a`.
    #[inline]
    fn derivative(self, z: f64, a: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyRelu => {
                if z > 0.0 {
                    1.0
                } else {
                    LEAKY_SLOPE
                }
            }
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - a * a,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub out_dim: usize,
    pub activation: Activation,
}

/// Layer dimensions and activations, without parameter values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkShape {
    pub input_dim: usize,
    pub layers: Vec<LayerSpec>,
}

impl NetworkShape {
    /// ReLU hidden layers followed by an identity output of `classes` logits.
    pub fn classifier(input_dim: usize, hidden: &[usize], classes: usize) -> Self {
        let mut layers: Vec<LayerSpec> = hidden
            .iter()
            .map(|&h| LayerSpec {
                out_dim: h,
                activation: Activation::Relu,
            })
            .collect();
        layers.push(LayerSpec {
            out_dim: classes,
            activation: Activation::Identity,
        });
        Self { input_dim, layers }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 {
            return Err(Error::Shape("input_dim must be positive".into()));
        }
        if self.layers.is_empty() {
            return Err(Error::Shape("network needs at least one layer".into()));
        }
        if let Some(i) = self.layers.iter().position(|l| l.out_dim == 0) {
            return Err(Error::Shape(format!("layer {i} has zero width")));
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.out_dim)
    }

    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        let mut prev = self.input_dim;
        self.layers
            .iter()
            .map(|l| {
                let d = (prev, l.out_dim);
                prev = l.out_dim;
                d
            })
            .collect()
    }

    pub fn layout(&self) -> ParamLayout {
        ParamLayout::from_dims(&self.layer_dims())
    }

    pub fn param_count(&self) -> usize {
        self.layout().total()
    }
}

/// Which scalar parameters receive gradient. Everything else is frozen.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamMask {
    keep: Vec<bool>,
    count: usize,
    layers: Vec<LayerSelection>,
}

#[derive(Debug, Clone, PartialEq)]
enum LayerSelection {
    Empty,
    Full,
    Sparse {
        /// (row, col, flat index)
        weights: Vec<(usize, usize, usize)>,
        biases: Vec<usize>,
    },
}

impl ParamMask {
    pub fn from_bools(layout: &ParamLayout, keep: Vec<bool>) -> Result<Self> {
        if keep.len() != layout.total() {
            return Err(Error::Shape(format!(
                "mask has {} entries, network has {} parameters",
                keep.len(),
                layout.total()
            )));
        }
        let layers = layout
            .layers()
            .iter()
            .map(|l| {
                let range = l.range();
                let kept = keep[range.clone()].iter().filter(|&&k| k).count();
                if kept == 0 {
                    LayerSelection::Empty
                } else if kept == l.param_count() {
                    LayerSelection::Full
                } else {
                    let weights = (l.weight_offset..l.bias_offset)
                        .filter(|&i| keep[i])
                        .map(|i| {
                            let local = i - l.weight_offset;
                            (local / l.in_dim, local % l.in_dim, i)
                        })
                        .collect();
                    let biases = (0..l.out_dim)
                        .filter(|&r| keep[l.bias_offset + r])
                        .collect();
                    LayerSelection::Sparse { weights, biases }
                }
            })
            .collect();
        let count = keep.iter().filter(|&&k| k).count();
        Ok(Self {
            keep,
            count,
            layers,
        })
    }

    pub fn from_indices(layout: &ParamLayout, indices: &[usize]) -> Result<Self> {
        let mut keep = vec![false; layout.total()];
        for &i in indices {
            if i >= keep.len() {
                return Err(Error::Domain(format!(
                    "parameter index {i} out of range for {} parameters",
                    keep.len()
                )));
            }
            keep[i] = true;
        }
        Self::from_bools(layout, keep)
    }

    /// Keeps every parameter of layers `first..` and freezes the rest.
    pub fn trailing_layers(layout: &ParamLayout, first: usize) -> Self {
        let mut keep = vec![false; layout.total()];
        for l in layout.layers().iter().skip(first) {
            keep[l.range()].iter_mut().for_each(|k| *k = true);
        }
        Self::from_bools(layout, keep).expect("mask built from its own layout")
    }

    pub fn all(layout: &ParamLayout) -> Self {
        Self::trailing_layers(layout, 0)
    }

    pub fn len(&self) -> usize {
        self.keep.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keep.is_empty()
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn is_kept(&self, i: usize) -> bool {
        self.keep[i]
    }

    pub fn selected_indices(&self) -> Vec<usize> {
        (0..self.keep.len()).filter(|&i| self.keep[i]).collect()
    }

    fn lowest_layer(&self) -> Option<usize> {
        self.layers
            .iter()
            .position(|s| !matches!(s, LayerSelection::Empty))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GradientSource {
    SingleSample,
    BatchMean,
}

/// Flat gradient aligned with a [`ParameterStore`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientRecord {
    pub grads: Vec<f64>,
    pub source: GradientSource,
}

impl GradientRecord {
    pub fn zeros(n: usize, source: GradientSource) -> Self {
        Self {
            grads: vec![0.0; n],
            source,
        }
    }

    pub fn len(&self) -> usize {
        self.grads.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grads.is_empty()
    }
}

/// Cached per-layer pre-activations and outputs of a forward pass.
#[derive(Debug, Clone)]
pub(crate) struct ForwardTrace {
    pre: Vec<Matrix>,
    post: Vec<Matrix>,
}

impl ForwardTrace {
    pub(crate) fn output(&self) -> &Matrix {
        self.post.last().expect("non-empty network")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    shape: NetworkShape,
    params: ParameterStore,
}

impl Network {
    pub fn new(shape: NetworkShape, params: ParameterStore) -> Result<Self> {
        shape.validate()?;
        if params.layout() != &shape.layout() {
            return Err(Error::Shape(
                "parameter layout does not match network shape".into(),
            ));
        }
        Ok(Self { shape, params })
    }

    pub fn zeros(shape: NetworkShape) -> Result<Self> {
        shape.validate()?;
        let params = ParameterStore::zeros(shape.layout());
        Ok(Self { shape, params })
    }

    /// Glorot-uniform weights, zero biases. Deterministic per seed.
    pub fn init_random(shape: NetworkShape, seed: u64) -> Result<Self> {
        let mut net = Self::zeros(shape)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in 0..net.shape.depth() {
            net.reinit_layer(layer, &mut rng);
        }
        Ok(net)
    }

    pub(crate) fn reinit_layer(&mut self, layer: usize, rng: &mut ChaCha8Rng) {
        let l = self.params.layout().layers()[layer];
        let bound = (6.0 / (l.in_dim + l.out_dim) as f64).sqrt();
        let dist = Uniform::new_inclusive(-bound, bound).expect("finite positive bound");
        let values = self.params.values_mut();
        for w in &mut values[l.weight_offset..l.bias_offset] {
            *w = dist.sample(rng);
        }
        values[l.bias_offset..l.bias_offset + l.out_dim].fill(0.0);
    }

    pub fn shape(&self) -> &NetworkShape {
        &self.shape
    }

    pub fn input_dim(&self) -> usize {
        self.shape.input_dim
    }

    pub fn class_count(&self) -> usize {
        self.shape.output_dim()
    }

    pub fn params(&self) -> &ParameterStore {
        &self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn params_mut(&mut self) -> &mut ParameterStore {
        &mut self.params
    }

    pub fn with_params(&self, params: ParameterStore) -> Result<Self> {
        Self::new(self.shape.clone(), params)
    }

    fn check_batch(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.shape.input_dim {
            return Err(Error::Shape(format!(
                "batch has {} columns, network expects {}",
                x.cols(),
                self.shape.input_dim
            )));
        }
        if x.rows() == 0 {
            return Err(Error::Shape("empty batch".into()));
        }
        Ok(())
    }

    pub(crate) fn forward_trace(&self, x: &Matrix) -> Result<ForwardTrace> {
        self.check_batch(x)?;
        let layout = self.params.layout();
        let depth = self.shape.depth();
        let mut pre = Vec::with_capacity(depth);
        let mut post: Vec<Matrix> = Vec::with_capacity(depth);
        for (li, spec) in self.shape.layers.iter().enumerate() {
            let l = layout.layers()[li];
            let input = if li == 0 { x } else { &post[li - 1] };
            let w = self.params.layer_weights(li);
            let bias = self.params.layer_bias(li);
            let mut z = Matrix::zeros(input.rows(), l.out_dim);
            let mut a = Matrix::zeros(input.rows(), l.out_dim);
            for b in 0..input.rows() {
                let xin = input.row(b);
                let zrow = z.row_mut(b);
                for (r, zr) in zrow.iter_mut().enumerate() {
                    let wrow = &w[r * l.in_dim..(r + 1) * l.in_dim];
                    *zr = dot(wrow, xin) + bias[r];
                }
                for (ar, &zr) in a.row_mut(b).iter_mut().zip(z.row(b)) {
                    *ar = spec.activation.apply(zr);
                }
            }
            if !a.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite activation in layer {li}"
                )));
            }
            pre.push(z);
            post.push(a);
        }
        Ok(ForwardTrace { pre, post })
    }

    /// Raw outputs of the final layer (logits for a classifier).
    pub fn logits(&self, x: &Matrix) -> Result<Matrix> {
        let mut trace = self.forward_trace(x)?;
        Ok(trace.post.pop().expect("non-empty network"))
    }

    /// Class-probability rows (softmax of the logits).
    pub fn forward(&self, x: &Matrix) -> Result<Matrix> {
        Ok(softmax_rows(&self.logits(x)?))
    }

    /// Argmax class per row; ties go to the lowest class index.
    pub fn predict(&self, x: &Matrix) -> Result<Vec<usize>> {
        let logits = self.logits(x)?;
        Ok((0..logits.rows()).map(|b| argmax(logits.row(b))).collect())
    }

    /// Gradient of the mean cross-entropy over the batch. Entries outside
    /// `mask` are exactly zero.
    pub fn backward(
        &self,
        x: &Matrix,
        labels: &[usize],
        mask: Option<&ParamMask>,
    ) -> Result<GradientRecord> {
        let trace = self.forward_trace(x)?;
        let probs = softmax_rows(trace.output());
        let (_, d_logits) = cross_entropy_head(&probs, labels)?;
        let source = if x.rows() == 1 {
            GradientSource::SingleSample
        } else {
            GradientSource::BatchMean
        };
        let mut rec = GradientRecord::zeros(self.param_count(), source);
        self.backprop(x, &trace, d_logits, mask, &mut rec.grads, false)?;
        Ok(rec)
    }

    /// Backpropagates `d_out = dL/d(output)` to the parameters and, when
    /// requested, to the input. Gradients are added into `grads`.
    pub(crate) fn backprop(
        &self,
        x: &Matrix,
        trace: &ForwardTrace,
        d_out: Matrix,
        mask: Option<&ParamMask>,
        grads: &mut [f64],
        want_input: bool,
    ) -> Result<Option<Matrix>> {
        if grads.len() != self.param_count() {
            return Err(Error::Shape(format!(
                "gradient buffer has {} entries, network has {}",
                grads.len(),
                self.param_count()
            )));
        }
        if let Some(m) = mask {
            if m.len() != self.param_count() {
                return Err(Error::Shape(format!(
                    "mask has {} entries, network has {}",
                    m.len(),
                    self.param_count()
                )));
            }
        }
        let lowest = match mask {
            Some(m) => m.lowest_layer(),
            None => Some(0),
        };
        let stop = match (want_input, lowest) {
            (true, _) => 0,
            (false, Some(l)) => l,
            (false, None) => return Ok(None),
        };

        let layout = self.params.layout();
        let mut d_post = d_out;
        for li in (stop..self.shape.depth()).rev() {
            let l = layout.layers()[li];
            let act = self.shape.layers[li].activation;
            let z = &trace.pre[li];
            let a = &trace.post[li];
            let mut delta = d_post;
            for (d, (&zv, &av)) in delta
                .as_mut_slice()
                .iter_mut()
                .zip(z.as_slice().iter().zip(a.as_slice()))
            {
                *d *= act.derivative(zv, av);
            }
            let a_prev = if li == 0 { x } else { &trace.post[li - 1] };
            let selection = match mask {
                Some(m) => &m.layers[li],
                None => &LayerSelection::Full,
            };
            accumulate_layer_grads(selection, &l, &delta, a_prev, grads);

            if li == 0 && !want_input {
                return Ok(None);
            }
            if li > stop || want_input {
                let w = self.params.layer_weights(li);
                let mut prev = Matrix::zeros(delta.rows(), l.in_dim);
                for b in 0..delta.rows() {
                    let out = prev.row_mut(b);
                    for (r, &d) in delta.row(b).iter().enumerate() {
                        if d != 0.0 {
                            axpy(d, &w[r * l.in_dim..(r + 1) * l.in_dim], out);
                        }
                    }
                }
                if li == 0 {
                    return Ok(Some(prev));
                }
                d_post = prev;
            } else {
                break;
            }
        }
        Ok(None)
    }

    /// Squared L2 norm of each sample's own cross-entropy gradient over all
    /// parameters. Uses `‖δ aᵀ‖² = ‖δ‖²·‖a‖²` per layer instead of
    /// materialising per-sample gradients.
    pub fn per_sample_grad_sq_norms(&self, x: &Matrix, labels: &[usize]) -> Result<Vec<f64>> {
        let trace = self.forward_trace(x)?;
        let mut d_post = softmax_rows(trace.output());
        check_labels(labels, d_post.rows(), d_post.cols())?;
        for (b, &y) in labels.iter().enumerate() {
            d_post.row_mut(b)[y] -= 1.0;
        }
        let layout = self.params.layout();
        let mut norms = vec![0.0; x.rows()];
        for li in (0..self.shape.depth()).rev() {
            let l = layout.layers()[li];
            let act = self.shape.layers[li].activation;
            let mut delta = d_post;
            for (d, (&zv, &av)) in delta
                .as_mut_slice()
                .iter_mut()
                .zip(trace.pre[li].as_slice().iter().zip(trace.post[li].as_slice()))
            {
                *d *= act.derivative(zv, av);
            }
            let a_prev = if li == 0 { x } else { &trace.post[li - 1] };
            for (b, n) in norms.iter_mut().enumerate() {
                let dd = dot(delta.row(b), delta.row(b));
                let aa = dot(a_prev.row(b), a_prev.row(b));
                *n += dd * (aa + 1.0);
            }
            if li == 0 {
                break;
            }
            let w = self.params.layer_weights(li);
            let mut prev = Matrix::zeros(delta.rows(), l.in_dim);
            for b in 0..delta.rows() {
                let out = prev.row_mut(b);
                for (r, &d) in delta.row(b).iter().enumerate() {
                    if d != 0.0 {
                        axpy(d, &w[r * l.in_dim..(r + 1) * l.in_dim], out);
                    }
                }
            }
            d_post = prev;
        }
        Ok(norms)
    }

    /// Gradient of `sum(d_out * output)` with respect to the input batch.
    pub fn input_gradient(&self, x: &Matrix, d_out: Matrix) -> Result<Matrix> {
        let trace = self.forward_trace(x)?;
        let empty = ParamMask::from_bools(self.params.layout(), vec![false; self.param_count()])?;
        let mut scratch = vec![0.0; self.param_count()];
        Ok(self
            .backprop(x, &trace, d_out, Some(&empty), &mut scratch, true)?
            .expect("input gradient requested"))
    }
}

fn accumulate_layer_grads(
    selection: &LayerSelection,
    l: &super::params::LayerLayout,
    delta: &Matrix,
    a_prev: &Matrix,
    grads: &mut [f64],
) {
    match selection {
        LayerSelection::Empty => {}
        LayerSelection::Full => {
            for b in 0..delta.rows() {
                let ap = a_prev.row(b);
                for (r, &d) in delta.row(b).iter().enumerate() {
                    if d != 0.0 {
                        let off = l.weight_offset + r * l.in_dim;
                        axpy(d, ap, &mut grads[off..off + l.in_dim]);
                        grads[l.bias_offset + r] += d;
                    }
                }
            }
        }
        LayerSelection::Sparse { weights, biases } => {
            for &(r, c, flat) in weights {
                let mut s = 0.0;
                for b in 0..delta.rows() {
                    s += delta.get(b, r) * a_prev.get(b, c);
                }
                grads[flat] += s;
            }
            for &r in biases {
                let mut s = 0.0;
                for b in 0..delta.rows() {
                    s += delta.get(b, r);
                }
                grads[l.bias_offset + r] += s;
            }
        }
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate().skip(1) {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Row-wise softmax with max subtraction.
pub fn softmax_rows(logits: &Matrix) -> Matrix {
    let mut out = logits.clone();
    for b in 0..out.rows() {
        let row = out.row_mut(b);
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

pub(crate) fn check_labels(labels: &[usize], rows: usize, classes: usize) -> Result<()> {
    if labels.len() != rows {
        return Err(Error::Shape(format!(
            "{} labels for {rows} samples",
            labels.len()
        )));
    }
    if let Some(&y) = labels.iter().find(|&&y| y >= classes) {
        return Err(Error::Domain(format!(
            "label {y} out of range for {classes} classes"
        )));
    }
    Ok(())
}

/// Mean cross-entropy and its gradient with respect to the logits.
pub(crate) fn cross_entropy_head(probs: &Matrix, labels: &[usize]) -> Result<(f64, Matrix)> {
    check_labels(labels, probs.rows(), probs.cols())?;
    let n = probs.rows() as f64;
    let mut loss = 0.0;
    let mut d = probs.clone();
    for (b, &y) in labels.iter().enumerate() {
        loss -= probs.get(b, y).max(PROB_FLOOR).ln();
        let row = d.row_mut(b);
        row[y] -= 1.0;
        for v in row.iter_mut() {
            *v /= n;
        }
    }
    Ok((loss / n, d))
}

/// Mean cross-entropy of a network on a labelled batch.
pub fn mean_cross_entropy(net: &Network, x: &Matrix, labels: &[usize]) -> Result<f64> {
    let probs = net.forward(x)?;
    Ok(cross_entropy_head(&probs, labels)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Network {
        Network::init_random(NetworkShape::classifier(2, &[4], 2), 11).unwrap()
    }

    #[test]
    fn zero_network_is_uniform() {
        let net = Network::zeros(NetworkShape::classifier(5, &[3], 4)).unwrap();
        let x = Matrix::from_rows(&[vec![1.0, -2.0, 3.0, 0.5, 9.0], vec![0.0; 5]]).unwrap();
        let p = net.forward(&x).unwrap();
        for v in p.as_slice() {
            assert_eq!(*v, 0.25);
        }
    }

    #[test]
    fn dominant_logit_wins() {
        let shape = NetworkShape::classifier(3, &[], 3);
        let layout = shape.layout();
        let mut values = vec![0.0; layout.total()];
        // identity weights, large bias on class 2
        values[0] = 1.0;
        values[4] = 1.0;
        values[8] = 1.0;
        values[11] = 50.0;
        let net = Network::new(shape, ParameterStore::from_values(layout, values).unwrap()).unwrap();
        let x = Matrix::from_rows(&[vec![0.3, 0.9, 0.1]]).unwrap();
        assert_eq!(net.predict(&x).unwrap(), vec![2]);
        let p = net.forward(&x).unwrap();
        assert_eq!(argmax(p.row(0)), 2);
    }

    #[test]
    fn shape_mismatch_is_error() {
        let x = Matrix::zeros(1, 3);
        assert!(matches!(tiny().forward(&x), Err(Error::Shape(_))));
        assert!(matches!(tiny().forward(&Matrix::zeros(0, 2)), Err(Error::Shape(_))));
    }

    #[test]
    fn label_out_of_range_is_domain_error() {
        let x = Matrix::zeros(1, 2);
        assert!(matches!(
            tiny().backward(&x, &[2], None),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn all_zero_mask_gives_zero_grads() {
        let net = tiny();
        let mask = ParamMask::from_bools(net.params().layout(), vec![false; net.param_count()])
            .unwrap();
        let x = Matrix::from_rows(&[vec![0.5, -1.0]]).unwrap();
        let g = net.backward(&x, &[1], Some(&mask)).unwrap();
        assert!(g.grads.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn duplicated_sample_matches_single() {
        let net = tiny();
        let one = Matrix::from_rows(&[vec![0.5, -1.0]]).unwrap();
        let two = Matrix::from_rows(&[vec![0.5, -1.0], vec![0.5, -1.0]]).unwrap();
        let g1 = net.backward(&one, &[1], None).unwrap();
        let g2 = net.backward(&two, &[1, 1], None).unwrap();
        assert_eq!(g1.source, GradientSource::SingleSample);
        assert_eq!(g2.source, GradientSource::BatchMean);
        for (a, b) in g1.grads.iter().zip(&g2.grads) {
            assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0));
        }
    }

    #[test]
    fn sparse_mask_matches_dense_on_kept_entries() {
        let net = Network::init_random(NetworkShape::classifier(3, &[5, 4], 3), 3).unwrap();
        let x = Matrix::from_rows(&[vec![0.2, -0.4, 1.0], vec![1.5, 0.3, -0.7]]).unwrap();
        let full = net.backward(&x, &[0, 2], None).unwrap();
        let keep: Vec<usize> = (0..net.param_count()).filter(|i| i % 3 == 1).collect();
        let mask = ParamMask::from_indices(net.params().layout(), &keep).unwrap();
        let sparse = net.backward(&x, &[0, 2], Some(&mask)).unwrap();
        for i in 0..net.param_count() {
            if mask.is_kept(i) {
                assert!((full.grads[i] - sparse.grads[i]).abs() < 1e-14);
            } else {
                assert_eq!(sparse.grads[i], 0.0);
            }
        }
    }

    #[test]
    fn per_sample_norms_match_explicit_gradients() {
        let net = Network::init_random(NetworkShape::classifier(3, &[5, 4], 3), 21).unwrap();
        let rows = vec![vec![0.2, -0.4, 1.0], vec![1.5, 0.3, -0.7], vec![-0.1, 0.0, 0.4]];
        let labels = [0, 2, 1];
        let x = Matrix::from_rows(&rows).unwrap();
        let norms = net.per_sample_grad_sq_norms(&x, &labels).unwrap();
        for (b, row) in rows.iter().enumerate() {
            let xb = Matrix::from_rows(std::slice::from_ref(row)).unwrap();
            let g = net.backward(&xb, &[labels[b]], None).unwrap();
            let explicit: f64 = g.grads.iter().map(|v| v * v).sum();
            assert!((explicit - norms[b]).abs() < 1e-12 * explicit.max(1.0));
        }
    }

    #[test]
    fn init_is_deterministic_with_zero_bias() {
        let shape = NetworkShape::classifier(6, &[8], 3);
        let a = Network::init_random(shape.clone(), 42).unwrap();
        let b = Network::init_random(shape, 42).unwrap();
        assert_eq!(a.params().values(), b.params().values());
        for layer in 0..a.shape().depth() {
            assert!(a.params().layer_bias(layer).iter().all(|&v| v == 0.0));
            let l = a.params().layout().layers()[layer];
            let bound = (6.0 / (l.in_dim + l.out_dim) as f64).sqrt();
            assert!(a.params().layer_weights(layer).iter().all(|w| w.abs() <= bound));
        }
    }

    #[test]
    fn softmax_rows_sum_to_one() {
        let logits = Matrix::from_rows(&[vec![1000.0, -1000.0, 3.0], vec![1e-3, 2e-3, 0.0]]).unwrap();
        let p = softmax_rows(&logits);
        for b in 0..2 {
            let s: f64 = p.row(b).iter().sum();
            assert!((s - 1.0).abs() < 1e-9);
        }
    }
}
