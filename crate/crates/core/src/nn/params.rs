//! Flat parameter storage and the index map between flat positions and
//! (layer, row, col | bias) coordinates.
//!
//! Each layer occupies a contiguous block: its `out_dim x in_dim` weight
//! matrix in row-major order followed by its `out_dim` biases.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LayerLayout {
    pub in_dim: usize,
    pub out_dim: usize,
    pub weight_offset: usize,
    pub bias_offset: usize,
}

impl LayerLayout {
    pub fn weight_count(&self) -> usize {
        self.in_dim * self.out_dim
    }

    pub fn param_count(&self) -> usize {
        self.weight_count() + self.out_dim
    }

    /// Flat range covering this layer's weights and biases.
    pub fn range(&self) -> std::ops::Range<usize> {
        self.weight_offset..self.bias_offset + self.out_dim
    }
}

/// Where a scalar parameter lives inside the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamLocation {
    Weight { layer: usize, row: usize, col: usize },
    Bias { layer: usize, index: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamLayout {
    layers: Vec<LayerLayout>,
    total: usize,
}

impl ParamLayout {
    /// Builds the layout for a chain of `(in_dim, out_dim)` pairs.
    pub fn from_dims(dims: &[(usize, usize)]) -> Self {
        let mut offset = 0;
        let layers = dims
            .iter()
            .map(|&(in_dim, out_dim)| {
                let l = LayerLayout {
                    in_dim,
                    out_dim,
                    weight_offset: offset,
                    bias_offset: offset + in_dim * out_dim,
                };
                offset += l.param_count();
                l
            })
            .collect();
        Self {
            layers,
            total: offset,
        }
    }

    pub fn layers(&self) -> &[LayerLayout] {
        &self.layers
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn locate(&self, flat: usize) -> Option<ParamLocation> {
        if flat >= self.total {
            return None;
        }
        let layer = self
            .layers
            .partition_point(|l| l.weight_offset <= flat)
            .checked_sub(1)?;
        let l = &self.layers[layer];
        if flat < l.bias_offset {
            let local = flat - l.weight_offset;
            Some(ParamLocation::Weight {
                layer,
                row: local / l.in_dim,
                col: local % l.in_dim,
            })
        } else {
            Some(ParamLocation::Bias {
                layer,
                index: flat - l.bias_offset,
            })
        }
    }

    pub fn flat_index(&self, loc: ParamLocation) -> Option<usize> {
        match loc {
            ParamLocation::Weight { layer, row, col } => {
                let l = self.layers.get(layer)?;
                (row < l.out_dim && col < l.in_dim).then(|| l.weight_offset + row * l.in_dim + col)
            }
            ParamLocation::Bias { layer, index } => {
                let l = self.layers.get(layer)?;
                (index < l.out_dim).then(|| l.bias_offset + index)
            }
        }
    }

    /// Layer that owns the given flat index.
    pub fn layer_of(&self, flat: usize) -> Option<usize> {
        self.locate(flat).map(|loc| match loc {
            ParamLocation::Weight { layer, .. } | ParamLocation::Bias { layer, .. } => layer,
        })
    }
}

/// Weights and biases of a single layer, unpacked from the flat store.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    /// Row-major `out_dim x in_dim`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Flat vector of every scalar parameter in a network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterStore {
    values: Vec<f64>,
    layout: ParamLayout,
}

impl ParameterStore {
    pub fn zeros(layout: ParamLayout) -> Self {
        Self {
            values: vec![0.0; layout.total()],
            layout,
        }
    }

    pub fn from_values(layout: ParamLayout, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.total() {
            return Err(Error::Shape(format!(
                "parameter vector has {} entries, layout expects {}",
                values.len(),
                layout.total()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Numeric(format!("parameter {i} is not finite")));
        }
        Ok(Self { values, layout })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn get(&self, loc: ParamLocation) -> Option<f64> {
        self.layout.flat_index(loc).map(|i| self.values[i])
    }

    pub fn layer_weights(&self, layer: usize) -> &[f64] {
        let l = &self.layout.layers[layer];
        &self.values[l.weight_offset..l.bias_offset]
    }

    pub fn layer_bias(&self, layer: usize) -> &[f64] {
        let l = &self.layout.layers[layer];
        &self.values[l.bias_offset..l.bias_offset + l.out_dim]
    }

    pub fn unflatten(&self) -> Vec<LayerParams> {
        (0..self.layout.layers.len())
            .map(|i| LayerParams {
                weights: self.layer_weights(i).to_vec(),
                bias: self.layer_bias(i).to_vec(),
            })
            .collect()
    }

    pub fn flatten(layout: ParamLayout, layers: &[LayerParams]) -> Result<Self> {
        if layers.len() != layout.layers.len() {
            return Err(Error::Shape(format!(
                "{} layer blocks for a layout with {} layers",
                layers.len(),
                layout.layers.len()
            )));
        }
        let mut values = Vec::with_capacity(layout.total());
        for (p, l) in layers.iter().zip(&layout.layers) {
            if p.weights.len() != l.weight_count() || p.bias.len() != l.out_dim {
                return Err(Error::Shape(format!(
                    "layer block {}x{} does not match {}x{}",
                    p.bias.len(),
                    p.weights.len() / p.bias.len().max(1),
                    l.out_dim,
                    l.in_dim
                )));
            }
            values.extend_from_slice(&p.weights);
            values.extend_from_slice(&p.bias);
        }
        Self::from_values(layout, values)
    }

    /// Number of positions where `self` and `other` differ bitwise.
    pub fn l0_distance(&self, other: &ParameterStore) -> usize {
        self.values
            .iter()
            .zip(&other.values)
            .filter(|(a, b)| a.to_bits() != b.to_bits())
            .count()
    }
}
