use serde::{Deserialize, Serialize};

use crate::data::FeatureScaling;
use crate::nn::{Activation, LayerSpec, Matrix, Network, NetworkShape};
use crate::{Error, Result};

/// Per-epoch generator training record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneratorEpoch {
    pub epoch: usize,
    /// Combined objective `ce_source - eta * ce_unlearned`.
    pub loss: f64,
    pub ce_source: f64,
    pub ce_unlearned: f64,
}

/// Dense autoencoder producing bounded additive noise:
/// `input -> hidden -> bottleneck -> hidden -> input`, leaky-ReLU encoder,
/// ReLU decoder and a tanh output scaled by `delta_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    net: Network,
    delta_max: f64,
    pub loss_trace: Vec<GeneratorEpoch>,
}

impl Generator {
    pub fn shape(input_dim: usize, hidden: usize, bottleneck: usize) -> NetworkShape {
        let layer = |out_dim, activation| LayerSpec {
            out_dim,
            activation,
        };
        NetworkShape {
            input_dim,
            layers: vec![
                layer(hidden, Activation::LeakyRelu),
                layer(bottleneck, Activation::LeakyRelu),
                layer(hidden, Activation::Relu),
                layer(input_dim, Activation::Tanh),
            ],
        }
    }

    pub fn new(input_dim: usize, hidden: usize, bottleneck: usize, delta_max: f64, seed: u64) -> Result<Self> {
        let net = Network::init_random(Self::shape(input_dim, hidden, bottleneck), seed)?;
        Self::from_network(net, delta_max)
    }

    /// Generator whose every weight and bias is zero; its noise is zero.
    pub fn zeros(input_dim: usize, hidden: usize, bottleneck: usize, delta_max: f64) -> Result<Self> {
        let net = Network::zeros(Self::shape(input_dim, hidden, bottleneck))?;
        Self::from_network(net, delta_max)
    }

    pub fn from_network(net: Network, delta_max: f64) -> Result<Self> {
        if !(delta_max >= 0.0 && delta_max.is_finite()) {
            return Err(Error::Config(format!("delta_max must be >= 0, got {delta_max}")));
        }
        if net.shape().output_dim() != net.input_dim() {
            return Err(Error::Shape("generator output must match its input width".into()));
        }
        if net.shape().layers.last().map(|l| l.activation) != Some(Activation::Tanh) {
            return Err(Error::Shape("generator output layer must be tanh".into()));
        }
        Ok(Self {
            net,
            delta_max,
            loss_trace: Vec::new(),
        })
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub(crate) fn network_mut(&mut self) -> &mut Network {
        &mut self.net
    }

    pub fn delta_max(&self) -> f64 {
        self.delta_max
    }

    pub fn input_dim(&self) -> usize {
        self.net.input_dim()
    }

    /// Additive noise for each row, every entry in `[-delta_max, delta_max]`.
    pub fn noise(&self, x: &Matrix) -> Result<Matrix> {
        let mut out = self.net.logits(x)?;
        for v in out.as_mut_slice() {
            *v *= self.delta_max;
        }
        Ok(out)
    }
}

/// Adds the generator's noise to `x`, clamping to `[0, 1]` for unit-interval
/// data.
pub fn perturb_data(gen: &Generator, x: &Matrix, scaling: FeatureScaling) -> Result<Matrix> {
    let noise = gen.noise(x)?;
    let mut out = x.clone();
    for (o, n) in out.as_mut_slice().iter_mut().zip(noise.as_slice()) {
        *o += n;
        if scaling == FeatureScaling::UnitInterval {
            *o = o.clamp(0.0, 1.0);
        }
    }
    Ok(out)
}
