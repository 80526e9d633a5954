//! Dense feedforward-network engine: parameters, forward and backward
//! passes, optimizers, checkpoints.

pub mod checkpoint;
mod matrix;
mod network;
mod optim;
mod params;
pub mod train;

pub use matrix::Matrix;
pub use network::{
    argmax, mean_cross_entropy, softmax_rows, Activation, GradientRecord, GradientSource,
    LayerSpec, Network, NetworkShape, ParamMask, LEAKY_SLOPE, PROB_FLOOR,
};
pub(crate) use network::cross_entropy_head;
pub use optim::{OptimizerKind, OptimizerSpec, OptimizerState};
pub use params::{LayerLayout, LayerParams, ParamLayout, ParamLocation, ParameterStore};
