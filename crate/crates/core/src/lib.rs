//! Fine-grained parameter-perturbation machine unlearning on a small dense
//! network engine.
//!
//! The crate is organised bottom-up:
//!
//! - [`nn`]: dense feedforward networks with explicit backward passes,
//!   per-scalar parameter access and masked gradients.
//! - [`data`]: synthetic blobs, IDX files and seeded unlearn/remain splits.
//! - [`unlearn`]: sensitivity scoring, Top-K / Random-k / mixed selection,
//!   multiplicative perturbation, JS-regularised fine-tuning and the EU-K,
//!   CF-K and retrain baselines.
//! - [`metrics`]: accuracy, forgetting rate, memory retention rate,
//!   similarity and acceleration ratio.
//! - [`degree`]: a bounded perturbation generator trained against a frozen
//!   (source, unlearned) model pair, reporting the unlearning degree.
//! - [`experiment`]: config-driven orchestration and report files.

pub mod data;
pub mod degree;
mod error;
pub mod experiment;
pub mod metrics;
pub mod nn;
pub mod unlearn;

pub use error::{Error, Result};
