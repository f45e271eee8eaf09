//! Imitation from observation at desk scale.
//!
//! The crate bundles a small reverse-mode network core ([`diffnet`]), two
//! deterministic control environments with a binary rasterizer ([`envs`]),
//! an on-policy PPO learner ([`ppo`]), the self-supervised state observer
//! ([`observer`]), the adversarial machinery shared by GAIfO, VGAIfO and
//! VGAIfO-SO ([`ail`]), demonstration files ([`demos`]) and an experiment
//! harness ([`harness`]).
//!
//! The network core is generic over the scalar type; everything above it
//! runs in `f64` through the aliases exported here.

pub mod ail;
pub mod demos;
pub mod diffnet;
pub mod envs;
mod error;
pub mod harness;
pub mod observer;
pub mod ppo;
pub mod scalar;
pub mod seed;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// `f64` tensor, the working precision of every learner in the crate.
pub type Tensor = diffnet::Tensor<f64>;
/// `f64` network.
pub type Network = diffnet::Network<f64>;
/// `f64` Adam optimizer state.
pub type AdamState = diffnet::AdamState<f64>;
/// Forward activation record for an `f64` network.
pub type ForwardCache = diffnet::ForwardCache<f64>;

pub type Tensor32 = diffnet::Tensor<f32>;
pub type Network32 = diffnet::Network<f32>;
pub type AdamState32 = diffnet::AdamState<f32>;
