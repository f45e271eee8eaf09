//! Reverse-mode differentiable building blocks shared by every learned
//! function: dense and strided 3x3 convolution layers, ReLU/tanh, losses,
//! Adam, finite-difference checks and `IFNW` checkpoints.

mod adam;
pub mod checkpoint;
pub mod gradcheck;
mod layer;
pub mod loss;
mod network;
mod tensor;

pub use adam::{adam_step, AdamState};
pub use layer::LayerSpec;
pub use loss::{bce_with_logits, gaussian_logprob, gaussian_logprob_grad, mse_loss, sigmoid, softplus};
pub use network::{ForwardCache, Network, NetworkBuilder};
pub use tensor::Tensor;
