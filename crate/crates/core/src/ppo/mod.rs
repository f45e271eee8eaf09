//! On-policy generator training: Gaussian policy over the imitator's true
//! proprioceptive state, a state-value critic, GAE, and clipped-surrogate
//! PPO updates.
//!
//! Defaults are desk-scale choices: horizon 2048, 10 epochs of minibatch 64,
//! clip 0.2, Adam at 3e-4, no entropy bonus. The learner has no KL guard;
//! a diverging update is only caught when a loss turns non-finite.

mod eval;
mod gae;
mod policy;
mod rollout;
mod update;

#[allow(unused_imports)]
pub(crate) use eval::episode_seed;
pub use eval::evaluate_policy;
pub use gae::{compute_gae, normalize_advantages, GaeOutput};
pub use policy::{Policy, ValueFunction, LOG_STD_INIT, LOG_STD_MAX, LOG_STD_MIN};
pub use rollout::{collect_rollout, RolloutBatch};
pub use update::{clipped_surrogate, ppo_update, PpoConfig, PpoOptimizers, PpoStats};

pub const DEFAULT_HORIZON: usize = 2048;
