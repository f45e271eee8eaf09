//! Adversarial imitation from observation: transition pairs, the pair
//! discriminator, reward synthesis and the per-iteration loop shared by
//! GAIfO, VGAIfO and VGAIfO-SO.
//!
//! The discriminator labels imitator pairs 1 and expert pairs 0 and
//! minimizes `-(E_I[ln D] + E_E[ln(1 - D)])`; the generator is rewarded with
//! `-ln D`, clamped to `[0, -ln 1e-6]`.

mod discriminator;
mod iteration;
mod pairs;

pub use discriminator::{
    discriminator_loss, discriminator_update, synthesize_reward, synthesize_rewards, Discriminator,
    DiscriminatorConfig, RewardConfig,
};
pub use iteration::{ImitationConfig, Imitator, IterationStats};
pub use pairs::{demo_pairs, image_pairs, make_pairs, rollout_pairs, state_pairs, AlgoMode, PairSet, TransitionPair};
