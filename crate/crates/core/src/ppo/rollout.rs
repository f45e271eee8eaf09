use crate::envs::{Environment, FrameStack, StackedObservation};
use crate::seed::{derive_seed, rng_for, tag};
use crate::{Error, Result};

use super::{Policy, ValueFunction};

/// One horizon of on-policy experience.
///
/// `rewards` stays empty until a training signal is attached: the task
/// reward in RL mode, discriminator rewards during imitation. Environment
/// rewards live in `eval_rewards`, which only logging reads.
#[derive(Clone, Debug, Default)]
pub struct RolloutBatch {
    /// Exposed proprioceptive states `s_t`.
    pub states: Vec<Vec<f64>>,
    /// Stacked frames `O_t`; empty when rendering was disabled.
    pub observations: Vec<StackedObservation>,
    /// Unclipped sampled actions.
    pub actions: Vec<Vec<f64>>,
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
    pub rewards: Vec<f64>,
    /// True where the step ends its episode.
    pub dones: Vec<bool>,
    /// Value of the state following the last step, used when that step did
    /// not end an episode.
    pub last_value: f64,
    pub eval_rewards: Vec<f64>,
}

impl RolloutBatch {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Number of steps that ended an episode.
    pub fn episode_boundaries(&self) -> usize {
        self.dones.iter().filter(|&&d| d).count()
    }

    /// Half-open index ranges of the contiguous episode pieces in the batch.
    pub fn segments(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut start = 0;
        for (t, &done) in self.dones.iter().enumerate() {
            if done {
                out.push((start, t + 1));
                start = t + 1;
            }
        }
        if start < self.len() {
            out.push((start, self.len()));
        }
        out
    }

    /// Attaches the environment task reward as the training reward.
    pub fn with_task_rewards(mut self) -> Self {
        self.rewards = self.eval_rewards.clone();
        self
    }

    /// Training batch for imitation: step `t` of each segment is rewarded by
    /// the pair `(x_t, x_{t+1})`; the last step of each segment has no
    /// successor in the batch and is dropped. `pair_rewards` lists the pair
    /// rewards segment by segment. Observations are not carried over.
    pub fn with_pair_rewards(&self, pair_rewards: &[f64]) -> Result<Self> {
        let segments = self.segments();
        let expected: usize = segments.iter().map(|(a, b)| b - a - 1).sum();
        if pair_rewards.len() != expected {
            return Err(Error::Shape(format!("expected {expected} pair rewards, got {}", pair_rewards.len())));
        }
        let mut out = RolloutBatch::default();
        let mut k = 0;
        for &(start, end) in &segments {
            for t in start..end - 1 {
                out.states.push(self.states[t].clone());
                out.actions.push(self.actions[t].clone());
                out.log_probs.push(self.log_probs[t]);
                out.values.push(self.values[t]);
                out.eval_rewards.push(self.eval_rewards[t]);
                out.rewards.push(pair_rewards[k]);
                // the retained tail of a finished episode terminates it
                out.dones.push(t == end - 2 && self.dones[end - 1]);
                k += 1;
            }
        }
        // an unfinished final segment bootstraps from its dropped last state
        if let Some(&(_, end)) = segments.last() {
            out.last_value = if self.dones[end - 1] { 0.0 } else { self.values[end - 1] };
        }
        Ok(out)
    }
}

/// Runs `policy` for `horizon` steps, resetting at every episode end.
///
/// Actions are sampled from the Gaussian and clipped only inside the
/// environment; log-probabilities refer to the unclipped sample. A rollout
/// starts a fresh episode and may stop mid-episode, in which case
/// `last_value` bootstraps from the following state.
pub fn collect_rollout(
    policy: &Policy,
    value: &ValueFunction,
    env: &dyn Environment,
    horizon: usize,
    seed: u64,
    render: bool,
) -> Result<RolloutBatch> {
    if horizon == 0 {
        return Err(Error::Precondition("horizon must be positive".into()));
    }
    let mut rng = rng_for(seed, &[tag::ROLLOUT]);
    let mut batch = RolloutBatch::default();
    let mut episode = 0u64;
    let mut state = env.reset(derive_seed(seed, &[tag::RESET, episode]));
    let mut frames = FrameStack::new();
    for t in 0..horizon {
        let s = env.observe(&state);
        if render {
            if state.step_index == 0 {
                frames.clear();
            }
            frames.push(env.render(&state));
            batch.observations.push(frames.observation()?);
        }
        let (action, logp) = policy.sample(&s, &mut rng)?;
        if !action.iter().all(|a| a.is_finite()) || !logp.is_finite() {
            return Err(Error::NonFinite("policy output during rollout".into()));
        }
        let v = value.value(&s)?;
        let step = env.step(&state, &action)?;
        batch.states.push(s);
        batch.actions.push(action);
        batch.log_probs.push(logp);
        batch.values.push(v);
        batch.dones.push(step.done);
        batch.eval_rewards.push(step.eval_reward);
        if step.done {
            episode += 1;
            state = env.reset(derive_seed(seed, &[tag::RESET, episode]));
        } else {
            state = step.next;
        }
        if t + 1 == horizon {
            batch.last_value = if step.done { 0.0 } else { value.value(&env.observe(&state))? };
        }
    }
    Ok(batch)
}
