//! Deterministic continuous-control environments. Each exposes a
//! low-dimensional proprioceptive state to learners, a task reward that only
//! evaluation code reads, and a binary G x G rendering of the scene.

mod frame;
mod pendulum;
mod reacher;

use std::fmt;
use std::str::FromStr;

pub use frame::{bresenham, stack, stack_batch, Frame, FrameStack, StackedObservation, STACK_DEPTH};
pub use pendulum::Pendulum;
pub use reacher::PointReacher;

use crate::{Error, Result};

pub const DEFAULT_IMAGE_SIZE: usize = 32;

#[derive(Clone, Debug, PartialEq)]
pub struct EnvSpec {
    pub env_id: String,
    pub state_dim: usize,
    pub action_dim: usize,
    pub action_low: Vec<f64>,
    pub action_high: Vec<f64>,
    pub dt: f64,
    pub max_episode_steps: usize,
    pub image_size: usize,
}

impl EnvSpec {
    pub fn validate(&self) -> Result<()> {
        if self.action_low.len() != self.action_dim || self.action_high.len() != self.action_dim {
            return Err(Error::Config("action bounds must match action_dim".into()));
        }
        if self.action_low.iter().zip(&self.action_high).any(|(lo, hi)| lo >= hi) {
            return Err(Error::Config("action_low must be below action_high".into()));
        }
        if self.image_size < 16 {
            return Err(Error::Config(format!("image size must be at least 16, got {}", self.image_size)));
        }
        if self.max_episode_steps == 0 {
            return Err(Error::Config("max_episode_steps must be positive".into()));
        }
        Ok(())
    }

    pub fn clip_action(&self, action: &[f64]) -> Vec<f64> {
        action
            .iter()
            .zip(self.action_low.iter().zip(&self.action_high))
            .map(|(&a, (&lo, &hi))| a.clamp(lo, hi))
            .collect()
    }
}

/// Physical state of an environment plus the step counter. The physical
/// vector is private to the environment; learners see [`Environment::observe`].
#[derive(Clone, Debug, PartialEq)]
pub struct EnvState {
    pub physical: Vec<f64>,
    pub step_index: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub next: EnvState,
    /// Task reward for evaluation and logging only.
    pub eval_reward: f64,
    pub done: bool,
}

pub trait Environment: Send + Sync {
    fn spec(&self) -> &EnvSpec;

    /// Initial state drawn from the environment's start distribution.
    fn reset(&self, seed: u64) -> EnvState;

    /// Advances one `dt`. Actions are clipped to the bounds internally;
    /// episodes end exactly at `max_episode_steps`.
    fn step(&self, state: &EnvState, action: &[f64]) -> Result<Step>;

    /// Proprioceptive state exposed to learners.
    fn observe(&self, state: &EnvState) -> Vec<f64>;

    fn render(&self, state: &EnvState) -> Frame;
}

pub(crate) fn check_step_inputs(spec: &EnvSpec, state: &EnvState, action: &[f64]) -> Result<()> {
    if action.len() != spec.action_dim {
        return Err(Error::Shape(format!(
            "{} expects {} action dims, got {}",
            spec.env_id,
            spec.action_dim,
            action.len()
        )));
    }
    if !action.iter().all(|a| a.is_finite()) {
        return Err(Error::NonFinite(format!("{} action", spec.env_id)));
    }
    if !state.physical.iter().all(|s| s.is_finite()) {
        return Err(Error::NonFinite(format!("{} state", spec.env_id)));
    }
    Ok(())
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    use std::f64::consts::PI;
    let wrapped = (theta + PI).rem_euclid(2.0 * PI) - PI;
    if wrapped <= -PI {
        wrapped + 2.0 * PI
    } else {
        wrapped
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EnvId {
    Pendulum,
    Reacher,
}

impl EnvId {
    pub fn as_str(&self) -> &'static str {
        match self {
            EnvId::Pendulum => "pendulum",
            EnvId::Reacher => "reacher",
        }
    }
}

impl fmt::Display for EnvId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnvId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pendulum" => Ok(EnvId::Pendulum),
            "reacher" => Ok(EnvId::Reacher),
            other => Err(Error::UnknownEnv(other.to_string())),
        }
    }
}

pub fn make_env(id: EnvId, image_size: usize) -> Result<Box<dyn Environment>> {
    Ok(match id {
        EnvId::Pendulum => Box::new(Pendulum::new(image_size)?),
        EnvId::Reacher => Box::new(PointReacher::new(image_size)?),
    })
}
