use rand::Rng;

use super::frame::{bresenham, Canvas};
use super::{check_step_inputs, wrap_angle, EnvSpec, EnvState, Environment, Frame, Step};
use crate::seed::{rng_for, tag};
use crate::Result;

const GRAVITY: f64 = 10.0;
const MASS: f64 = 1.0;
const LENGTH: f64 = 1.0;
const MAX_SPEED: f64 = 8.0;
const MAX_TORQUE: f64 = 2.0;

/// Torque-limited pendulum with the angle measured from upright.
///
/// Physical state `(theta, theta_dot)` with `theta` unwrapped; learners see
/// `(cos theta, sin theta, theta_dot)`. Episodes start near upright:
/// `theta ~ U[-0.5, 0.5]`, `theta_dot ~ U[-0.1, 0.1]`.
#[derive(Clone, Debug)]
pub struct Pendulum {
    spec: EnvSpec,
}

impl Pendulum {
    pub fn new(image_size: usize) -> Result<Self> {
        let spec = EnvSpec {
            env_id: "pendulum".into(),
            state_dim: 3,
            action_dim: 1,
            action_low: vec![-MAX_TORQUE],
            action_high: vec![MAX_TORQUE],
            dt: 0.05,
            max_episode_steps: 200,
            image_size,
        };
        spec.validate()?;
        Ok(Self { spec })
    }

    pub fn state(theta: f64, theta_dot: f64) -> EnvState {
        EnvState { physical: vec![theta, theta_dot], step_index: 0 }
    }

    /// `-(theta^2 + 0.1 theta_dot^2 + 0.001 u^2)` with `theta` wrapped.
    pub fn reward(theta: f64, theta_dot: f64, torque: f64) -> f64 {
        let th = wrap_angle(theta);
        -(th * th + 0.1 * theta_dot * theta_dot + 0.001 * torque * torque)
    }

    /// Angular acceleration under gravity and torque `u`.
    pub fn angular_acceleration(theta: f64, torque: f64) -> f64 {
        3.0 * GRAVITY / (2.0 * LENGTH) * theta.sin() + 3.0 / (MASS * LENGTH * LENGTH) * torque
    }
}

impl Environment for Pendulum {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&self, seed: u64) -> EnvState {
        let mut rng = rng_for(seed, &[tag::RESET]);
        let theta = rng.gen_range(-0.5..=0.5);
        let theta_dot = rng.gen_range(-0.1..=0.1);
        Self::state(theta, theta_dot)
    }

    fn step(&self, state: &EnvState, action: &[f64]) -> Result<Step> {
        check_step_inputs(&self.spec, state, action)?;
        let (theta, theta_dot) = (state.physical[0], state.physical[1]);
        let u = self.spec.clip_action(action)[0];
        let eval_reward = Self::reward(theta, theta_dot, u);
        // semi-implicit Euler: velocity first, then position with the new velocity
        let new_dot = (theta_dot + Self::angular_acceleration(theta, u) * self.spec.dt).clamp(-MAX_SPEED, MAX_SPEED);
        let new_theta = theta + new_dot * self.spec.dt;
        let step_index = state.step_index + 1;
        Ok(Step {
            next: EnvState { physical: vec![new_theta, new_dot], step_index },
            eval_reward,
            done: step_index == self.spec.max_episode_steps,
        })
    }

    fn observe(&self, state: &EnvState) -> Vec<f64> {
        let theta = wrap_angle(state.physical[0]);
        vec![theta.cos(), theta.sin(), state.physical[1].clamp(-MAX_SPEED, MAX_SPEED)]
    }

    /// Rod from the image centre to `centre + round(0.4 G) (sin theta, -cos theta)`.
    fn render(&self, state: &EnvState) -> Frame {
        let g = self.spec.image_size;
        let centre = (g / 2) as i64;
        let length = (0.4 * g as f64).round();
        let theta = state.physical[0];
        let tip_x = centre + (length * theta.sin()).round() as i64;
        let tip_y = centre - (length * theta.cos()).round() as i64;
        let mut canvas = Canvas::new(g);
        for (x, y) in bresenham(centre, centre, tip_x, tip_y) {
            canvas.set(x, y);
        }
        canvas.finish()
    }
}
