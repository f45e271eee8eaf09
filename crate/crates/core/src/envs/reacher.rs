use rand::Rng;

use super::frame::Canvas;
use super::{check_step_inputs, EnvSpec, EnvState, Environment, Frame, Step};
use crate::seed::{rng_for, tag};
use crate::Result;

const FORCE_GAIN: f64 = 4.0;
const DAMPING: f64 = 2.0;
const MAX_SPEED: f64 = 2.0;
/// Fixed goal in the unit box.
pub const TARGET: [f64; 2] = [0.5, 0.5];

/// Damped point mass pushed around the unit box toward a fixed target.
///
/// State `(x, y, x_dot, y_dot)` is both physical and exposed. Walls stop the
/// mass and zero the velocity component into the wall.
#[derive(Clone, Debug)]
pub struct PointReacher {
    spec: EnvSpec,
}

impl PointReacher {
    pub fn new(image_size: usize) -> Result<Self> {
        let spec = EnvSpec {
            env_id: "reacher".into(),
            state_dim: 4,
            action_dim: 2,
            action_low: vec![-1.0, -1.0],
            action_high: vec![1.0, 1.0],
            dt: 0.05,
            max_episode_steps: 100,
            image_size,
        };
        spec.validate()?;
        Ok(Self { spec })
    }

    /// `-(|p - target| + 0.01 |u|^2)`.
    pub fn reward(position: [f64; 2], force: &[f64]) -> f64 {
        let dist = ((position[0] - TARGET[0]).powi(2) + (position[1] - TARGET[1]).powi(2)).sqrt();
        -(dist + 0.01 * force.iter().map(|f| f * f).sum::<f64>())
    }

    fn to_pixel(&self, value: f64, span: usize) -> i64 {
        (value.clamp(0.0, 1.0) * span as f64).round() as i64
    }
}

impl Environment for PointReacher {
    fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    fn reset(&self, seed: u64) -> EnvState {
        let mut rng = rng_for(seed, &[tag::RESET]);
        let x = rng.gen_range(0.0..=1.0);
        let y = rng.gen_range(0.0..=1.0);
        EnvState { physical: vec![x, y, 0.0, 0.0], step_index: 0 }
    }

    fn step(&self, state: &EnvState, action: &[f64]) -> Result<Step> {
        check_step_inputs(&self.spec, state, action)?;
        let force = self.spec.clip_action(action);
        let p = &state.physical;
        let eval_reward = Self::reward([p[0], p[1]], &force);
        let mut next = vec![0.0; 4];
        for axis in 0..2 {
            let accel = FORCE_GAIN * force[axis] - DAMPING * p[2 + axis];
            let mut vel = (p[2 + axis] + accel * self.spec.dt).clamp(-MAX_SPEED, MAX_SPEED);
            let mut pos = p[axis] + vel * self.spec.dt;
            if !(0.0..=1.0).contains(&pos) {
                pos = pos.clamp(0.0, 1.0);
                vel = 0.0;
            }
            next[axis] = pos;
            next[2 + axis] = vel;
        }
        let step_index = state.step_index + 1;
        Ok(Step {
            next: EnvState { physical: next, step_index },
            eval_reward,
            done: step_index == self.spec.max_episode_steps,
        })
    }

    fn observe(&self, state: &EnvState) -> Vec<f64> {
        state.physical.clone()
    }

    /// 2x2 square for the mass, single pixel for the target; image y grows downward.
    fn render(&self, state: &EnvState) -> Frame {
        let g = self.spec.image_size;
        let mut canvas = Canvas::new(g);
        let tx = self.to_pixel(TARGET[0], g - 1);
        let ty = self.to_pixel(1.0 - TARGET[1], g - 1);
        canvas.set(tx, ty);
        let ax = self.to_pixel(state.physical[0], g - 2);
        let ay = self.to_pixel(1.0 - state.physical[1], g - 2);
        for (dx, dy) in [(0, 0), (1, 0), (0, 1), (1, 1)] {
            canvas.set(ax + dx, ay + dy);
        }
        canvas.finish()
    }
}
