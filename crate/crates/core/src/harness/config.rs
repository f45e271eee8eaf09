use std::path::{Path, PathBuf};

use crate::ail::{AlgoMode, DiscriminatorConfig, ImitationConfig, RewardConfig};
use crate::envs::{EnvId, DEFAULT_IMAGE_SIZE};
use crate::observer::ObserverTrainConfig;
use crate::ppo::{PpoConfig, DEFAULT_HORIZON};
use crate::{Error, Result};

/// Every knob of one imitation run. Text form is `key = value` per line;
/// `#` starts a comment. Keys may be written with `_` or `-`.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub env: EnvId,
    pub image_size: usize,
    pub algo: AlgoMode,
    pub seed: u64,
    pub total_timesteps: u64,
    pub horizon: usize,
    pub demos: PathBuf,
    pub demo_count: usize,
    /// Evaluate whenever training crosses a multiple of this many steps.
    pub eval_interval: u64,
    pub eval_episodes: usize,
    pub ppo_epochs: usize,
    pub ppo_minibatch: usize,
    pub ppo_clip: f64,
    pub ppo_lr: f64,
    pub value_lr: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub entropy_coef: f64,
    pub disc_epochs: usize,
    pub disc_minibatch: usize,
    pub disc_lr: f64,
    pub reward_epsilon: f64,
    pub observer_epochs: usize,
    pub observer_minibatch: usize,
    pub observer_lr: f64,
    pub observer_replay: bool,
    /// Render frames even when the algorithm does not use them.
    pub render: bool,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let ppo = PpoConfig::default();
        let disc = DiscriminatorConfig::default();
        let obs = ObserverTrainConfig::default();
        Self {
            env: EnvId::Pendulum,
            image_size: DEFAULT_IMAGE_SIZE,
            algo: AlgoMode::VgaifoSo,
            seed: 0,
            total_timesteps: 500_000,
            horizon: DEFAULT_HORIZON,
            demos: PathBuf::from("demos.ifod"),
            demo_count: 10,
            eval_interval: DEFAULT_HORIZON as u64,
            eval_episodes: 10,
            ppo_epochs: ppo.epochs,
            ppo_minibatch: ppo.minibatch,
            ppo_clip: ppo.clip,
            ppo_lr: ppo.lr,
            value_lr: ppo.value_lr,
            gamma: ppo.gamma,
            gae_lambda: ppo.lambda,
            entropy_coef: ppo.entropy_coef,
            disc_epochs: disc.epochs,
            disc_minibatch: disc.minibatch,
            disc_lr: disc.lr,
            reward_epsilon: RewardConfig::default().epsilon,
            observer_epochs: obs.epochs,
            observer_minibatch: obs.minibatch,
            observer_lr: obs.lr,
            observer_replay: false,
            render: false,
            out: PathBuf::from("runs"),
        }
    }
}

/// Keys in echo order.
pub const CONFIG_KEYS: &[&str] = &[
    "env",
    "image_size",
    "algo",
    "seed",
    "total_timesteps",
    "horizon",
    "demos",
    "demo_count",
    "eval_interval",
    "eval_episodes",
    "ppo_epochs",
    "ppo_minibatch",
    "ppo_clip",
    "ppo_lr",
    "value_lr",
    "gamma",
    "gae_lambda",
    "entropy_coef",
    "disc_epochs",
    "disc_minibatch",
    "disc_lr",
    "reward_epsilon",
    "observer_epochs",
    "observer_minibatch",
    "observer_lr",
    "observer_replay",
    "render",
    "out",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("{key} = {value:?} is not valid")))
}

fn parse_bool(key: &str, value: &str) -> Result<bool> {
    match value {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::Config(format!("{key} = {value:?} is not a boolean"))),
    }
}

impl ExperimentConfig {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let v = value.trim();
        match key.as_str() {
            "env" => self.env = v.parse()?,
            "image_size" => self.image_size = parse(&key, v)?,
            "algo" => self.algo = v.parse()?,
            "seed" => self.seed = parse(&key, v)?,
            "total_timesteps" => self.total_timesteps = parse(&key, v)?,
            "horizon" => self.horizon = parse(&key, v)?,
            "demos" => self.demos = PathBuf::from(v),
            "demo_count" => self.demo_count = parse(&key, v)?,
            "eval_interval" => self.eval_interval = parse(&key, v)?,
            "eval_episodes" => self.eval_episodes = parse(&key, v)?,
            "ppo_epochs" => self.ppo_epochs = parse(&key, v)?,
            "ppo_minibatch" => self.ppo_minibatch = parse(&key, v)?,
            "ppo_clip" => self.ppo_clip = parse(&key, v)?,
            "ppo_lr" => self.ppo_lr = parse(&key, v)?,
            "value_lr" => self.value_lr = parse(&key, v)?,
            "gamma" => self.gamma = parse(&key, v)?,
            "gae_lambda" => self.gae_lambda = parse(&key, v)?,
            "entropy_coef" => self.entropy_coef = parse(&key, v)?,
            "disc_epochs" => self.disc_epochs = parse(&key, v)?,
            "disc_minibatch" => self.disc_minibatch = parse(&key, v)?,
            "disc_lr" => self.disc_lr = parse(&key, v)?,
            "reward_epsilon" => self.reward_epsilon = parse(&key, v)?,
            "observer_epochs" => self.observer_epochs = parse(&key, v)?,
            "observer_minibatch" => self.observer_minibatch = parse(&key, v)?,
            "observer_lr" => self.observer_lr = parse(&key, v)?,
            "observer_replay" => self.observer_replay = parse_bool(&key, v)?,
            "render" => self.render = parse_bool(&key, v)?,
            "out" => self.out = PathBuf::from(v),
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Result<String> {
        let key = key.trim().replace('-', "_");
        Ok(match key.as_str() {
            "env" => self.env.to_string(),
            "image_size" => self.image_size.to_string(),
            "algo" => self.algo.to_string(),
            "seed" => self.seed.to_string(),
            "total_timesteps" => self.total_timesteps.to_string(),
            "horizon" => self.horizon.to_string(),
            "demos" => self.demos.display().to_string(),
            "demo_count" => self.demo_count.to_string(),
            "eval_interval" => self.eval_interval.to_string(),
            "eval_episodes" => self.eval_episodes.to_string(),
            "ppo_epochs" => self.ppo_epochs.to_string(),
            "ppo_minibatch" => self.ppo_minibatch.to_string(),
            "ppo_clip" => self.ppo_clip.to_string(),
            "ppo_lr" => self.ppo_lr.to_string(),
            "value_lr" => self.value_lr.to_string(),
            "gamma" => self.gamma.to_string(),
            "gae_lambda" => self.gae_lambda.to_string(),
            "entropy_coef" => self.entropy_coef.to_string(),
            "disc_epochs" => self.disc_epochs.to_string(),
            "disc_minibatch" => self.disc_minibatch.to_string(),
            "disc_lr" => self.disc_lr.to_string(),
            "reward_epsilon" => self.reward_epsilon.to_string(),
            "observer_epochs" => self.observer_epochs.to_string(),
            "observer_minibatch" => self.observer_minibatch.to_string(),
            "observer_lr" => self.observer_lr.to_string(),
            "observer_replay" => self.observer_replay.to_string(),
            "render" => self.render.to_string(),
            "out" => self.out.display().to_string(),
            _ => return Err(Error::Config(format!("unknown key {key:?}"))),
        })
    }

    /// Applies `key = value` lines on top of `self`.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`, got {raw:?}", n + 1)))?;
            self.set(k, v).map_err(|e| Error::Config(format!("line {}: {e}", n + 1)))?;
        }
        Ok(())
    }

    /// Defaults, then the file, then the overrides in order: a flag beats
    /// the file, the file beats the default.
    pub fn resolve<'a>(file: Option<&Path>, overrides: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Self> {
        let mut cfg = Self::default();
        if let Some(path) = file {
            cfg.apply_text(&std::fs::read_to_string(path)?)?;
        }
        for (k, v) in overrides {
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("image_size", self.image_size as u64),
            ("total_timesteps", self.total_timesteps),
            ("horizon", self.horizon as u64),
            ("demo_count", self.demo_count as u64),
            ("eval_interval", self.eval_interval),
            ("eval_episodes", self.eval_episodes as u64),
            ("ppo_minibatch", self.ppo_minibatch as u64),
            ("disc_minibatch", self.disc_minibatch as u64),
            ("observer_minibatch", self.observer_minibatch as u64),
        ];
        for (k, v) in positive {
            if v == 0 {
                return Err(Error::Config(format!("{k} must be positive")));
            }
        }
        if !(self.reward_epsilon > 0.0 && self.reward_epsilon < 0.5) {
            return Err(Error::Config("reward_epsilon must lie in (0, 0.5)".into()));
        }
        Ok(())
    }

    /// The full configuration as `key = value` lines.
    pub fn to_text(&self) -> String {
        CONFIG_KEYS.iter().map(|k| format!("{k} = {}\n", self.get(k).expect("listed key"))).collect()
    }

    pub fn imitation(&self) -> ImitationConfig {
        ImitationConfig {
            mode: self.algo,
            horizon: self.horizon,
            ppo: PpoConfig {
                epochs: self.ppo_epochs,
                minibatch: self.ppo_minibatch,
                clip: self.ppo_clip,
                lr: self.ppo_lr,
                value_lr: self.value_lr,
                gamma: self.gamma,
                lambda: self.gae_lambda,
                entropy_coef: self.entropy_coef,
                normalize_advantages: true,
            },
            discriminator: DiscriminatorConfig {
                epochs: self.disc_epochs,
                minibatch: self.disc_minibatch,
                lr: self.disc_lr,
            },
            observer: ObserverTrainConfig {
                epochs: self.observer_epochs,
                minibatch: self.observer_minibatch,
                lr: self.observer_lr,
            },
            observer_replay: self.observer_replay,
            reward: RewardConfig { epsilon: self.reward_epsilon },
            force_render: self.render,
        }
    }

    /// `<out>/<algo>/<seed>`.
    pub fn run_dir(&self) -> PathBuf {
        self.out.join(self.algo.as_str()).join(self.seed.to_string())
    }
}
