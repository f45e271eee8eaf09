use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use super::{DemoFile, DemoTrajectory};
use crate::diffnet::checkpoint::{load_network, save_network};
use crate::envs::Environment;
use crate::ppo::{
    collect_rollout, compute_gae, episode_seed, evaluate_policy, ppo_update, Policy, PpoConfig, PpoOptimizers,
    ValueFunction,
};
use crate::seed::{derive_seed, rng_for, tag};
use crate::{Error, Result};

const POLICY_FILE: &str = "policy.ifnw";
const VALUE_FILE: &str = "value.ifnw";
const MANIFEST_FILE: &str = "manifest.txt";

/// PPO settings for training experts on the task reward.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpertConfig {
    pub ppo: PpoConfig,
    pub horizon: usize,
    /// Multiplies the task reward before GAE.
    pub reward_scale: f64,
    /// Snapshot evaluation period, in iterations.
    pub eval_every: usize,
    pub eval_episodes: usize,
}

impl Default for ExpertConfig {
    fn default() -> Self {
        Self {
            ppo: PpoConfig { gamma: 0.9, value_lr: 1e-3, ..PpoConfig::default() },
            horizon: crate::ppo::DEFAULT_HORIZON,
            reward_scale: 0.1,
            eval_every: 5,
            eval_episodes: 10,
        }
    }
}

/// A trained expert: networks plus the manifest describing them.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpertCheckpoint {
    pub env_id: String,
    pub policy: Policy,
    pub value: ValueFunction,
    pub training_timesteps: u64,
    /// Iteration whose snapshot was kept.
    pub selected_iteration: u64,
    /// `evaluate_policy(policy, env, eval_episodes, eval_seed)`.
    pub final_eval_return: f64,
    pub eval_seed: u64,
    pub eval_episodes: usize,
}

impl ExpertCheckpoint {
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        save_network(&self.policy.mean_net, dir.join(POLICY_FILE))?;
        save_network(&self.value.net, dir.join(VALUE_FILE))?;
        let log_std: Vec<String> = self.policy.log_std().iter().map(f64::to_string).collect();
        let manifest = format!(
            "env_id = {}\ntraining_timesteps = {}\nselected_iteration = {}\nfinal_eval_return = {}\neval_seed = {}\neval_episodes = {}\nlog_std = {}\n",
            self.env_id,
            self.training_timesteps,
            self.selected_iteration,
            self.final_eval_return,
            self.eval_seed,
            self.eval_episodes,
            log_std.join(","),
        );
        fs::write(dir.join(MANIFEST_FILE), manifest)?;
        Ok(())
    }

    pub fn load(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let text = fs::read_to_string(dir.join(MANIFEST_FILE))?;
        let mut fields = BTreeMap::new();
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) =
                line.split_once('=').ok_or_else(|| Error::Config(format!("manifest line without '=': {line:?}")))?;
            fields.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| fields.get(k).ok_or_else(|| Error::Config(format!("manifest lacks {k}")));
        fn num<T: std::str::FromStr>(k: &str, v: &str) -> Result<T> {
            v.parse().map_err(|_| Error::Config(format!("manifest {k} = {v:?} is not a number")))
        }
        let log_std =
            get("log_std")?.split(',').map(|v| num::<f64>("log_std", v.trim())).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            env_id: get("env_id")?.clone(),
            policy: Policy::from_parts(load_network(dir.join(POLICY_FILE))?, log_std)?,
            value: ValueFunction { net: load_network(dir.join(VALUE_FILE))? },
            training_timesteps: num("training_timesteps", get("training_timesteps")?)?,
            selected_iteration: num("selected_iteration", get("selected_iteration")?)?,
            final_eval_return: num("final_eval_return", get("final_eval_return")?)?,
            eval_seed: num("eval_seed", get("eval_seed")?)?,
            eval_episodes: num("eval_episodes", get("eval_episodes")?)?,
        })
    }
}

/// PPO on the environment's own reward. Every `eval_every` iterations the
/// policy is scored on a selection seed and the best snapshot is kept; the
/// manifest return is then measured on a separate evaluation seed.
pub fn train_expert(
    env: &dyn Environment,
    total_timesteps: u64,
    seed: u64,
    cfg: &ExpertConfig,
) -> Result<ExpertCheckpoint> {
    if cfg.horizon == 0 || cfg.eval_every == 0 || cfg.eval_episodes == 0 {
        return Err(Error::Precondition("horizon, eval_every and eval_episodes must be positive".into()));
    }
    let spec = env.spec();
    let mut rng = rng_for(seed, &[tag::NETWORK_INIT]);
    let mut policy = Policy::new(spec.state_dim, spec.action_dim, &mut rng)?;
    let mut value = ValueFunction::new(spec.state_dim, &mut rng)?;
    let mut opt = PpoOptimizers::new(&policy, &value, &cfg.ppo);
    let selection_seed = derive_seed(seed, &[tag::EVALUATION, 0]);
    let eval_seed = derive_seed(seed, &[tag::EVALUATION, 1]);

    let iterations = total_timesteps.div_ceil(cfg.horizon as u64).max(1);
    let mut best =
        (evaluate_policy(&policy, env, cfg.eval_episodes, selection_seed)?, 0u64, policy.clone(), value.clone());
    for it in 0..iterations {
        let mut batch =
            collect_rollout(&policy, &value, env, cfg.horizon, derive_seed(seed, &[tag::ROLLOUT, it]), false)?
                .with_task_rewards();
        for r in &mut batch.rewards {
            *r *= cfg.reward_scale;
        }
        let gae = compute_gae(&batch, cfg.ppo.gamma, cfg.ppo.lambda)?;
        let mut rng = rng_for(seed, &[tag::PPO_SHUFFLE, it]);
        ppo_update(&mut policy, &mut value, &mut opt, &batch, &gae, &cfg.ppo, &mut rng)?;
        let done = it + 1;
        if done % cfg.eval_every as u64 == 0 || done == iterations {
            let score = evaluate_policy(&policy, env, cfg.eval_episodes, selection_seed)?;
            if score > best.0 {
                best = (score, done, policy.clone(), value.clone());
            }
        }
    }
    let (_, selected_iteration, policy, value) = best;
    Ok(ExpertCheckpoint {
        env_id: spec.env_id.clone(),
        final_eval_return: evaluate_policy(&policy, env, cfg.eval_episodes, eval_seed)?,
        policy,
        value,
        training_timesteps: iterations * cfg.horizon as u64,
        selected_iteration,
        eval_seed,
        eval_episodes: cfg.eval_episodes,
    })
}

/// Mean-action expert episodes, each starting from the reset used by
/// evaluation episode `k` under `seed`. Frames are stored raw (stacking is
/// the reader's job) along with the exposed states.
pub fn record_demos(
    checkpoint: &ExpertCheckpoint,
    env: &dyn Environment,
    n_traj: usize,
    seed: u64,
) -> Result<DemoFile> {
    let spec = env.spec();
    if checkpoint.env_id != spec.env_id {
        return Err(Error::EnvMismatch { expected: checkpoint.env_id.clone(), found: spec.env_id.clone() });
    }
    let mut trajectories = Vec::with_capacity(n_traj);
    for k in 0..n_traj {
        let mut state = env.reset(episode_seed(seed, k));
        let mut frames = Vec::new();
        let mut states = Vec::new();
        loop {
            let s = env.observe(&state);
            frames.push(env.render(&state));
            let step = env.step(&state, &checkpoint.policy.mean(&s)?)?;
            states.push(s);
            if step.done {
                break;
            }
            state = step.next;
        }
        trajectories.push(DemoTrajectory { frames, states: Some(states) });
    }
    Ok(DemoFile { env_id: spec.env_id.clone(), image_size: spec.image_size, state_dim: spec.state_dim, trajectories })
}
