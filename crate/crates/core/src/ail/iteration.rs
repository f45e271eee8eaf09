use super::{
    demo_pairs, discriminator_update, rollout_pairs, synthesize_rewards, AlgoMode, Discriminator, DiscriminatorConfig,
    RewardConfig,
};
use crate::demos::DemoView;
use crate::envs::Environment;
use crate::observer::ObserverTrainConfig;
use crate::observer::{train_observer, ObserverDataset, ObserverReplay, StateObserver, REPLAY_ITERATIONS};
use crate::ppo::{collect_rollout, compute_gae, ppo_update, Policy, PpoConfig, PpoOptimizers, ValueFunction};
use crate::seed::{derive_seed, rng_for, tag};
use crate::{AdamState, Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ImitationConfig {
    pub mode: AlgoMode,
    pub horizon: usize,
    pub ppo: PpoConfig,
    pub discriminator: DiscriminatorConfig,
    pub observer: ObserverTrainConfig,
    /// Train the observer on the last few iterations' data instead of the
    /// current rollout only.
    pub observer_replay: bool,
    pub reward: RewardConfig,
    /// Render rollouts even when the mode does not need frames.
    pub force_render: bool,
}

impl ImitationConfig {
    pub fn new(mode: AlgoMode) -> Self {
        Self {
            mode,
            horizon: crate::ppo::DEFAULT_HORIZON,
            ppo: PpoConfig::default(),
            discriminator: DiscriminatorConfig::default(),
            observer: ObserverTrainConfig::default(),
            observer_replay: false,
            reward: RewardConfig::default(),
            force_render: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IterationStats {
    pub iteration: u64,
    /// Environment steps consumed so far, evaluation excluded.
    pub total_timesteps: u64,
    pub discriminator_loss: f64,
    pub mean_synthesized_reward: f64,
    pub min_synthesized_reward: f64,
    pub max_synthesized_reward: f64,
    pub observer_train_mse: Option<f64>,
    /// Mean environment reward per rollout step. Logged, never trained on.
    pub mean_rollout_eval_reward: f64,
}

/// All learned state of one imitation run.
#[derive(Clone, Debug)]
pub struct Imitator {
    pub cfg: ImitationConfig,
    pub policy: Policy,
    pub value: ValueFunction,
    pub ppo_opt: PpoOptimizers,
    pub disc: Discriminator,
    pub disc_opt: AdamState,
    pub observer: Option<StateObserver>,
    pub observer_opt: Option<AdamState>,
    replay: Option<ObserverReplay>,
    pub iteration: u64,
    pub total_timesteps: u64,
    seed: u64,
}

impl Imitator {
    pub fn new(cfg: ImitationConfig, env: &dyn Environment, seed: u64) -> Result<Self> {
        let spec = env.spec();
        let g = spec.image_size;
        let mut rng = rng_for(seed, &[tag::NETWORK_INIT]);
        let policy = Policy::new(spec.state_dim, spec.action_dim, &mut rng)?;
        let value = ValueFunction::new(spec.state_dim, &mut rng)?;
        let disc = Discriminator::new(cfg.mode, spec.state_dim, g, &mut rng)?;
        let observer =
            if cfg.mode.uses_observer() { Some(StateObserver::new(g, spec.state_dim, &mut rng)?) } else { None };
        Ok(Self {
            ppo_opt: PpoOptimizers::new(&policy, &value, &cfg.ppo),
            disc_opt: AdamState::for_network(&disc.net, cfg.discriminator.lr),
            observer_opt: observer.as_ref().map(|o| AdamState::for_network(&o.net, cfg.observer.lr)),
            replay: (cfg.mode.uses_observer() && cfg.observer_replay).then(|| ObserverReplay::new(REPLAY_ITERATIONS)),
            policy,
            value,
            disc,
            observer,
            iteration: 0,
            total_timesteps: 0,
            seed,
            cfg,
        })
    }

    /// One pass of the adversarial loop: rollout, observer training (then
    /// frozen), discriminator update, reward synthesis over the rollout's
    /// pairs, PPO. The last step of each rollout segment has no successor
    /// pair and is left out of the PPO batch.
    pub fn run_iteration(&mut self, env: &dyn Environment, demos: &DemoView) -> Result<IterationStats> {
        let mode = self.cfg.mode;
        let it = self.iteration;
        if demos.env_id() != env.spec().env_id {
            return Err(Error::EnvMismatch { expected: env.spec().env_id.to_string(), found: demos.env_id().into() });
        }
        let render = mode.needs_rendering() || self.cfg.force_render;
        let batch = collect_rollout(
            &self.policy,
            &self.value,
            env,
            self.cfg.horizon,
            derive_seed(self.seed, &[tag::ROLLOUT, it]),
            render,
        )?;

        let mut observer_train_mse = None;
        if let (Some(observer), Some(adam)) = (self.observer.as_mut(), self.observer_opt.as_mut()) {
            let current = ObserverDataset::from_rollout(&batch)?;
            let data = match self.replay.as_mut() {
                Some(replay) => {
                    replay.push(current);
                    replay.dataset()
                }
                None => current,
            };
            let mut rng = rng_for(self.seed, &[tag::OBSERVER_SHUFFLE, it]);
            let oc = &self.cfg.observer;
            observer_train_mse = Some(train_observer(observer, adam, &data, oc.epochs, oc.minibatch, &mut rng)?);
        }
        let observer = self.observer.as_ref();

        let imitator_pairs = rollout_pairs(mode, &batch, observer)?;
        let expert_pairs = demo_pairs(mode, demos, observer)?;
        let mut rng = rng_for(self.seed, &[tag::DISCRIMINATOR_SAMPLING, it]);
        let discriminator_loss = discriminator_update(
            &mut self.disc,
            &mut self.disc_opt,
            &imitator_pairs,
            &expert_pairs,
            &self.cfg.discriminator,
            &mut rng,
        )?;

        let rewards = synthesize_rewards(&self.disc, &imitator_pairs, &self.cfg.reward)?;
        let train = batch.with_pair_rewards(&rewards)?;
        let gae = compute_gae(&train, self.cfg.ppo.gamma, self.cfg.ppo.lambda)?;
        let mut rng = rng_for(self.seed, &[tag::PPO_SHUFFLE, it]);
        ppo_update(&mut self.policy, &mut self.value, &mut self.ppo_opt, &train, &gae, &self.cfg.ppo, &mut rng)?;

        self.iteration += 1;
        self.total_timesteps += batch.len() as u64;
        let n = rewards.len() as f64;
        Ok(IterationStats {
            iteration: self.iteration,
            total_timesteps: self.total_timesteps,
            discriminator_loss,
            mean_synthesized_reward: rewards.iter().sum::<f64>() / n,
            min_synthesized_reward: rewards.iter().copied().fold(f64::INFINITY, f64::min),
            max_synthesized_reward: rewards.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            observer_train_mse,
            mean_rollout_eval_reward: batch.eval_rewards.iter().sum::<f64>() / batch.len() as f64,
        })
    }
}
