use rand::seq::SliceRandom;
use rand::Rng;

use super::{normalize_advantages, GaeOutput, Policy, RolloutBatch, ValueFunction};
use crate::diffnet::{adam_step, gaussian_logprob, gaussian_logprob_grad, mse_loss};
use crate::{AdamState, Error, Result, Tensor};

#[derive(Clone, Debug, PartialEq)]
pub struct PpoConfig {
    pub epochs: usize,
    pub minibatch: usize,
    pub clip: f64,
    pub lr: f64,
    pub value_lr: f64,
    pub gamma: f64,
    pub lambda: f64,
    pub entropy_coef: f64,
    pub normalize_advantages: bool,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            minibatch: 64,
            clip: 0.2,
            lr: 3e-4,
            value_lr: 3e-4,
            gamma: 0.99,
            lambda: 0.95,
            entropy_coef: 0.0,
            normalize_advantages: true,
        }
    }
}

/// Separate Adam states for the policy mean, the log std and the critic.
#[derive(Clone, Debug)]
pub struct PpoOptimizers {
    pub policy: AdamState,
    pub log_std: AdamState,
    pub value: AdamState,
}

impl PpoOptimizers {
    pub fn new(policy: &Policy, value: &ValueFunction, cfg: &PpoConfig) -> Self {
        Self {
            policy: AdamState::for_network(&policy.mean_net, cfg.lr),
            log_std: AdamState::with_shapes(&[policy.log_std.shape()], cfg.lr),
            value: AdamState::for_network(&value.net, cfg.value_lr),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PpoStats {
    /// Clipped surrogate over the whole batch before any step.
    pub initial_surrogate: f64,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
}

/// Mean of `min(r A, clip(r, 1 - eps, 1 + eps) A)`.
pub fn clipped_surrogate(ratios: &[f64], advantages: &[f64], clip: f64) -> f64 {
    let n = ratios.len().max(1) as f64;
    ratios.iter().zip(advantages).map(|(&r, &a)| (r * a).min(r.clamp(1.0 - clip, 1.0 + clip) * a)).sum::<f64>() / n
}

fn rows_tensor(rows: &[&Vec<f64>]) -> Result<Tensor> {
    let width = rows[0].len();
    Tensor::new(vec![rows.len(), width], rows.iter().flat_map(|r| r.iter().copied()).collect())
}

/// Clipped-surrogate policy updates and MSE critic regression over shuffled
/// minibatches. The policy and the critic have separate optimizers, so
/// neither loss touches the other's parameters.
pub fn ppo_update<R: Rng + ?Sized>(
    policy: &mut Policy,
    value: &mut ValueFunction,
    opt: &mut PpoOptimizers,
    batch: &RolloutBatch,
    gae: &GaeOutput,
    cfg: &PpoConfig,
    rng: &mut R,
) -> Result<PpoStats> {
    let n = batch.len();
    if n == 0 {
        return Err(Error::Empty("ppo batch".into()));
    }
    if gae.advantages.len() != n || gae.returns.len() != n || batch.actions.len() != n || batch.log_probs.len() != n {
        return Err(Error::Shape("gae output does not match the batch".into()));
    }
    let advantages =
        if cfg.normalize_advantages { normalize_advantages(&gae.advantages) } else { gae.advantages.clone() };

    let initial_ratios = (0..n)
        .map(|t| Ok((policy.log_prob(&batch.states[t], &batch.actions[t])? - batch.log_probs[t]).exp()))
        .collect::<Result<Vec<f64>>>()?;
    let mut stats =
        PpoStats { initial_surrogate: clipped_surrogate(&initial_ratios, &advantages, cfg.clip), ..Default::default() };

    let mut order: Vec<usize> = (0..n).collect();
    let mut updates = 0usize;
    let mut clipped = 0usize;
    let mut seen = 0usize;
    for _ in 0..cfg.epochs {
        order.shuffle(rng);
        for chunk in order.chunks(cfg.minibatch.max(1)) {
            let b = chunk.len() as f64;
            let states: Vec<&Vec<f64>> = chunk.iter().map(|&i| &batch.states[i]).collect();
            let input = rows_tensor(&states)?;

            let (means, cache) = policy.mean_net.forward(&input)?;
            let action_dim = policy.action_dim();
            let mut mean_grad = vec![0.0; chunk.len() * action_dim];
            let mut log_std_grad = vec![0.0; action_dim];
            let mut loss = 0.0;
            for (row, &i) in chunk.iter().enumerate() {
                let mean = means.row(row);
                let logp = gaussian_logprob(mean, policy.log_std(), &batch.actions[i])?;
                let log_ratio = logp - batch.log_probs[i];
                let ratio = log_ratio.exp();
                let adv = advantages[i];
                let clipped_ratio = ratio.clamp(1.0 - cfg.clip, 1.0 + cfg.clip);
                let unclipped_active = ratio * adv <= clipped_ratio * adv;
                loss -= (ratio * adv).min(clipped_ratio * adv) / b;
                stats.approx_kl += -log_ratio;
                seen += 1;
                if !unclipped_active {
                    clipped += 1;
                    continue;
                }
                // d(-ratio * adv / b) / d logp
                let d_logp = -ratio * adv / b;
                let (d_mean, d_log_std) = gaussian_logprob_grad(mean, policy.log_std(), &batch.actions[i])?;
                for k in 0..action_dim {
                    mean_grad[row * action_dim + k] += d_logp * d_mean[k];
                    log_std_grad[k] += d_logp * d_log_std[k];
                }
            }
            // entropy of a diagonal Gaussian grows by 1 per unit of log std
            for g in &mut log_std_grad {
                *g -= cfg.entropy_coef;
            }
            if !loss.is_finite() {
                return Err(Error::NonFinite("ppo policy loss".into()));
            }
            stats.policy_loss += loss;
            policy.mean_net.accumulate_grads(&cache, &Tensor::new(means.shape().to_vec(), mean_grad)?)?;
            for (g, d) in policy.log_std_grad.data_mut().iter_mut().zip(&log_std_grad) {
                *g += d;
            }
            adam_step(&mut policy.mean_net, &mut opt.policy)?;
            opt.log_std.update([(&mut policy.log_std, &mut policy.log_std_grad)])?;
            policy.clamp_log_std();

            let (pred, vcache) = value.net.forward(&input)?;
            let targets = Tensor::new(vec![chunk.len(), 1], chunk.iter().map(|&i| gae.returns[i]).collect())?;
            let (vloss, vgrad) = mse_loss(&pred, &targets)?;
            stats.value_loss += vloss;
            value.net.accumulate_grads(&vcache, &vgrad)?;
            adam_step(&mut value.net, &mut opt.value)?;
            updates += 1;
        }
    }
    if updates > 0 {
        stats.policy_loss /= updates as f64;
        stats.value_loss /= updates as f64;
    }
    if seen > 0 {
        stats.approx_kl /= seen as f64;
        stats.clip_fraction = clipped as f64 / seen as f64;
    }
    Ok(stats)
}
