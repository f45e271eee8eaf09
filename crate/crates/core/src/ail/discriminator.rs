use rand::seq::SliceRandom;
use rand::Rng;

use super::{AlgoMode, PairSet};
use crate::diffnet::{adam_step, bce_with_logits, sigmoid, NetworkBuilder};
use crate::envs::STACK_DEPTH;
use crate::{AdamState, Error, Network, Result, Tensor};

const HIDDEN: usize = 64;
const CHUNK: usize = 256;

/// Binary classifier over transition pairs emitting one logit. Imitator
/// pairs are the positive class.
#[derive(Clone, Debug, PartialEq)]
pub struct Discriminator {
    pub net: Network,
    mode: AlgoMode,
    state_dim: usize,
    image_size: usize,
}

impl Discriminator {
    /// State and observer modes: dense(2d -> 64 -> 64 -> 1) with tanh.
    /// Image mode: three stride-2 3x3 convs over the 6-channel pair, then
    /// dense(64) and the logit.
    pub fn new<R: Rng + ?Sized>(mode: AlgoMode, state_dim: usize, image_size: usize, rng: &mut R) -> Result<Self> {
        let net = match mode {
            AlgoMode::Gaifo | AlgoMode::VgaifoSo => {
                NetworkBuilder::new(&[2 * state_dim]).dense(HIDDEN).tanh().dense(HIDDEN).tanh().dense(1).build(rng)?
            }
            AlgoMode::Vgaifo => NetworkBuilder::new(&[2 * STACK_DEPTH, image_size, image_size])
                .conv3x3(8, 2, 1)
                .relu()
                .conv3x3(16, 2, 1)
                .relu()
                .conv3x3(32, 2, 1)
                .relu()
                .flatten()
                .dense(HIDDEN)
                .relu()
                .dense(1)
                .build(rng)?,
        };
        Ok(Self { net, mode, state_dim, image_size })
    }

    pub fn mode(&self) -> AlgoMode {
        self.mode
    }

    /// Per-sample input shape, without the batch dimension.
    pub fn input_shape(&self) -> Vec<usize> {
        match self.mode {
            AlgoMode::Vgaifo => vec![2 * STACK_DEPTH, self.image_size, self.image_size],
            _ => vec![2 * self.state_dim],
        }
    }

    /// Batched input tensor for the selected pairs.
    pub fn input(&self, pairs: &PairSet, indices: &[usize]) -> Result<Tensor> {
        let shape = self.input_shape();
        let width: usize = shape.iter().product();
        let mut data = Vec::with_capacity(indices.len() * width);
        match (self.mode, pairs) {
            (AlgoMode::Vgaifo, PairSet::Images(p)) => {
                for &i in indices {
                    if p[i].first.image_size() != self.image_size || p[i].second.image_size() != self.image_size {
                        return Err(Error::Shape(format!("image pair {i} does not match G={}", self.image_size)));
                    }
                    p[i].first.extend_into(&mut data);
                    p[i].second.extend_into(&mut data);
                }
            }
            (AlgoMode::Gaifo | AlgoMode::VgaifoSo, PairSet::States(p)) => {
                for &i in indices {
                    if p[i].first.len() != self.state_dim || p[i].second.len() != self.state_dim {
                        return Err(Error::Shape(format!("state pair {i} does not have dim {}", self.state_dim)));
                    }
                    data.extend_from_slice(&p[i].first);
                    data.extend_from_slice(&p[i].second);
                }
            }
            _ => return Err(Error::Precondition(format!("{} discriminator got the wrong pair kind", self.mode))),
        }
        let mut full = vec![indices.len()];
        full.extend(shape);
        Tensor::new(full, data)
    }

    pub fn logits(&self, pairs: &PairSet) -> Result<Vec<f64>> {
        let all: Vec<usize> = (0..pairs.len()).collect();
        let mut out = Vec::with_capacity(pairs.len());
        for chunk in all.chunks(CHUNK) {
            out.extend_from_slice(self.net.infer(&self.input(pairs, chunk)?)?.data());
        }
        Ok(out)
    }

    /// `D(pair) = sigmoid(logit)`, the believed probability of "imitator".
    pub fn probabilities(&self, pairs: &PairSet) -> Result<Vec<f64>> {
        Ok(self.logits(pairs)?.into_iter().map(sigmoid).collect())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiscriminatorConfig {
    pub epochs: usize,
    pub minibatch: usize,
    pub lr: f64,
}

impl Default for DiscriminatorConfig {
    fn default() -> Self {
        Self { epochs: 1, minibatch: 64, lr: 3e-4 }
    }
}

fn check_sides(imitator: &PairSet, expert: &PairSet) -> Result<()> {
    if imitator.is_empty() {
        return Err(Error::Empty("imitator pairs".into()));
    }
    if expert.is_empty() {
        return Err(Error::Empty("expert pairs".into()));
    }
    Ok(())
}

/// `-(E_imitator[ln D] + E_expert[ln(1 - D)])` over the full sets.
pub fn discriminator_loss(disc: &Discriminator, imitator: &PairSet, expert: &PairSet) -> Result<f64> {
    check_sides(imitator, expert)?;
    let mean_bce = |logits: Vec<f64>, label: bool| -> Result<f64> {
        let n = logits.len() as f64;
        logits.into_iter().map(|z| Ok(bce_with_logits(z, label)?.0)).sum::<Result<f64>>().map(|s| s / n)
    };
    Ok(mean_bce(disc.logits(imitator)?, true)? + mean_bce(disc.logits(expert)?, false)?)
}

/// Gradient descent on the discriminator loss with balanced minibatches:
/// each epoch covers `max(|I|, |E|)` samples per side, the larger side as a
/// shuffled pass and the smaller one resampled with replacement. Imitator
/// pairs are labelled 1, expert pairs 0. Returns the mean minibatch loss of
/// the final epoch.
pub fn discriminator_update<R: Rng + ?Sized>(
    disc: &mut Discriminator,
    adam: &mut AdamState,
    imitator: &PairSet,
    expert: &PairSet,
    cfg: &DiscriminatorConfig,
    rng: &mut R,
) -> Result<f64> {
    check_sides(imitator, expert)?;
    let n = imitator.len().max(expert.len());
    let mb = cfg.minibatch.max(1);
    let mut last = 0.0;
    for _ in 0..cfg.epochs {
        let imitator_idx = balanced_indices(imitator.len(), n, rng);
        let expert_idx = balanced_indices(expert.len(), n, rng);
        let mut total = 0.0;
        let mut batches = 0usize;
        for (ic, ec) in imitator_idx.chunks(mb).zip(expert_idx.chunks(mb)) {
            let mut loss = 0.0;
            for (pairs, idx, label) in [(imitator, ic, true), (expert, ec, false)] {
                let (logits, cache) = disc.net.forward(&disc.input(pairs, idx)?)?;
                let scale = 1.0 / idx.len() as f64;
                let mut grad = Vec::with_capacity(idx.len());
                for &z in logits.data() {
                    let (l, g) = bce_with_logits(z, label)?;
                    loss += l * scale;
                    grad.push(g * scale);
                }
                disc.net.accumulate_grads(&cache, &Tensor::new(logits.shape().to_vec(), grad)?)?;
            }
            if !loss.is_finite() {
                return Err(Error::NonFinite("discriminator loss".into()));
            }
            adam_step(&mut disc.net, adam)?;
            total += loss;
            batches += 1;
        }
        last = total / batches as f64;
    }
    Ok(last)
}

fn balanced_indices<R: Rng + ?Sized>(len: usize, n: usize, rng: &mut R) -> Vec<usize> {
    if len == n {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.shuffle(rng);
        idx
    } else {
        (0..n).map(|_| rng.gen_range(0..len)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RewardConfig {
    /// Clamp applied to `D` before the log.
    pub epsilon: f64,
}

impl Default for RewardConfig {
    fn default() -> Self {
        Self { epsilon: 1e-6 }
    }
}

impl RewardConfig {
    pub fn bounds(&self) -> (f64, f64) {
        (-(1.0 - self.epsilon).ln(), -self.epsilon.ln())
    }
}

/// `r = -ln(clamp(sigmoid(logit), eps, 1 - eps))`. Large when the
/// discriminator thinks the pair came from the expert.
pub fn synthesize_reward(logit: f64, cfg: &RewardConfig) -> Result<f64> {
    let d = sigmoid(logit).clamp(cfg.epsilon, 1.0 - cfg.epsilon);
    let r = -d.ln();
    let (lo, hi) = cfg.bounds();
    if !(lo..=hi).contains(&r) {
        return Err(Error::RewardOutOfBounds(r));
    }
    Ok(r)
}

pub fn synthesize_rewards(disc: &Discriminator, pairs: &PairSet, cfg: &RewardConfig) -> Result<Vec<f64>> {
    disc.logits(pairs)?.into_iter().map(|z| synthesize_reward(z, cfg)).collect()
}
