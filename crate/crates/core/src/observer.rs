//! Self-supervised state observer: a small CNN mapping three stacked frames
//! to an estimate of the proprioceptive state, trained by MSE regression on
//! the imitator's own (frames, state) pairs.
//!
//! Between training calls the observer is read-only; prediction takes
//! `&self`, so nothing downstream (discriminator, PPO) can move its weights.

use std::collections::VecDeque;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::diffnet::{adam_step, mse_loss, NetworkBuilder};
use crate::envs::{stack_batch, StackedObservation, STACK_DEPTH};
use crate::ppo::RolloutBatch;
use crate::{AdamState, Error, Network, Result, Tensor};

pub const DEFAULT_MINIBATCH: usize = 64;
pub const DEFAULT_LR: f64 = 1e-3;
/// Iterations kept by the optional FIFO replay.
pub const REPLAY_ITERATIONS: usize = 4;
const PREDICT_CHUNK: usize = 256;

#[derive(Clone, Debug, PartialEq)]
pub struct StateObserver {
    pub net: Network,
    image_size: usize,
    state_dim: usize,
}

impl StateObserver {
    /// conv(3->8, s2) -> relu -> conv(8->16, s2) -> relu -> conv(16->32, s2)
    /// -> relu -> flatten -> dense(128) -> relu -> dense(state_dim), all 3x3
    /// kernels with padding 1; the output layer is linear.
    pub fn new<R: Rng + ?Sized>(image_size: usize, state_dim: usize, rng: &mut R) -> Result<Self> {
        let net = NetworkBuilder::new(&[STACK_DEPTH, image_size, image_size])
            .conv3x3(8, 2, 1)
            .relu()
            .conv3x3(16, 2, 1)
            .relu()
            .conv3x3(32, 2, 1)
            .relu()
            .flatten()
            .dense(128)
            .relu()
            .dense(state_dim)
            .build(rng)?;
        Ok(Self { net, image_size, state_dim })
    }

    pub fn from_network(net: Network, image_size: usize) -> Result<Self> {
        let out = net.output_shape(&[STACK_DEPTH, image_size, image_size])?;
        Ok(Self { state_dim: out.iter().product(), net, image_size })
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn image_size(&self) -> usize {
        self.image_size
    }

    pub fn predict(&self, obs: &StackedObservation) -> Result<Vec<f64>> {
        Ok(self.net.infer(&stack_batch([obs])?)?.into_data())
    }

    pub fn predict_batch(&self, observations: &[StackedObservation]) -> Result<Vec<Vec<f64>>> {
        let mut out = Vec::with_capacity(observations.len());
        for chunk in observations.chunks(PREDICT_CHUNK) {
            let y = self.net.infer(&stack_batch(chunk)?)?;
            out.extend(y.data().chunks_exact(self.state_dim).map(<[f64]>::to_vec));
        }
        Ok(out)
    }
}

/// (stacked frames, true state) regression pairs.
#[derive(Clone, Debug, Default)]
pub struct ObserverDataset {
    pub observations: Vec<StackedObservation>,
    pub targets: Vec<Vec<f64>>,
}

impl ObserverDataset {
    /// Pairs every step of a rendered rollout with its exposed state.
    pub fn from_rollout(batch: &RolloutBatch) -> Result<Self> {
        if batch.observations.len() != batch.states.len() {
            return Err(Error::Precondition("observer data needs a rendered rollout".into()));
        }
        Ok(Self { observations: batch.observations.clone(), targets: batch.states.clone() })
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    pub fn extend(&mut self, other: &ObserverDataset) {
        self.observations.extend_from_slice(&other.observations);
        self.targets.extend_from_slice(&other.targets);
    }

    fn minibatch(&self, indices: &[usize]) -> Result<(Tensor, Tensor)> {
        let x = stack_batch(indices.iter().map(|&i| &self.observations[i]))?;
        let width = self.targets[indices[0]].len();
        let y = Tensor::new(
            vec![indices.len(), width],
            indices.iter().flat_map(|&i| self.targets[i].iter().copied()).collect(),
        )?;
        Ok((x, y))
    }
}

/// FIFO of the last few iterations' datasets.
#[derive(Clone, Debug)]
pub struct ObserverReplay {
    capacity: usize,
    chunks: VecDeque<ObserverDataset>,
}

impl ObserverReplay {
    pub fn new(capacity: usize) -> Self {
        Self { capacity: capacity.max(1), chunks: VecDeque::new() }
    }

    pub fn push(&mut self, data: ObserverDataset) {
        if self.chunks.len() == self.capacity {
            self.chunks.pop_front();
        }
        self.chunks.push_back(data);
    }

    pub fn dataset(&self) -> ObserverDataset {
        let mut all = ObserverDataset::default();
        for chunk in &self.chunks {
            all.extend(chunk);
        }
        all
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObserverTrainConfig {
    pub epochs: usize,
    pub minibatch: usize,
    pub lr: f64,
}

impl Default for ObserverTrainConfig {
    fn default() -> Self {
        Self { epochs: 1, minibatch: DEFAULT_MINIBATCH, lr: DEFAULT_LR }
    }
}

/// Mean squared error of the observer over the whole dataset.
pub fn dataset_mse(observer: &StateObserver, data: &ObserverDataset) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Empty("observer dataset".into()));
    }
    let preds = observer.predict_batch(&data.observations)?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for (p, t) in preds.iter().zip(&data.targets) {
        sum += p.iter().zip(t).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        count += t.len();
    }
    Ok(sum / count as f64)
}

/// `epochs` shuffled passes of Adam regression. Returns the mean minibatch
/// MSE of the final epoch, or the dataset MSE when `epochs == 0`.
pub fn train_observer<R: Rng + ?Sized>(
    observer: &mut StateObserver,
    adam: &mut AdamState,
    data: &ObserverDataset,
    epochs: usize,
    minibatch: usize,
    rng: &mut R,
) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Empty("observer dataset".into()));
    }
    if data.targets.len() != data.len() || data.targets.iter().any(|t| t.len() != observer.state_dim) {
        return Err(Error::Shape(format!("observer targets must have {} dims", observer.state_dim)));
    }
    if epochs == 0 {
        return dataset_mse(observer, data);
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut epoch_mse = 0.0;
    for _ in 0..epochs {
        order.shuffle(rng);
        let mut weighted = 0.0;
        for chunk in order.chunks(minibatch.max(1)) {
            let (x, y) = data.minibatch(chunk)?;
            let (pred, cache) = observer.net.forward(&x)?;
            let (loss, grad) = mse_loss(&pred, &y)?;
            observer.net.accumulate_grads(&cache, &grad)?;
            adam_step(&mut observer.net, adam)?;
            weighted += loss * chunk.len() as f64;
        }
        epoch_mse = weighted / data.len() as f64;
        if !epoch_mse.is_finite() {
            return Err(Error::NonFinite("observer training loss".into()));
        }
    }
    Ok(epoch_mse)
}

/// Mean over timesteps of the Euclidean distance between predictions and
/// true states.
pub fn mean_l2_error(predictions: &[Vec<f64>], states: &[Vec<f64>]) -> Result<f64> {
    if predictions.len() != states.len() || predictions.is_empty() {
        return Err(Error::Shape(format!("{} predictions for {} states", predictions.len(), states.len())));
    }
    let total: f64 = predictions
        .iter()
        .zip(states)
        .map(|(p, s)| p.iter().zip(s).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
        .sum();
    Ok(total / states.len() as f64)
}

/// Average L2 prediction error over every timestep of an analysis-mode demo.
/// Evaluation only: nothing here feeds a gradient.
pub fn demo_prediction_error(observer: &StateObserver, demo: &crate::demos::DemoView) -> Result<f64> {
    let states = demo.analysis_states()?;
    let mut preds = Vec::new();
    let mut truth = Vec::new();
    for (obs, st) in demo.observations().iter().zip(states) {
        preds.extend(observer.predict_batch(obs)?);
        truth.extend(st.iter().cloned());
    }
    mean_l2_error(&preds, &truth)
}
