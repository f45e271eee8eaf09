use rand::Rng;
use rand_distr::StandardNormal;

use crate::diffnet::{gaussian_logprob, NetworkBuilder};
use crate::{Network, Result, Tensor};

pub const LOG_STD_INIT: f64 = -0.5;
pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;
const HIDDEN: usize = 64;

/// Diagonal Gaussian policy: tanh MLP mean and a learned state-independent
/// log standard deviation.
#[derive(Clone, Debug, PartialEq)]
pub struct Policy {
    pub mean_net: Network,
    pub log_std: Tensor,
    pub log_std_grad: Tensor,
}

impl Policy {
    pub fn new<R: Rng + ?Sized>(state_dim: usize, action_dim: usize, rng: &mut R) -> Result<Self> {
        let mean_net =
            NetworkBuilder::new(&[state_dim]).dense(HIDDEN).tanh().dense(HIDDEN).tanh().dense(action_dim).build(rng)?;
        Self::from_parts(mean_net, vec![LOG_STD_INIT; action_dim])
    }

    pub fn from_parts(mean_net: Network, log_std: Vec<f64>) -> Result<Self> {
        let n = log_std.len();
        let mut policy = Self { mean_net, log_std: Tensor::new(vec![n], log_std)?, log_std_grad: Tensor::zeros(&[n]) };
        policy.clamp_log_std();
        Ok(policy)
    }

    pub fn action_dim(&self) -> usize {
        self.log_std.len()
    }

    pub fn log_std(&self) -> &[f64] {
        self.log_std.data()
    }

    pub fn clamp_log_std(&mut self) {
        for v in self.log_std.data_mut() {
            *v = v.clamp(LOG_STD_MIN, LOG_STD_MAX);
        }
    }

    pub fn mean(&self, state: &[f64]) -> Result<Vec<f64>> {
        let input = Tensor::new(vec![1, state.len()], state.to_vec())?;
        Ok(self.mean_net.infer(&input)?.into_data())
    }

    /// Samples an unclipped action and returns it with its log-probability.
    pub fn sample<R: Rng + ?Sized>(&self, state: &[f64], rng: &mut R) -> Result<(Vec<f64>, f64)> {
        let mean = self.mean(state)?;
        let action: Vec<f64> = mean
            .iter()
            .zip(self.log_std())
            .map(|(&m, &ls)| m + ls.exp() * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let logp = gaussian_logprob(&mean, self.log_std(), &action)?;
        Ok((action, logp))
    }

    pub fn log_prob(&self, state: &[f64], action: &[f64]) -> Result<f64> {
        gaussian_logprob(&self.mean(state)?, self.log_std(), action)
    }
}

/// State-value critic with the same trunk shape as the policy.
#[derive(Clone, Debug, PartialEq)]
pub struct ValueFunction {
    pub net: Network,
}

impl ValueFunction {
    pub fn new<R: Rng + ?Sized>(state_dim: usize, rng: &mut R) -> Result<Self> {
        let net = NetworkBuilder::new(&[state_dim]).dense(HIDDEN).tanh().dense(HIDDEN).tanh().dense(1).build(rng)?;
        Ok(Self { net })
    }

    pub fn value(&self, state: &[f64]) -> Result<f64> {
        let input = Tensor::new(vec![1, state.len()], state.to_vec())?;
        Ok(self.net.infer(&input)?.data()[0])
    }
}
