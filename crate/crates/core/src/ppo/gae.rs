use super::RolloutBatch;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct GaeOutput {
    /// Raw (unnormalized) advantages.
    pub advantages: Vec<f64>,
    /// Value targets: advantages plus the recorded values.
    pub returns: Vec<f64>,
}

/// Generalized advantage estimation. The value after a step that ends an
/// episode is taken as zero; after the final step of the batch it is
/// `batch.last_value`.
pub fn compute_gae(batch: &RolloutBatch, gamma: f64, lambda: f64) -> Result<GaeOutput> {
    let n = batch.len();
    if batch.rewards.len() != n || batch.values.len() != n || batch.dones.len() != n {
        return Err(Error::Shape(format!(
            "gae needs aligned arrays: {} states, {} rewards, {} values, {} dones",
            n,
            batch.rewards.len(),
            batch.values.len(),
            batch.dones.len()
        )));
    }
    let mut advantages = vec![0.0; n];
    let mut next_adv = 0.0;
    for t in (0..n).rev() {
        let (next_value, carry) = if batch.dones[t] {
            (0.0, 0.0)
        } else if t + 1 == n {
            (batch.last_value, 0.0)
        } else {
            (batch.values[t + 1], next_adv)
        };
        let delta = batch.rewards[t] + gamma * next_value - batch.values[t];
        next_adv = delta + gamma * lambda * carry;
        advantages[t] = next_adv;
    }
    let returns = advantages.iter().zip(&batch.values).map(|(a, v)| a + v).collect();
    Ok(GaeOutput { advantages, returns })
}

/// Zero-mean, unit-std copy of `values` (only centred when the spread vanishes).
pub fn normalize_advantages(values: &[f64]) -> Vec<f64> {
    if values.is_empty() {
        return Vec::new();
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    let centred = values.iter().map(|v| v - mean);
    if std > 1e-12 {
        let scaled: Vec<f64> = centred.map(|v| v / std).collect();
        // second centring pass removes the rounding left by the first
        let m2 = scaled.iter().sum::<f64>() / n;
        scaled.into_iter().map(|v| v - m2).collect()
    } else {
        centred.collect()
    }
}
