use super::Policy;
use crate::envs::Environment;
use crate::seed::{derive_seed, tag};
use crate::{Error, Result};

/// Mean task return of `episodes` deterministic (mean-action) episodes.
/// Episode `k` starts from the reset seed derived from `(seed, k)`.
pub fn evaluate_policy(policy: &Policy, env: &dyn Environment, episodes: usize, seed: u64) -> Result<f64> {
    if episodes == 0 {
        return Err(Error::Precondition("evaluation needs at least one episode".into()));
    }
    let mut total = 0.0;
    for k in 0..episodes {
        let mut state = env.reset(episode_seed(seed, k));
        loop {
            let action = policy.mean(&env.observe(&state))?;
            let step = env.step(&state, &action)?;
            total += step.eval_reward;
            if step.done {
                break;
            }
            state = step.next;
        }
    }
    Ok(total / episodes as f64)
}

/// Reset seed of evaluation episode `k`; demo recording uses the same one.
pub(crate) fn episode_seed(seed: u64, k: usize) -> u64 {
    derive_seed(seed, &[tag::EVALUATION, k as u64])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{make_env, EnvId};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn evaluation_is_reproducible() {
        let env = make_env(EnvId::Pendulum, 32).unwrap();
        let p = Policy::new(3, 1, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let a = evaluate_policy(&p, env.as_ref(), 3, 17).unwrap();
        let b = evaluate_policy(&p, env.as_ref(), 3, 17).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
        assert!(a < 0.0);
    }
}
