use std::fmt;
use std::str::FromStr;

use crate::demos::DemoView;
use crate::envs::StackedObservation;
use crate::observer::StateObserver;
use crate::ppo::RolloutBatch;
use crate::{Error, Result};

/// Which imitation-from-observation variant is being run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AlgoMode {
    /// Privileged: discriminates true state transitions.
    Gaifo,
    /// Discriminates stacked-image transitions.
    Vgaifo,
    /// Discriminates transitions of observer-predicted states.
    VgaifoSo,
}

impl AlgoMode {
    pub const ALL: [AlgoMode; 3] = [AlgoMode::Gaifo, AlgoMode::Vgaifo, AlgoMode::VgaifoSo];

    pub fn as_str(self) -> &'static str {
        match self {
            AlgoMode::Gaifo => "gaifo",
            AlgoMode::Vgaifo => "vgaifo",
            AlgoMode::VgaifoSo => "vgaifo-so",
        }
    }

    pub fn needs_rendering(self) -> bool {
        self != AlgoMode::Gaifo
    }

    pub fn uses_observer(self) -> bool {
        self == AlgoMode::VgaifoSo
    }
}

impl fmt::Display for AlgoMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for AlgoMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AlgoMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm {s:?} (gaifo, vgaifo, vgaifo-so)")))
    }
}

/// Consecutive items `(x_t, x_{t+1})` from one episode.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionPair<X> {
    pub first: X,
    pub second: X,
}

#[derive(Clone, Debug, PartialEq)]
pub enum PairSet {
    /// True or predicted state pairs.
    States(Vec<TransitionPair<Vec<f64>>>),
    /// Stacked-observation pairs.
    Images(Vec<TransitionPair<StackedObservation>>),
}

impl PairSet {
    pub fn len(&self) -> usize {
        match self {
            PairSet::States(p) => p.len(),
            PairSet::Images(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn append(&mut self, other: PairSet) -> Result<()> {
        match (self, other) {
            (PairSet::States(a), PairSet::States(b)) => a.extend(b),
            (PairSet::Images(a), PairSet::Images(b)) => a.extend(b),
            _ => return Err(Error::Precondition("cannot mix state and image pairs".into())),
        }
        Ok(())
    }
}

/// Pairs of one episode's consecutive states: `n` states give `n - 1` pairs.
pub fn state_pairs(trajectory: &[Vec<f64>]) -> Result<Vec<TransitionPair<Vec<f64>>>> {
    let dim = trajectory.first().map_or(0, Vec::len);
    for (t, s) in trajectory.iter().enumerate() {
        if s.len() != dim {
            return Err(Error::Shape(format!("state {t} has dim {}, expected {dim}", s.len())));
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("state {t} of a pair trajectory")));
        }
    }
    Ok(trajectory.windows(2).map(|w| TransitionPair { first: w[0].clone(), second: w[1].clone() }).collect())
}

pub fn image_pairs(trajectory: &[StackedObservation]) -> Vec<TransitionPair<StackedObservation>> {
    trajectory.windows(2).map(|w| TransitionPair { first: w[0].clone(), second: w[1].clone() }).collect()
}

/// Pairs for one episode in the representation `mode` discriminates.
/// `states` is only read in GAIfO mode, `observations` only in the visual
/// modes.
pub fn make_pairs(
    mode: AlgoMode,
    states: &[Vec<f64>],
    observations: &[StackedObservation],
    observer: Option<&StateObserver>,
) -> Result<PairSet> {
    match mode {
        AlgoMode::Gaifo => Ok(PairSet::States(state_pairs(states)?)),
        AlgoMode::Vgaifo => Ok(PairSet::Images(image_pairs(observations))),
        AlgoMode::VgaifoSo => {
            let observer = observer.ok_or(Error::MissingObserver)?;
            Ok(PairSet::States(state_pairs(&observer.predict_batch(observations)?)?))
        }
    }
}

/// Imitator pairs, segment by segment, in rollout order. Pairs never cross
/// an episode boundary.
pub fn rollout_pairs(mode: AlgoMode, batch: &RolloutBatch, observer: Option<&StateObserver>) -> Result<PairSet> {
    if mode.needs_rendering() && batch.observations.len() != batch.len() {
        return Err(Error::Precondition(format!("{mode} needs a rendered rollout")));
    }
    let mut all = empty_set(mode);
    for (start, end) in batch.segments() {
        let obs = if mode.needs_rendering() { &batch.observations[start..end] } else { &[][..] };
        all.append(make_pairs(mode, &batch.states[start..end], obs, observer)?)?;
    }
    Ok(all)
}

/// Expert pairs from a demo view. GAIfO reads the analysis states, which
/// requires a view opened in analysis mode.
pub fn demo_pairs(mode: AlgoMode, demos: &DemoView, observer: Option<&StateObserver>) -> Result<PairSet> {
    let mut all = empty_set(mode);
    match mode {
        AlgoMode::Gaifo => {
            for traj in demos.analysis_states()? {
                all.append(make_pairs(mode, traj, &[], None)?)?;
            }
        }
        _ => {
            for obs in demos.observations() {
                all.append(make_pairs(mode, &[], obs, observer)?)?;
            }
        }
    }
    Ok(all)
}

fn empty_set(mode: AlgoMode) -> PairSet {
    match mode {
        AlgoMode::Vgaifo => PairSet::Images(Vec::new()),
        _ => PairSet::States(Vec::new()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn batch_with_episodes(lengths: &[usize]) -> RolloutBatch {
        let mut b = RolloutBatch::default();
        let mut k = 0.0;
        for &len in lengths {
            for t in 0..len {
                b.states.push(vec![k, t as f64]);
                b.dones.push(t + 1 == len);
                k += 1.0;
            }
        }
        b
    }

    #[test]
    fn one_episode_fencepost() {
        let b = batch_with_episodes(&[200]);
        assert_eq!(rollout_pairs(AlgoMode::Gaifo, &b, None).unwrap().len(), 199);
    }

    #[test]
    fn pairs_do_not_cross_episodes() {
        let b = batch_with_episodes(&[200, 200]);
        let PairSet::States(pairs) = rollout_pairs(AlgoMode::Gaifo, &b, None).unwrap() else { panic!() };
        assert_eq!(pairs.len(), 398);
        for p in &pairs {
            assert_eq!(p.second[0], p.first[0] + 1.0);
            assert_eq!(p.second[1], p.first[1] + 1.0);
        }
    }

    #[test]
    fn observer_mode_needs_observer_and_frames() {
        let b = batch_with_episodes(&[3]);
        assert!(rollout_pairs(AlgoMode::VgaifoSo, &b, None).is_err());
        assert!(matches!(make_pairs(AlgoMode::VgaifoSo, &[], &[], None), Err(Error::MissingObserver)));
    }

    #[test]
    fn mode_names_round_trip() {
        for m in AlgoMode::ALL {
            assert_eq!(m.as_str().parse::<AlgoMode>().unwrap(), m);
        }
        assert!("gail".parse::<AlgoMode>().is_err());
    }

    #[test]
    fn non_finite_states_are_rejected() {
        assert!(state_pairs(&[vec![0.0], vec![f64::NAN]]).is_err());
        assert!(state_pairs(&[vec![0.0], vec![1.0, 2.0]]).is_err());
    }
}
