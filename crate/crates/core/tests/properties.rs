use ifolab::ail::{synthesize_reward, AlgoMode, Discriminator, RewardConfig};
use ifolab::demos::{read_demos, DemoFile, DemoMode, DemoTrajectory};
use ifolab::diffnet::checkpoint::{read_network, write_network};
use ifolab::diffnet::{adam_step, bce_with_logits, NetworkBuilder};
use ifolab::envs::{make_env, EnvId, Frame, FrameStack};
use ifolab::harness::ExperimentConfig;
use ifolab::{AdamState, Network, Tensor};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::io::Cursor;

fn small_net(seed: u64) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    NetworkBuilder::new(&[2, 6, 6]).conv3x3(3, 2, 1).relu().flatten().dense(5).tanh().dense(2).build(&mut rng).unwrap()
}

fn env_id() -> impl Strategy<Value = EnvId> {
    prop_oneof![Just(EnvId::Pendulum), Just(EnvId::Reacher)]
}

/// One full episode under a seeded random action stream.
fn episode(id: EnvId, reset_seed: u64, action_seed: u64) -> (Vec<Vec<f64>>, Vec<Frame>, Vec<f64>) {
    let env = make_env(id, 16).unwrap();
    let spec = env.spec().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(action_seed);
    let mut state = env.reset(reset_seed);
    let (mut states, mut frames, mut rewards) = (vec![], vec![], vec![]);
    loop {
        states.push(env.observe(&state));
        frames.push(env.render(&state));
        let action: Vec<f64> =
            (0..spec.action_dim).map(|i| rng.gen_range(2.0 * spec.action_low[i]..2.0 * spec.action_high[i])).collect();
        let step = env.step(&state, &action).unwrap();
        rewards.push(step.eval_reward);
        if step.done {
            return (states, frames, rewards);
        }
        state = step.next;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn forward_is_deterministic(seed in any::<u64>(), xs in prop::collection::vec(-3.0f64..3.0, 72)) {
        let net = small_net(seed);
        let x = Tensor::new(vec![1, 2, 6, 6], xs).unwrap();
        let a = net.infer(&x).unwrap();
        let b = net.clone().infer(&x).unwrap();
        prop_assert_eq!(a.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn parameter_count_depends_only_on_specs(a in any::<u64>(), b in any::<u64>()) {
        let (x, y) = (small_net(a), small_net(b));
        prop_assert_eq!(x.layers(), y.layers());
        prop_assert_eq!(x.param_count(), y.param_count());
    }

    #[test]
    fn tensor_length_must_match_shape(rows in 1usize..5, cols in 1usize..5, extra in 1usize..3) {
        prop_assert!(Tensor::new(vec![rows, cols], vec![0.0; rows * cols]).is_ok());
        prop_assert!(Tensor::new(vec![rows, cols], vec![0.0; rows * cols + extra]).is_err());
    }

    #[test]
    fn checkpoint_round_trip_is_exact(seed in any::<u64>()) {
        let net = small_net(seed);
        let mut bytes = Vec::new();
        write_network(&net, &mut bytes).unwrap();
        let back: Network = read_network(Cursor::new(&bytes)).unwrap();
        let mut again = Vec::new();
        write_network(&back, &mut again).unwrap();
        prop_assert_eq!(bytes, again);
        prop_assert_eq!(back, net);
    }

    #[test]
    fn softplus_identity(z in -30.0f64..30.0) {
        let (pos, _) = bce_with_logits(z, true).unwrap();
        let (flip, _) = bce_with_logits(-z, true).unwrap();
        let (neg, _) = bce_with_logits(z, false).unwrap();
        prop_assert!((pos + flip - (pos + neg)).abs() <= 1e-12);
    }

    #[test]
    fn adam_counts_steps(updates in 1usize..6) {
        let mut net = small_net(1);
        let mut adam = AdamState::for_network(&net, 1e-3);
        prop_assert_eq!(adam.step_count, 0);
        for k in 1..=updates {
            let x = Tensor::new(vec![1, 2, 6, 6], vec![0.5; 72]).unwrap();
            let (y, cache) = net.forward(&x).unwrap();
            net.zero_grads();
            net.accumulate_grads(&cache, &Tensor::new(y.shape().to_vec(), vec![1.0; y.len()]).unwrap()).unwrap();
            adam_step(&mut net, &mut adam).unwrap();
            prop_assert_eq!(adam.step_count, k as u64);
        }
    }

    #[test]
    fn rewards_stay_in_bounds(logit in -1e6f64..1e6, eps_exp in 2.0f64..10.0) {
        let cfg = RewardConfig { epsilon: 10f64.powf(-eps_exp) };
        let r = synthesize_reward(logit, &cfg).unwrap();
        let (lo, hi) = cfg.bounds();
        prop_assert!(r >= 0.0 && r >= lo && r <= hi, "reward {r} outside [{lo}, {hi}]");
    }

    #[test]
    fn demo_pixels_round_trip(seed in any::<u64>(), lens in prop::collection::vec(1usize..4, 1..3)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = 16;
        let trajectories = lens
            .iter()
            .map(|&n| DemoTrajectory {
                frames: (0..n)
                    .map(|_| Frame::from_pixels(g, (0..g * g).map(|_| if rng.gen_bool(0.3) { 1.0 } else { 0.0 }).collect()).unwrap())
                    .collect(),
                states: Some((0..n).map(|_| vec![rng.gen_range(-1.0..1.0); 3]).collect()),
            })
            .collect();
        let file = DemoFile { env_id: "pendulum".into(), image_size: g, state_dim: 3, trajectories };
        let mut bytes = Vec::new();
        file.write_to(&mut bytes).unwrap();
        let view = read_demos(Cursor::new(&bytes), DemoMode::Analysis).unwrap();
        prop_assert_eq!(view.to_file(), file.clone());
        let video = read_demos(Cursor::new(&bytes), DemoMode::Video).unwrap();
        for (got, want) in video.frames().iter().zip(&file.trajectories) {
            prop_assert_eq!(got, &want.frames);
        }
    }

    #[test]
    fn config_text_round_trips(seed in any::<u64>(), epochs in 0usize..30, replay in any::<bool>(), algo in 0usize..3) {
        let mut cfg = ExperimentConfig { seed, observer_epochs: epochs, observer_replay: replay, ..Default::default() };
        cfg.algo = AlgoMode::ALL[algo];
        let mut back = ExperimentConfig::default();
        back.apply_text(&cfg.to_text()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn environments_are_deterministic_and_bounded(id in env_id(), reset in any::<u64>(), actions in any::<u64>()) {
        let a = episode(id, reset, actions);
        let b = episode(id, reset, actions);
        let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        prop_assert_eq!(bits(&a.2), bits(&b.2));
        prop_assert_eq!(&a.1, &b.1);
        prop_assert_eq!(a.0.iter().map(|s| bits(s)).collect::<Vec<_>>(), b.0.iter().map(|s| bits(s)).collect::<Vec<_>>());

        let env = make_env(id, 16).unwrap();
        prop_assert_eq!(a.0.len(), env.spec().max_episode_steps);
        for s in &a.0 {
            prop_assert!(s.iter().all(|v| v.is_finite()));
            match id {
                EnvId::Pendulum => {
                    prop_assert_eq!(s.len(), 3);
                    prop_assert!(s[0].abs() <= 1.0 && s[1].abs() <= 1.0 && s[2].abs() <= 8.0);
                }
                EnvId::Reacher => {
                    prop_assert_eq!(s.len(), 4);
                    prop_assert!((0.0..=1.0).contains(&s[0]) && (0.0..=1.0).contains(&s[1]));
                }
            }
        }
        for f in &a.1 {
            prop_assert!(f.pixels().iter().all(|&p| p == 0.0 || p == 1.0));
        }
    }

    #[test]
    fn first_frame_fills_missing_history(id in env_id(), reset in any::<u64>()) {
        let env = make_env(id, 16).unwrap();
        let first = env.render(&env.reset(reset));
        let mut stack = FrameStack::new();
        stack.push(first.clone());
        let obs = stack.observation().unwrap();
        prop_assert!(obs.frames().iter().all(|f| f == &first));
    }

    #[test]
    fn state_observer_discriminator_sees_states(id in env_id(), seed in any::<u64>()) {
        let env = make_env(id, 16).unwrap();
        let sd = env.spec().state_dim;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let disc = Discriminator::new(AlgoMode::VgaifoSo, sd, 16, &mut rng).unwrap();
        prop_assert_eq!(disc.input_shape(), vec![2 * sd]);
    }
}
