//! Acceptance suite. Every test writes one `criterion N: PASS|FAIL ...` line
//! to stderr, outside the test harness' output capture, then asserts.
//!
//! Criteria 3 and 4 run at 100k steps here; the 500k versions are ignored by
//! default: `cargo test -p ifolab --test acceptance -- --ignored`.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::OnceLock;

use ifolab::ail::{
    discriminator_loss, discriminator_update, AlgoMode, Discriminator, DiscriminatorConfig, PairSet, RewardConfig,
    TransitionPair,
};
use ifolab::demos::{load_demos, record_demos, train_expert, DemoMode, ExpertCheckpoint, ExpertConfig};
use ifolab::diffnet::gradcheck::{central_difference, check_network, max_relative_error, relative_error};
use ifolab::diffnet::{bce_with_logits, gaussian_logprob, gaussian_logprob_grad, mse_loss, NetworkBuilder};
use ifolab::envs::{make_env, EnvId, EnvSpec, EnvState, Environment, Frame, FrameStack, Step};
use ifolab::harness::{
    read_metrics, run_experiment, run_experiment_with_env, ExperimentConfig, MetricsRow, RunSummary,
};
use ifolab::observer::{dataset_mse, train_observer, ObserverDataset, StateObserver};
use ifolab::seed::derive_seed;
use ifolab::{AdamState, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GRAD_STEP: f64 = 1e-5;
const GRAD_TOL: f64 = 1e-4;
const SEEDS: u64 = 10;
const SMOKE_STEPS: u64 = 100_000;
const FULL_STEPS: u64 = 500_000;

fn report(criterion: u32, pass: bool, detail: impl AsRef<str>) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let line = format!("criterion {criterion}: {verdict} {}\n", detail.as_ref());
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(pass, "criterion {criterion} failed: {}", detail.as_ref());
}

fn scratch(name: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance").join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

struct ExpertFixture {
    checkpoint: ExpertCheckpoint,
    demos: PathBuf,
}

/// Pendulum expert (200k PPO steps, seed 0) and ten recorded trajectories.
fn expert() -> &'static ExpertFixture {
    static EXPERT: OnceLock<ExpertFixture> = OnceLock::new();
    EXPERT.get_or_init(|| {
        let dir = scratch("expert");
        let env = make_env(EnvId::Pendulum, 32).unwrap();
        let checkpoint = train_expert(env.as_ref(), 200_000, 0, &ExpertConfig::default()).unwrap();
        checkpoint.save(dir.join("checkpoint")).unwrap();
        let demos = dir.join("demos.ifod");
        record_demos(&checkpoint, env.as_ref(), 10, 1000).unwrap().save(&demos).unwrap();
        ExpertFixture { checkpoint, demos }
    })
}

fn base_config(out: &Path, total_timesteps: u64) -> ExperimentConfig {
    ExperimentConfig {
        total_timesteps,
        demos: expert().demos.clone(),
        demo_count: 10,
        out: out.to_path_buf(),
        ..ExperimentConfig::default()
    }
}

type Runs = HashMap<(AlgoMode, u64), RunSummary>;

fn run_grid(name: &str, total_timesteps: u64, algos: &[AlgoMode]) -> Runs {
    let out = scratch(name);
    let mut runs = Runs::new();
    for &algo in algos {
        for seed in 0..SEEDS {
            let cfg = ExperimentConfig { algo, seed, ..base_config(&out, total_timesteps) };
            runs.insert((algo, seed), run_experiment(&cfg).unwrap());
        }
    }
    runs
}

fn smoke_runs() -> &'static Runs {
    static RUNS: OnceLock<Runs> = OnceLock::new();
    RUNS.get_or_init(|| run_grid("smoke", SMOKE_STEPS, &AlgoMode::ALL))
}

fn full_runs() -> &'static Runs {
    static RUNS: OnceLock<Runs> = OnceLock::new();
    RUNS.get_or_init(|| run_grid("full", FULL_STEPS, &AlgoMode::ALL))
}

// ---------------------------------------------------------------- criterion 1

fn projection(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

fn random_tensor(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

#[test]
fn criterion_1_gradient_integrity() {
    let mut worst: BTreeMap<&str, f64> = BTreeMap::new();
    let mut note = |name: &'static str, err: f64| {
        let e = worst.entry(name).or_insert(0.0);
        *e = e.max(err);
    };
    for seed in 0..SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let nets = [
            ("dense+tanh", vec![5], NetworkBuilder::new(&[5]).dense(7).tanh().dense(3)),
            ("dense+relu", vec![4], NetworkBuilder::new(&[4]).dense(6).relu().dense(2)),
            (
                "conv s1 p1 + flatten",
                vec![2, 7, 6],
                NetworkBuilder::new(&[2, 7, 6]).conv3x3(3, 1, 1).tanh().flatten().dense(2),
            ),
            (
                "conv s2 p0 + relu",
                vec![3, 9, 8],
                NetworkBuilder::new(&[3, 9, 8]).conv3x3(4, 2, 0).relu().flatten().dense(2),
            ),
            (
                "conv s2 p1 stack",
                vec![3, 8, 8],
                NetworkBuilder::new(&[3, 8, 8]).conv3x3(4, 2, 1).relu().conv3x3(5, 2, 1).flatten(),
            ),
        ];
        for (name, sample_shape, builder) in nets {
            let net = builder.build(&mut rng).unwrap();
            let mut shape = vec![3];
            shape.extend(sample_shape);
            let input = random_tensor(&mut rng, &shape);
            let out_len = net.infer(&input).unwrap().len();
            let proj = projection(&mut rng, out_len);
            let r = check_network(&net, &input, &proj, GRAD_STEP, None).unwrap();
            note(name, r.max_error());
        }

        // the networks the learners actually use, probed at a sample of entries
        let observer = StateObserver::new(16, 3, &mut rng).unwrap();
        let x = random_tensor(&mut rng, &[2, 3, 16, 16]);
        let proj = projection(&mut rng, 6);
        note("observer", check_network(&observer.net, &x, &proj, GRAD_STEP, Some(300)).unwrap().max_error());
        let disc = Discriminator::new(AlgoMode::Vgaifo, 3, 16, &mut rng).unwrap();
        let x = random_tensor(&mut rng, &[2, 6, 16, 16]);
        let proj = projection(&mut rng, 2);
        note("image discriminator", check_network(&disc.net, &x, &proj, GRAD_STEP, Some(300)).unwrap().max_error());

        // mse
        let pred = random_tensor(&mut rng, &[4, 3]);
        let target = random_tensor(&mut rng, &[4, 3]);
        let (_, grad) = mse_loss(&pred, &target).unwrap();
        let numeric = central_difference(
            |p: &[f64]| mse_loss(&Tensor::new(vec![4, 3], p.to_vec()).unwrap(), &target).unwrap().0,
            pred.data(),
            GRAD_STEP,
        );
        note("mse", max_relative_error(grad.data(), &numeric));

        // binary cross-entropy on logits, both labels
        for label in [true, false] {
            let z = rng.gen_range(-6.0..6.0);
            let (_, g) = bce_with_logits(z, label).unwrap();
            let numeric = central_difference(|v: &[f64]| bce_with_logits(v[0], label).unwrap().0, &[z], GRAD_STEP)[0];
            note("bce", relative_error(g, numeric));
        }

        // Gaussian log-probability in mean and log std
        let mean: Vec<f64> = projection(&mut rng, 2);
        let log_std: Vec<f64> = (0..2).map(|_| rng.gen_range(-1.5..0.5)).collect();
        let action: Vec<f64> = projection(&mut rng, 2);
        let (dm, ds) = gaussian_logprob_grad(&mean, &log_std, &action).unwrap();
        let nm = central_difference(|m: &[f64]| gaussian_logprob(m, &log_std, &action).unwrap(), &mean, GRAD_STEP);
        let ns = central_difference(|s: &[f64]| gaussian_logprob(&mean, s, &action).unwrap(), &log_std, GRAD_STEP);
        note("log-prob", max_relative_error(&dm, &nm).max(max_relative_error(&ds, &ns)));
    }
    let max = worst.values().copied().fold(0.0, f64::max);
    let detail = worst.iter().map(|(k, v)| format!("{k}={v:.1e}")).collect::<Vec<_>>().join(", ");
    report(1, max <= GRAD_TOL, format!("max relative error {max:.2e} <= {GRAD_TOL:e} over {SEEDS} seeds ({detail})"));
}

// ---------------------------------------------------------------- criterion 2

fn random_policy_dataset(pairs: usize, seed: u64) -> ObserverDataset {
    let env = make_env(EnvId::Pendulum, 32).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = ObserverDataset::default();
    let mut episode = 0u64;
    while data.len() < pairs {
        let mut state = env.reset(derive_seed(seed, &[episode]));
        let mut stack = FrameStack::new();
        loop {
            stack.push(env.render(&state));
            data.observations.push(stack.observation().unwrap());
            data.targets.push(env.observe(&state));
            let step = env.step(&state, &[rng.gen_range(-2.0..2.0)]).unwrap();
            if step.done || data.len() == pairs {
                break;
            }
            state = step.next;
        }
        episode += 1;
    }
    data
}

/// In-sample MSE of the least-squares affine map from stacked pixels to the
/// state. Pixels never lit in the data are dropped; a 1e-9 ridge keeps the
/// normal equations positive definite.
fn linear_oracle_mse(data: &ObserverDataset) -> f64 {
    let rows: Vec<Vec<usize>> = data
        .observations
        .iter()
        .map(|o| o.to_vec().iter().enumerate().filter(|(_, &v)| v > 0.5).map(|(i, _)| i).collect())
        .collect();
    let mut active: Vec<usize> = rows.iter().flatten().copied().collect();
    active.sort_unstable();
    active.dedup();
    let column: BTreeMap<usize, usize> = active.iter().enumerate().map(|(c, &p)| (p, c + 1)).collect();
    let p = active.len() + 1;
    let dims = data.targets[0].len();
    let mut xtx = nalgebra::DMatrix::<f64>::zeros(p, p);
    let mut xty = nalgebra::DMatrix::<f64>::zeros(p, dims);
    let features: Vec<Vec<usize>> =
        rows.iter().map(|r| std::iter::once(0).chain(r.iter().map(|i| column[i])).collect()).collect();
    for (f, y) in features.iter().zip(&data.targets) {
        for &a in f {
            for &b in f {
                xtx[(a, b)] += 1.0;
            }
            for d in 0..dims {
                xty[(a, d)] += y[d];
            }
        }
    }
    for i in 0..p {
        xtx[(i, i)] += 1e-9;
    }
    let w = xtx.cholesky().expect("ridge keeps this positive definite").solve(&xty);
    let mut sse = 0.0;
    for (f, y) in features.iter().zip(&data.targets) {
        for d in 0..dims {
            let pred: f64 = f.iter().map(|&a| w[(a, d)]).sum();
            sse += (pred - y[d]).powi(2);
        }
    }
    sse / (data.len() * dims) as f64
}

#[test]
fn criterion_2_observer_learnability() {
    let data = random_policy_dataset(5000, 11);
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut observer = StateObserver::new(32, 3, &mut rng).unwrap();
    let initial = dataset_mse(&observer, &data).unwrap();
    let mut adam = AdamState::for_network(&observer.net, 1e-3);
    train_observer(&mut observer, &mut adam, &data, 50, 64, &mut rng).unwrap();
    let last = dataset_mse(&observer, &data).unwrap();
    let oracle = linear_oracle_mse(&data);
    let pass = last <= 0.1 * initial && last < oracle;
    report(
        2,
        pass,
        format!(
            "initial MSE {initial:.4}, after 50 epochs {last:.5} (ratio {:.4}), pixel least squares {oracle:.5}",
            last / initial
        ),
    );
}

// ---------------------------------------------------------------- criterion 3

fn l2_trend(runs: &Runs) -> (usize, Vec<String>) {
    let mut passing = 0;
    let mut details = Vec::new();
    for seed in 0..SEEDS {
        let rows = &runs[&(AlgoMode::VgaifoSo, seed)].rows;
        let early = rows
            .iter()
            .filter(|r| (1..=10).contains(&r.iteration))
            .filter_map(|r| r.observer_demo_l2)
            .fold(f64::NEG_INFINITY, f64::max);
        let last = rows.last().and_then(|r| r.observer_demo_l2).unwrap();
        if last <= 0.5 * early {
            passing += 1;
        }
        details.push(format!("{last:.3}/{early:.3}"));
    }
    (passing, details)
}

#[test]
fn criterion_3_observer_error_trend() {
    let (passing, details) = l2_trend(smoke_runs());
    report(
        3,
        passing >= 8,
        format!(
            "{passing}/10 seeds with final L2 <= 50% of max over iterations 1-10 ({SMOKE_STEPS} steps; final/max: {})",
            details.join(" ")
        ),
    );
}

#[test]
#[ignore = "500k-step runs, hours on one core"]
fn criterion_3_observer_error_trend_full() {
    let (passing, details) = l2_trend(full_runs());
    report(3, passing >= 8, format!("{passing}/10 seeds at {FULL_STEPS} steps (final/max: {})", details.join(" ")));
}

// ---------------------------------------------------------------- criterion 4

fn final_return(run: &RunSummary) -> f64 {
    run.final_eval_return().expect("last row is evaluated")
}

fn mean_se(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn finals(runs: &Runs, algo: AlgoMode) -> Vec<f64> {
    (0..SEEDS).map(|s| final_return(&runs[&(algo, s)])).collect()
}

/// `(R - R_init) / (R_expert - R_init)`, with `R_init` the run's own
/// evaluation before any training. Returns are costs here (negative), so a
/// plain percentage of the expert return is not meaningful.
fn normalized(run: &RunSummary, value: f64, expert: f64) -> f64 {
    let init = run.rows[0].mean_eval_return.unwrap();
    (value - init) / (expert - init)
}

fn timesteps_to(run: &RunSummary, expert: f64, level: f64) -> Option<u64> {
    run.rows
        .iter()
        .find(|r| r.mean_eval_return.is_some_and(|v| normalized(run, v, expert) >= level))
        .map(|r| r.total_timesteps)
}

#[test]
fn criterion_4_ordering_smoke() {
    let runs = smoke_runs();
    let (g, v, so) = (finals(runs, AlgoMode::Gaifo), finals(runs, AlgoMode::Vgaifo), finals(runs, AlgoMode::VgaifoSo));
    let ((gm, gse), (vm, vse), (sm, sse)) = (mean_se(&g), mean_se(&v), mean_se(&so));
    // relaxed: each ordering may be violated by at most one combined standard error
    let tol_gs = (gse.powi(2) + sse.powi(2)).sqrt();
    let tol_sv = (sse.powi(2) + vse.powi(2)).sqrt();
    let pass = gm >= sm - tol_gs && sm >= vm - tol_sv;
    report(
        4,
        pass,
        format!(
            "smoke {SMOKE_STEPS} steps: mean final return gaifo {gm:.1}±{gse:.1}, vgaifo-so {sm:.1}±{sse:.1}, vgaifo {vm:.1}±{vse:.1}; expert {:.1}",
            expert().checkpoint.final_eval_return
        ),
    );
}

#[test]
#[ignore = "500k-step runs, hours on one core"]
fn criterion_4_ordering_full() {
    let runs = full_runs();
    let expert_return = expert().checkpoint.final_eval_return;
    let (g, v, so) = (finals(runs, AlgoMode::Gaifo), finals(runs, AlgoMode::Vgaifo), finals(runs, AlgoMode::VgaifoSo));
    let (gm, vm, sm) = (mean_se(&g).0, mean_se(&v).0, mean_se(&so).0);
    let so_score =
        (0..SEEDS).map(|s| normalized(&runs[&(AlgoMode::VgaifoSo, s)], so[s as usize], expert_return)).sum::<f64>()
            / SEEDS as f64;
    let faster = (0..SEEDS)
        .filter(|&s| {
            let a = timesteps_to(&runs[&(AlgoMode::VgaifoSo, s)], expert_return, 0.7);
            let b = timesteps_to(&runs[&(AlgoMode::Vgaifo, s)], expert_return, 0.7);
            matches!((a, b), (Some(a), Some(b)) if a <= b) || matches!((a, b), (Some(_), None))
        })
        .count();
    let pass = gm >= sm && sm >= vm && so_score >= 0.7 && faster >= 7;
    report(
        4,
        pass,
        format!(
            "full {FULL_STEPS} steps: gaifo {gm:.1} >= vgaifo-so {sm:.1} >= vgaifo {vm:.1}; vgaifo-so normalized score {so_score:.3} (>= 0.7); vgaifo-so reaches 0.7 no later than vgaifo in {faster}/10 seeds"
        ),
    );
}

// ---------------------------------------------------------------- criterion 5

fn short_config(out: &Path, algo: AlgoMode, demos: &Path) -> ExperimentConfig {
    ExperimentConfig {
        algo,
        seed: 5,
        total_timesteps: 1536,
        horizon: 512,
        eval_interval: 512,
        eval_episodes: 2,
        demos: demos.to_path_buf(),
        demo_count: 2,
        out: out.to_path_buf(),
        ..ExperimentConfig::default()
    }
}

fn checkpoint_bytes(run_dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(run_dir.join("checkpoints"))
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect()
}

fn strip(rows: &[MetricsRow], f: impl Fn(&mut MetricsRow)) -> Vec<MetricsRow> {
    rows.iter()
        .cloned()
        .map(|mut r| {
            f(&mut r);
            r
        })
        .collect()
}

/// Copy of `src` whose analysis section holds a finite garbage pattern.
fn poison_analysis(src: &Path, dst: &Path) {
    let view = load_demos(src, DemoMode::Video).unwrap();
    let mut bytes = fs::read(src).unwrap();
    let g = view.image_size();
    let mut offset = 4 + 4 + 4 + view.env_id().len() + 4 * 3 + 4 * view.num_trajectories();
    let garbage = 1234.5f64.to_le_bytes();
    for len in view.lengths() {
        offset += len * g * g;
        for (i, b) in bytes[offset..offset + len * view.state_dim() * 8].iter_mut().enumerate() {
            *b = garbage[i % 8];
        }
        offset += len * view.state_dim() * 8;
    }
    assert_eq!(offset, bytes.len());
    fs::write(dst, bytes).unwrap();
}

/// Reports perturbed task rewards. Only evaluation and logging read them.
struct PerturbedReward(Box<dyn Environment>);

impl Environment for PerturbedReward {
    fn spec(&self) -> &EnvSpec {
        self.0.spec()
    }
    fn reset(&self, seed: u64) -> EnvState {
        self.0.reset(seed)
    }
    fn step(&self, state: &EnvState, action: &[f64]) -> ifolab::Result<Step> {
        let mut step = self.0.step(state, action)?;
        step.eval_reward = 17.0 - 3.0 * step.eval_reward;
        Ok(step)
    }
    fn observe(&self, state: &EnvState) -> Vec<f64> {
        self.0.observe(state)
    }
    fn render(&self, state: &EnvState) -> Frame {
        self.0.render(state)
    }
}

#[test]
fn criterion_5_information_firewalls() {
    let dir = scratch("firewalls");
    let clean = expert().demos.clone();
    let poisoned = dir.join("poisoned.ifod");
    poison_analysis(&clean, &poisoned);
    let mut failures = Vec::new();

    // (a) demo ground truth reaches analysis code only
    for algo in [AlgoMode::Vgaifo, AlgoMode::VgaifoSo] {
        let a = run_experiment(&short_config(&dir.join("a-clean"), algo, &clean)).unwrap();
        let b = run_experiment(&short_config(&dir.join("a-poison"), algo, &poisoned)).unwrap();
        let no_l2 = |r: &mut MetricsRow| r.observer_demo_l2 = None;
        if strip(&a.rows, no_l2) != strip(&b.rows, no_l2)
            || checkpoint_bytes(&a.run_dir) != checkpoint_bytes(&b.run_dir)
        {
            failures.push(format!("(a) {algo} learner changed with poisoned analysis bytes"));
        }
        if algo == AlgoMode::VgaifoSo
            && a.rows.last().unwrap().observer_demo_l2 == b.rows.last().unwrap().observer_demo_l2
        {
            failures.push("(a) poison did not reach the analysis metric".into());
        }
    }

    // (b) task reward reaches logs only
    for algo in AlgoMode::ALL {
        let a = run_experiment(&short_config(&dir.join("b-clean"), algo, &clean)).unwrap();
        let cfg = short_config(&dir.join("b-perturbed"), algo, &clean);
        let env = PerturbedReward(make_env(EnvId::Pendulum, 32).unwrap());
        let b = run_experiment_with_env(&cfg, &env).unwrap();
        let no_eval = |r: &mut MetricsRow| r.mean_eval_return = None;
        if strip(&a.rows, no_eval) != strip(&b.rows, no_eval)
            || checkpoint_bytes(&a.run_dir) != checkpoint_bytes(&b.run_dir)
        {
            failures.push(format!("(b) {algo} training changed with perturbed task reward"));
        }
        if a.rows[0].mean_eval_return == b.rows[0].mean_eval_return {
            failures.push("(b) perturbation did not reach the evaluation log".into());
        }
    }

    // (c) GAIfO never looks at pixels
    let off = run_experiment(&short_config(&dir.join("c-off"), AlgoMode::Gaifo, &clean)).unwrap();
    let on_cfg = ExperimentConfig { render: true, ..short_config(&dir.join("c-on"), AlgoMode::Gaifo, &clean) };
    let on = run_experiment(&on_cfg).unwrap();
    let off_rows = read_metrics(&off.run_dir.join("metrics.csv")).unwrap();
    let on_rows = read_metrics(&on.run_dir.join("metrics.csv")).unwrap();
    if off_rows != on_rows || checkpoint_bytes(&off.run_dir) != checkpoint_bytes(&on.run_dir) {
        failures.push("(c) gaifo metrics depend on rendering".into());
    }

    let detail = if failures.is_empty() {
        "(a) poisoned analysis section, (b) perturbed task reward, (c) rendering on/off: learners bitwise unchanged"
            .to_string()
    } else {
        failures.join("; ")
    };
    report(5, failures.is_empty(), detail);
}

// ---------------------------------------------------------------- criterion 6

fn points(xs: impl Iterator<Item = f64>) -> PairSet {
    PairSet::States(xs.map(|x| TransitionPair { first: vec![x], second: vec![x] }).collect())
}

#[test]
fn criterion_6_discriminator_direction() {
    let cfg = DiscriminatorConfig { epochs: 30, ..DiscriminatorConfig::default() };
    let mut worst_acc = f64::INFINITY;
    let mut worst_identical = f64::INFINITY;
    let mut ordered = true;
    for seed in 0..SEEDS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let imitator = points((0..256).map(|_| -1.0 + rng.gen_range(-0.3..0.3)));
        let expert = points((0..256).map(|_| 1.0 + rng.gen_range(-0.3..0.3)));
        let mut disc = Discriminator::new(AlgoMode::Gaifo, 1, 16, &mut rng).unwrap();
        let mut adam = AdamState::for_network(&disc.net, cfg.lr);
        discriminator_update(&mut disc, &mut adam, &imitator, &expert, &cfg, &mut rng).unwrap();
        let di = disc.probabilities(&imitator).unwrap();
        let de = disc.probabilities(&expert).unwrap();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        ordered &= mean(&di) > mean(&de);
        let correct = di.iter().filter(|&&d| d > 0.5).count() + de.iter().filter(|&&d| d < 0.5).count();
        worst_acc = worst_acc.min(correct as f64 / 512.0);

        let same = points((0..256).map(|_| rng.gen_range(-1.0..1.0)));
        let mut disc = Discriminator::new(AlgoMode::Gaifo, 1, 16, &mut rng).unwrap();
        let mut adam = AdamState::for_network(&disc.net, cfg.lr);
        discriminator_update(&mut disc, &mut adam, &same, &same, &cfg, &mut rng).unwrap();
        worst_identical = worst_identical.min(discriminator_loss(&disc, &same, &same).unwrap());
    }
    let bound = 2.0 * std::f64::consts::LN_2 - 0.1;
    report(
        6,
        ordered && worst_acc >= 0.95 && worst_identical >= bound,
        format!(
            "mean D(imitator) > mean D(expert) in all seeds: {ordered}; worst accuracy {worst_acc:.3}; worst identical-data loss {worst_identical:.4} >= {bound:.4}"
        ),
    );
}

// ---------------------------------------------------------------- criterion 7

#[test]
fn criterion_7_determinism() {
    let dir = scratch("determinism");
    let mut failures = Vec::new();
    for algo in AlgoMode::ALL {
        let cfg = short_config(&dir, algo, &expert().demos);
        let first = run_experiment(&cfg).unwrap();
        let a = fs::read(first.run_dir.join("metrics.csv")).unwrap();
        run_experiment(&cfg).unwrap();
        let b = fs::read(first.run_dir.join("metrics.csv")).unwrap();
        if a != b {
            failures.push(format!("{algo} metrics differ between repeats"));
        }
    }
    let original = fs::read(&expert().demos).unwrap();
    let mut rewritten = Vec::new();
    load_demos(&expert().demos, DemoMode::Analysis).unwrap().to_file().write_to(&mut rewritten).unwrap();
    if rewritten != original {
        failures.push("demo file does not round-trip".into());
    }
    let env = make_env(EnvId::Pendulum, 32).unwrap();
    let mut again = Vec::new();
    record_demos(&expert().checkpoint, env.as_ref(), 10, 1000).unwrap().write_to(&mut again).unwrap();
    if again != original {
        failures.push("re-recording changed the demo bytes".into());
    }
    let detail = if failures.is_empty() {
        "repeated runs give identical metrics.csv bytes for all three algorithms; demo files round-trip bitwise"
            .to_string()
    } else {
        failures.join("; ")
    };
    report(7, failures.is_empty(), detail);
}

// ---------------------------------------------------------------- criterion 8

#[test]
fn criterion_8_reward_bounds() {
    let (lo_bound, hi_bound) = RewardConfig::default().bounds();
    let runs = smoke_runs();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for run in runs.values() {
        let (a, b) = run.reward_range.unwrap();
        lo = lo.min(a);
        hi = hi.max(b);
    }
    report(
        8,
        lo >= 0.0 && lo >= lo_bound && hi <= hi_bound,
        format!("{} runs, synthesized rewards in [{lo:.3e}, {hi:.4}] within [0, {hi_bound:.4}]", runs.len()),
    );
}
