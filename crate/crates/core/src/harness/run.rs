use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use super::{ExperimentConfig, MetricsRow, MetricsWriter};
use crate::ail::{AlgoMode, Imitator};
use crate::demos::{load_demos, DemoMode, DemoView};
use crate::diffnet::checkpoint::save_network;
use crate::envs::{make_env, Environment};
use crate::observer::demo_prediction_error;
use crate::ppo::evaluate_policy;
use crate::seed::{derive_seed, tag};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct RunSummary {
    pub run_dir: PathBuf,
    pub rows: Vec<MetricsRow>,
    pub iterations: u64,
    pub total_timesteps: u64,
    /// Smallest and largest synthesized reward seen over the run.
    pub reward_range: Option<(f64, f64)>,
}

impl RunSummary {
    /// Evaluation return logged at the last row.
    pub fn final_eval_return(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.mean_eval_return)
    }
}

/// Runs one imitation experiment in `<out>/<algo>/<seed>`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunSummary> {
    let env = make_env(cfg.env, cfg.image_size).map_err(|e| abort(cfg, e))?;
    run_experiment_with_env(cfg, env.as_ref())
}

/// [`run_experiment`] against a caller-supplied environment.
pub fn run_experiment_with_env(cfg: &ExperimentConfig, env: &dyn Environment) -> Result<RunSummary> {
    run(cfg, env).map_err(|e| abort(cfg, e))
}

fn abort(cfg: &ExperimentConfig, e: Error) -> Error {
    Error::Aborted { config: cfg.to_text(), source: Box::new(e) }
}

/// Demo view the learner trains on, restricted to `demo_count`
/// trajectories. GAIfO reads expert states, so it opens the analysis
/// section; the visual modes never do.
pub fn learner_demos(cfg: &ExperimentConfig) -> Result<DemoView> {
    let mode = if cfg.algo == AlgoMode::Gaifo { DemoMode::Analysis } else { DemoMode::Video };
    let view = load_demos(&cfg.demos, mode).map_err(|e| match e {
        Error::MissingAnalysis => Error::Precondition(format!(
            "gaifo needs privileged expert states but {} has no analysis section",
            cfg.demos.display()
        )),
        other => other,
    })?;
    check_demos(cfg, &view)?;
    view.take(cfg.demo_count)
}

fn check_demos(cfg: &ExperimentConfig, view: &DemoView) -> Result<()> {
    if view.env_id() != cfg.env.as_str() {
        return Err(Error::EnvMismatch { expected: cfg.env.to_string(), found: view.env_id().into() });
    }
    if view.image_size() != cfg.image_size {
        return Err(Error::Precondition(format!(
            "demos were rendered at G={}, run uses G={}",
            view.image_size(),
            cfg.image_size
        )));
    }
    Ok(())
}

fn run(cfg: &ExperimentConfig, env: &dyn Environment) -> Result<RunSummary> {
    cfg.validate()?;
    let spec = env.spec();
    if spec.env_id != cfg.env.as_str() || spec.image_size != cfg.image_size {
        return Err(Error::EnvMismatch {
            expected: format!("{} at G={}", cfg.env, cfg.image_size),
            found: format!("{} at G={}", spec.env_id, spec.image_size),
        });
    }
    let demos = learner_demos(cfg)?;
    // ground truth for the observer error metric; evaluation only
    let analysis = if cfg.algo.uses_observer() && demos.has_analysis_section() {
        Some(load_demos(&cfg.demos, DemoMode::Analysis)?.take(cfg.demo_count)?)
    } else {
        None
    };

    let run_dir = cfg.run_dir();
    fs::create_dir_all(&run_dir)?;
    let mut metrics = MetricsWriter::create(&run_dir.join("metrics.csv"), &cfg.to_text())?;
    let mut timing = fs::File::create(run_dir.join("timing.csv"))?;
    writeln!(timing, "iteration,wall_clock_seconds")?;
    let started = Instant::now();

    let mut imitator = Imitator::new(cfg.imitation(), env, cfg.seed)?;
    let eval_seed = derive_seed(cfg.seed, &[tag::EVALUATION]);
    let observer_l2 = |im: &Imitator| -> Result<Option<f64>> {
        match (im.observer.as_ref(), analysis.as_ref()) {
            (Some(o), Some(a)) => demo_prediction_error(o, a).map(Some),
            _ => Ok(None),
        }
    };

    let mut rows = vec![MetricsRow {
        iteration: 0,
        total_timesteps: 0,
        mean_eval_return: Some(evaluate_policy(&imitator.policy, env, cfg.eval_episodes, eval_seed)?),
        observer_demo_l2: observer_l2(&imitator)?,
        ..MetricsRow::default()
    }];
    metrics.push(&rows[0])?;
    writeln!(timing, "0,{}", started.elapsed().as_secs_f64())?;

    let mut reward_range: Option<(f64, f64)> = None;
    while imitator.total_timesteps < cfg.total_timesteps {
        let before = imitator.total_timesteps;
        let stats = imitator.run_iteration(env, &demos)?;
        let (lo, hi) = reward_range.unwrap_or((f64::INFINITY, f64::NEG_INFINITY));
        reward_range = Some((lo.min(stats.min_synthesized_reward), hi.max(stats.max_synthesized_reward)));
        let last = stats.total_timesteps >= cfg.total_timesteps;
        let crossed = stats.total_timesteps / cfg.eval_interval > before / cfg.eval_interval;
        let row = MetricsRow {
            iteration: stats.iteration,
            total_timesteps: stats.total_timesteps,
            mean_eval_return: if crossed || last {
                Some(evaluate_policy(&imitator.policy, env, cfg.eval_episodes, eval_seed)?)
            } else {
                None
            },
            discriminator_loss: Some(stats.discriminator_loss),
            mean_synthesized_reward: Some(stats.mean_synthesized_reward),
            observer_train_mse: stats.observer_train_mse,
            observer_demo_l2: observer_l2(&imitator)?,
        };
        metrics.push(&row)?;
        writeln!(timing, "{},{}", stats.iteration, started.elapsed().as_secs_f64())?;
        rows.push(row);
    }

    let ckpt = run_dir.join("checkpoints");
    fs::create_dir_all(&ckpt)?;
    save_network(&imitator.policy.mean_net, ckpt.join("policy.ifnw"))?;
    save_network(&imitator.value.net, ckpt.join("value.ifnw"))?;
    save_network(&imitator.disc.net, ckpt.join("discriminator.ifnw"))?;
    if let Some(o) = &imitator.observer {
        save_network(&o.net, ckpt.join("observer.ifnw"))?;
    }
    let log_std: Vec<String> = imitator.policy.log_std().iter().map(f64::to_string).collect();
    fs::write(ckpt.join("policy_log_std.txt"), log_std.join(",") + "\n")?;

    Ok(RunSummary {
        run_dir,
        rows,
        iterations: imitator.iteration,
        total_timesteps: imitator.total_timesteps,
        reward_range,
    })
}
