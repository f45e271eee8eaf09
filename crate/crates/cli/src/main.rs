use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Arg, ArgMatches, Args, Command, FromArgMatches, Parser, Subcommand};
use ifolab::ail::AlgoMode;
use ifolab::demos::{record_demos, train_expert, ExpertCheckpoint, ExpertConfig};
use ifolab::envs::{make_env, EnvId};
use ifolab::harness::{curve_extract, run_experiment, sweep, ExperimentConfig, SweepSpec, CONFIG_KEYS};

/// Imitation from observation: experts, demonstrations, imitation runs and sweeps.
#[derive(Parser)]
#[command(name = "ifolab", version)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Train a PPO expert on the task reward and save its checkpoint.
    TrainExpert {
        #[arg(long, default_value = "pendulum")]
        env: EnvId,
        #[arg(long, default_value_t = 32)]
        image_size: usize,
        #[arg(long, default_value_t = 200_000)]
        timesteps: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Checkpoint directory.
        #[arg(long, default_value = "expert")]
        out: PathBuf,
    },
    /// Roll out an expert's mean action and write a demonstration file.
    RecordDemos {
        /// Checkpoint directory written by `train-expert`.
        #[arg(long)]
        expert: PathBuf,
        #[arg(long, default_value_t = 10)]
        n: usize,
        #[arg(long, default_value_t = 32)]
        image_size: usize,
        #[arg(long, default_value_t = 1000)]
        seed: u64,
        #[arg(long, default_value = "demos.ifod")]
        out: PathBuf,
    },
    /// Run one imitation experiment.
    Imitate(ConfigArgs),
    /// Run every combination of seeds, algorithms and demonstration counts.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// Comma-separated seeds or a range such as `0..10`.
        #[arg(long)]
        seeds: Option<String>,
        /// Comma-separated algorithms.
        #[arg(long, value_delimiter = ',')]
        algos: Vec<AlgoMode>,
        /// Comma-separated demonstration counts.
        #[arg(long, value_delimiter = ',')]
        demo_counts: Vec<usize>,
    },
    /// Print one metric of a run as `total_timesteps,value` lines.
    Extract {
        /// Run directory containing metrics.csv.
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        metric: String,
    },
}

/// `--config <file>` plus one flag per configuration key.
/// Precedence: flag, then file, then built-in default.
struct ConfigArgs {
    file: Option<PathBuf>,
    overrides: Vec<(&'static str, String)>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let overrides = self.overrides.iter().map(|(k, v)| (*k, v.as_str()));
        Ok(ExperimentConfig::resolve(self.file.as_deref(), overrides)?)
    }
}

impl FromArgMatches for ConfigArgs {
    fn from_arg_matches(m: &ArgMatches) -> Result<Self, clap::Error> {
        let overrides = CONFIG_KEYS.iter().filter_map(|&k| m.get_one::<String>(k).map(|v| (k, v.clone()))).collect();
        Ok(Self { file: m.get_one::<PathBuf>("config").cloned(), overrides })
    }

    fn update_from_arg_matches(&mut self, m: &ArgMatches) -> Result<(), clap::Error> {
        *self = Self::from_arg_matches(m)?;
        Ok(())
    }
}

impl Args for ConfigArgs {
    fn augment_args(cmd: Command) -> Command {
        let cmd = cmd.arg(
            Arg::new("config")
                .long("config")
                .value_name("FILE")
                .value_parser(clap::value_parser!(PathBuf))
                .help("`key = value` configuration file"),
        );
        CONFIG_KEYS.iter().fold(cmd, |cmd, &key| {
            cmd.arg(Arg::new(key).long(key.replace('_', "-")).value_name("VALUE").help(format!("Overrides `{key}`")))
        })
    }

    fn augment_args_for_update(cmd: Command) -> Command {
        Self::augment_args(cmd)
    }
}

fn parse_seeds(text: &str) -> Result<Vec<u64>> {
    if let Some((a, b)) = text.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse()?, b.trim().parse()?);
        if a >= b {
            bail!("empty seed range {text}");
        }
        return Ok((a..b).collect());
    }
    text.split(',').map(|s| s.trim().parse().with_context(|| format!("bad seed {s:?}"))).collect()
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Cmd::TrainExpert { env, image_size, timesteps, seed, out } => {
            let env = make_env(env, image_size)?;
            let ck = train_expert(env.as_ref(), timesteps, seed, &ExpertConfig::default())?;
            ck.save(&out)?;
            println!(
                "expert saved to {} (iteration {}, mean return {:.2} over {} episodes)",
                out.display(),
                ck.selected_iteration,
                ck.final_eval_return,
                ck.eval_episodes
            );
        }
        Cmd::RecordDemos { expert, n, image_size, seed, out } => {
            let ck = ExpertCheckpoint::load(&expert)?;
            let env = make_env(ck.env_id.parse()?, image_size)?;
            let file = record_demos(&ck, env.as_ref(), n, seed)?;
            file.save(&out)?;
            println!("{n} trajectories written to {}", out.display());
        }
        Cmd::Imitate(args) => {
            let cfg = args.resolve()?;
            let summary = run_experiment(&cfg)?;
            println!("run written to {}", summary.run_dir.display());
            if let Some(r) = summary.final_eval_return() {
                println!("final mean evaluation return {r:.2} after {} steps", summary.total_timesteps);
            }
        }
        Cmd::Sweep { config, seeds, algos, demo_counts } => {
            let base = config.resolve()?;
            let seeds = seeds.as_deref().map(parse_seeds).transpose()?.unwrap_or_default();
            let report = sweep(&base, &SweepSpec { seeds, algos, demo_counts })?;
            let failed = report.runs.iter().filter(|r| r.outcome.is_err()).count();
            println!("{} runs, {failed} failed; summaries in {}", report.runs.len(), report.out.display());
        }
        Cmd::Extract { run, metric } => {
            println!("total_timesteps,{metric}");
            for (t, v) in curve_extract(&run, &metric)? {
                println!("{t},{v}");
            }
        }
    }
    Ok(())
}
