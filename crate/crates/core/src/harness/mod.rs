//! Experiment orchestration: run configs, per-iteration metrics CSVs,
//! seed/algorithm/demo-count sweeps and curve extraction.
//!
//! A run writes `<out>/<algo>/<seed>/metrics.csv` (config echoed as `#`
//! comments, then one row at timestep 0 and one per iteration),
//! `timing.csv` with wall-clock seconds per row, and `checkpoints/`.
//! Wall-clock time lives in its own file so that the metrics of repeated
//! runs compare byte for byte. Evaluation episodes are not counted as
//! training timesteps.

mod config;
mod metrics;
mod run;
mod sweep;

pub use config::{ExperimentConfig, CONFIG_KEYS};
pub use metrics::{curve_extract, read_config_echo, read_metrics, MetricsRow, MetricsWriter, METRIC_COLUMNS};
pub use run::{learner_demos, run_experiment, run_experiment_with_env, RunSummary};
pub use sweep::{mean_stderr, sweep, RunRecord, SweepReport, SweepSpec};
