use std::collections::BTreeMap;
use std::fs;
use std::path::PathBuf;

use super::{run_experiment, ExperimentConfig, MetricsRow, METRIC_COLUMNS};
use crate::ail::AlgoMode;
use crate::Result;

/// Axes of a sweep. The cross product of all three is run; an axis left
/// empty takes the base config's single value.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SweepSpec {
    pub seeds: Vec<u64>,
    pub algos: Vec<AlgoMode>,
    pub demo_counts: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub algo: AlgoMode,
    pub demo_count: usize,
    pub seed: u64,
    pub run_dir: PathBuf,
    /// Logged rows, or the error that stopped the run.
    pub outcome: std::result::Result<Vec<MetricsRow>, String>,
}

impl RunRecord {
    pub fn final_eval_return(&self) -> Option<f64> {
        self.outcome.as_ref().ok()?.last()?.mean_eval_return
    }
}

#[derive(Clone, Debug)]
pub struct SweepReport {
    pub runs: Vec<RunRecord>,
    pub out: PathBuf,
}

/// Mean and standard error. The standard error needs two samples.
pub fn mean_stderr(values: &[f64]) -> Option<(f64, Option<f64>)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return Some((mean, None));
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, Some((var / n).sqrt())))
}

fn or_base<T: Clone>(axis: &[T], base: T) -> Vec<T> {
    if axis.is_empty() {
        vec![base]
    } else {
        axis.to_vec()
    }
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// Runs the cross product sequentially. A failed run is recorded in
/// `runs.csv` and left out of the aggregates, where cells without any
/// successful run read `NA`.
///
/// Outputs under `base.out`: each run in `<algo>/<seed>` (inside
/// `demos-<n>/` when sweeping demo counts), `runs.csv`, `aggregate.csv`
/// with per-timestep mean and standard error of every metric, and
/// `final.csv` with the final evaluation return per algorithm and count.
pub fn sweep(base: &ExperimentConfig, spec: &SweepSpec) -> Result<SweepReport> {
    let seeds = or_base(&spec.seeds, base.seed);
    let algos = or_base(&spec.algos, base.algo);
    let counts = or_base(&spec.demo_counts, base.demo_count);
    fs::create_dir_all(&base.out)?;

    let mut runs = Vec::new();
    for &algo in &algos {
        for &demo_count in &counts {
            for &seed in &seeds {
                let mut cfg = base.clone();
                cfg.algo = algo;
                cfg.seed = seed;
                cfg.demo_count = demo_count;
                if counts.len() > 1 {
                    cfg.out = base.out.join(format!("demos-{demo_count}"));
                }
                let outcome = run_experiment(&cfg).map(|s| s.rows).map_err(|e| e.root().to_string());
                runs.push(RunRecord { algo, demo_count, seed, run_dir: cfg.run_dir(), outcome });
            }
        }
    }
    let report = SweepReport { runs, out: base.out.clone() };
    report.write()?;
    Ok(report)
}

impl SweepReport {
    fn write(&self) -> Result<()> {
        let mut w = csv::Writer::from_path(self.out.join("runs.csv"))?;
        w.write_record(["algo", "demo_count", "seed", "status", "final_eval_return", "run_dir", "error"])?;
        for r in &self.runs {
            let (status, err) = match &r.outcome {
                Ok(_) => ("ok", String::new()),
                Err(e) => ("failed", e.clone()),
            };
            w.write_record([
                r.algo.to_string(),
                r.demo_count.to_string(),
                r.seed.to_string(),
                status.to_string(),
                cell(r.final_eval_return()),
                r.run_dir.display().to_string(),
                err,
            ])?;
        }
        w.flush()?;

        let mut points: BTreeMap<(String, usize, &str, u64), Vec<f64>> = BTreeMap::new();
        let mut finals: BTreeMap<(String, usize), (Vec<f64>, usize)> = BTreeMap::new();
        for r in &self.runs {
            let entry = finals.entry((r.algo.to_string(), r.demo_count)).or_default();
            match (&r.outcome, r.final_eval_return()) {
                (Ok(rows), Some(fin)) => {
                    entry.0.push(fin);
                    for row in rows {
                        for &m in METRIC_COLUMNS {
                            if let Some(v) = row.metric(m)? {
                                points
                                    .entry((r.algo.to_string(), r.demo_count, m, row.total_timesteps))
                                    .or_default()
                                    .push(v);
                            }
                        }
                    }
                }
                _ => entry.1 += 1,
            }
        }

        let mut w = csv::Writer::from_path(self.out.join("aggregate.csv"))?;
        w.write_record(["algo", "demo_count", "metric", "total_timesteps", "mean", "stderr", "n"])?;
        for ((algo, count, metric, ts), values) in &points {
            let (mean, se) = mean_stderr(values).expect("points are never empty");
            w.write_record([
                algo.clone(),
                count.to_string(),
                metric.to_string(),
                ts.to_string(),
                mean.to_string(),
                cell(se),
                values.len().to_string(),
            ])?;
        }
        w.flush()?;

        let mut w = csv::Writer::from_path(self.out.join("final.csv"))?;
        w.write_record(["algo", "demo_count", "mean_final_return", "stderr", "n", "failed"])?;
        for ((algo, count), (values, failed)) in &finals {
            let stats = mean_stderr(values);
            w.write_record([
                algo.clone(),
                count.to_string(),
                cell(stats.map(|s| s.0)),
                cell(stats.and_then(|s| s.1)),
                values.len().to_string(),
                failed.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
