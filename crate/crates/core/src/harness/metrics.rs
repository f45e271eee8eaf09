use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::{Error, Result};

/// Metric columns after `iteration` and `total_timesteps`.
pub const METRIC_COLUMNS: &[&str] =
    &["mean_eval_return", "discriminator_loss", "mean_synthesized_reward", "observer_train_mse", "observer_demo_L2"];

/// One logged point. Absent metrics are written as empty cells.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricsRow {
    pub iteration: u64,
    pub total_timesteps: u64,
    pub mean_eval_return: Option<f64>,
    pub discriminator_loss: Option<f64>,
    pub mean_synthesized_reward: Option<f64>,
    pub observer_train_mse: Option<f64>,
    pub observer_demo_l2: Option<f64>,
}

impl MetricsRow {
    pub fn metric(&self, name: &str) -> Result<Option<f64>> {
        Ok(match name {
            "mean_eval_return" => self.mean_eval_return,
            "discriminator_loss" => self.discriminator_loss,
            "mean_synthesized_reward" => self.mean_synthesized_reward,
            "observer_train_mse" => self.observer_train_mse,
            "observer_demo_L2" => self.observer_demo_l2,
            _ => return Err(Error::UnknownMetric(name.into())),
        })
    }

    fn metric_mut(&mut self, name: &str) -> Option<&mut Option<f64>> {
        Some(match name {
            "mean_eval_return" => &mut self.mean_eval_return,
            "discriminator_loss" => &mut self.discriminator_loss,
            "mean_synthesized_reward" => &mut self.mean_synthesized_reward,
            "observer_train_mse" => &mut self.observer_train_mse,
            "observer_demo_L2" => &mut self.observer_demo_l2,
            _ => return None,
        })
    }

    fn cells(&self) -> Vec<String> {
        let mut out = vec![self.iteration.to_string(), self.total_timesteps.to_string()];
        for name in METRIC_COLUMNS {
            out.push(self.metric(name).expect("listed metric").map(|v| v.to_string()).unwrap_or_default());
        }
        out
    }
}

/// Streams `metrics.csv`: `# key = value` config lines, a header row, then
/// one row per call to [`MetricsWriter::push`].
pub struct MetricsWriter {
    csv: csv::Writer<BufWriter<File>>,
}

impl MetricsWriter {
    pub fn create(path: &Path, config_echo: &str) -> Result<Self> {
        let mut file = BufWriter::new(File::create(path)?);
        for line in config_echo.lines() {
            writeln!(file, "# {line}")?;
        }
        let mut csv = csv::Writer::from_writer(file);
        let mut header = vec!["iteration", "total_timesteps"];
        header.extend_from_slice(METRIC_COLUMNS);
        csv.write_record(&header)?;
        csv.flush()?;
        Ok(Self { csv })
    }

    pub fn push(&mut self, row: &MetricsRow) -> Result<()> {
        self.csv.write_record(row.cells())?;
        self.csv.flush()?;
        Ok(())
    }
}

/// The `#` config echo of a metrics file, without the markers.
pub fn read_config_echo(path: &Path) -> Result<String> {
    let mut out = String::new();
    for line in BufReader::new(File::open(path)?).lines() {
        let line = line?;
        match line.strip_prefix("# ") {
            Some(rest) => {
                out.push_str(rest);
                out.push('\n');
            }
            None => break,
        }
    }
    Ok(out)
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    let mut reader = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let header: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let bad = |msg: String| Error::Format { offset: 0, message: msg };
    if header.len() < 2 || header[0] != "iteration" || header[1] != "total_timesteps" {
        return Err(bad(format!("{}: unexpected header {header:?}", path.display())));
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record?;
        let offset = record.position().map_or(0, |p| p.byte());
        let num = |i: usize| -> Result<u64> {
            record[i].parse().map_err(|_| Error::Format { offset, message: format!("bad integer {:?}", &record[i]) })
        };
        let mut row = MetricsRow { iteration: num(0)?, total_timesteps: num(1)?, ..MetricsRow::default() };
        for (i, name) in header.iter().enumerate().skip(2) {
            let cell = record.get(i).unwrap_or("");
            if cell.is_empty() {
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|_| Error::Format { offset, message: format!("bad number {cell:?} in {name}") })?;
            if let Some(slot) = row.metric_mut(name) {
                *slot = Some(v);
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// `(total_timesteps, value)` for every row where `metric` was logged, in
/// file order and unsmoothed.
pub fn curve_extract(run_dir: impl AsRef<Path>, metric: &str) -> Result<Vec<(u64, f64)>> {
    if !METRIC_COLUMNS.contains(&metric) {
        return Err(Error::UnknownMetric(metric.into()));
    }
    let rows = read_metrics(&run_dir.as_ref().join("metrics.csv"))?;
    let series: Vec<(u64, f64)> =
        rows.iter().filter_map(|r| r.metric(metric).ok().flatten().map(|v| (r.total_timesteps, v))).collect();
    if series.is_empty() {
        return Err(Error::MetricAbsent(metric.into()));
    }
    Ok(series)
}
