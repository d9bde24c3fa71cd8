//! Long-format tables for plotting.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harness::runlog::{write_csv, RunLog};
use crate::observe::moving_average;

/// Moving-average window of exported training curves.
pub const CURVE_WINDOW: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExportKind {
    /// `episode, metric, value, moving_average` for E_N, its percentage and reward.
    TrainingCurve,
    /// `episode, t, time, variable, value` for every logged step.
    TimeSeries,
    /// `episode, mode, n, population` at episode ends.
    FockStats,
}

impl FromStr for ExportKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "training-curve" => Ok(ExportKind::TrainingCurve),
            "time-series" => Ok(ExportKind::TimeSeries),
            "fock-stats" => Ok(ExportKind::FockStats),
            other => Err(Error::UnknownExportKind(other.to_string())),
        }
    }
}

impl ExportKind {
    pub fn file_name(self) -> &'static str {
        match self {
            ExportKind::TrainingCurve => "training_curve.csv",
            ExportKind::TimeSeries => "time_series.csv",
            ExportKind::FockStats => "fock_stats.csv",
        }
    }
}

#[derive(Serialize)]
struct CurveRow<'a> {
    episode: usize,
    metric: &'a str,
    value: f64,
    moving_average: f64,
}

#[derive(Serialize)]
struct SeriesRow<'a> {
    episode: usize,
    t: usize,
    time: f64,
    variable: &'a str,
    value: f64,
}

#[derive(Serialize)]
struct FockOut<'a> {
    episode: usize,
    mode: &'a str,
    n: usize,
    population: f64,
}

/// Writes the `kind` table of `log` into `out_dir`; returns the file path.
pub fn export_plot_data(log: &RunLog, kind: &str, out_dir: &Path) -> Result<PathBuf> {
    let kind: ExportKind = kind.parse()?;
    std::fs::create_dir_all(out_dir)?;
    let path = out_dir.join(kind.file_name());
    let hash = &log.meta.config_hash;
    match kind {
        ExportKind::TrainingCurve => {
            let columns: [(&str, Vec<f64>); 3] = [
                ("log_negativity", log.episodes.iter().map(|e| e.mean_log_negativity).collect()),
                ("log_negativity_percent", log.episodes.iter().map(|e| e.log_negativity_percent).collect()),
                ("reward", log.episodes.iter().map(|e| e.mean_reward).collect()),
            ];
            let mut rows = Vec::new();
            for (metric, values) in &columns {
                let ma = moving_average(values, CURVE_WINDOW);
                rows.extend(log.episodes.iter().zip(values.iter().zip(&ma)).map(|(e, (&value, &m))| CurveRow {
                    episode: e.episode,
                    metric,
                    value,
                    moving_average: m,
                }));
            }
            write_csv(&path, hash, &["episode", "metric", "value", "moving_average"], &rows)?;
        }
        ExportKind::TimeSeries => {
            let mut rows = Vec::new();
            for s in &log.steps {
                let vars = [
                    ("observation", Some(s.observation)),
                    ("g", s.g),
                    ("delta", s.delta),
                    ("alpha_l", s.alpha_l),
                    ("reward", Some(s.reward)),
                    ("log_negativity", Some(s.log_negativity)),
                    ("photon_number", Some(s.photon_number)),
                    ("phonon_number", Some(s.phonon_number)),
                    ("photocurrent", s.photocurrent),
                ];
                rows.extend(vars.into_iter().filter_map(|(variable, v)| {
                    v.map(|value| SeriesRow { episode: s.episode, t: s.t, time: s.time, variable, value })
                }));
            }
            write_csv(&path, hash, &["episode", "t", "time", "variable", "value"], &rows)?;
        }
        ExportKind::FockStats => {
            let rows: Vec<FockOut> =
                log.fock.iter().map(|f| FockOut { episode: f.episode, mode: &f.mode, n: f.n, population: f.population }).collect();
            write_csv(&path, hash, &["episode", "mode", "n", "population"], &rows)?;
        }
    }
    Ok(path)
}
