//! Run logs: per-episode and per-step CSV tables plus a TOML sidecar.
//!
//! Every CSV starts with a `# config_hash=<hex>` comment line followed by
//! the header, so files remain readable by any CSV reader that skips
//! comments.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dynamics::ControlAction;
use crate::env::StepRecord;
use crate::error::{Error, Result};
use crate::harness::config::ExperimentConfig;
use crate::observe::{episode_mean, metrics, percent_of_ln2, EpisodeStats, Metrics};

pub const EPISODES_FILE: &str = "episodes.csv";
pub const STEPS_FILE: &str = "steps.csv";
pub const FOCK_FILE: &str = "fock.csv";
pub const META_FILE: &str = "run.toml";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRow {
    pub episode: usize,
    /// Parallel environment that ran the episode.
    pub env: usize,
    pub mean_log_negativity: f64,
    pub mean_reward: f64,
    pub log_negativity_percent: f64,
}

pub const EPISODE_HEADER: &[&str] = &["episode", "env", "mean_log_negativity", "mean_reward", "log_negativity_percent"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRow {
    pub episode: usize,
    pub t: usize,
    pub time: f64,
    pub observation: f64,
    pub g: Option<f64>,
    pub delta: Option<f64>,
    pub alpha_l: Option<f64>,
    pub reward: f64,
    pub log_negativity: f64,
    pub photon_number: f64,
    pub phonon_number: f64,
    pub photocurrent: Option<f64>,
}

pub const STEP_HEADER: &[&str] = &[
    "episode",
    "t",
    "time",
    "observation",
    "g",
    "delta",
    "alpha_l",
    "reward",
    "log_negativity",
    "photon_number",
    "phonon_number",
    "photocurrent",
];

impl StepRow {
    pub fn from_record(episode: usize, dt: f64, r: &StepRecord) -> Self {
        let (g, delta, alpha_l) = match r.action {
            ControlAction::Linear { g } => (Some(g), None, None),
            ControlAction::Nonlinear { delta, alpha_l } => (None, Some(delta), Some(alpha_l)),
        };
        StepRow {
            episode,
            t: r.t,
            time: r.t as f64 * dt,
            observation: r.observation.first().copied().unwrap_or(f64::NAN),
            g,
            delta,
            alpha_l,
            reward: r.reward,
            log_negativity: r.log_negativity,
            photon_number: r.photon_number,
            phonon_number: r.phonon_number,
            photocurrent: r.raw_photocurrent,
        }
    }
}

/// End-of-episode occupation of one Fock level.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FockRow {
    pub episode: usize,
    /// `cavity` or `mechanical`.
    pub mode: String,
    pub n: usize,
    pub population: f64,
}

pub const FOCK_HEADER: &[&str] = &["episode", "mode", "n", "population"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub command: String,
    pub crate_version: String,
    pub config_hash: String,
    pub episodes: usize,
    pub metrics: Option<Metrics>,
    /// Command-specific scalars, such as a selected feedback gain.
    pub extra: BTreeMap<String, f64>,
    pub config: ExperimentConfig,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunLog {
    pub meta: RunMeta,
    pub episodes: Vec<EpisodeRow>,
    pub steps: Vec<StepRow>,
    pub fock: Vec<FockRow>,
}

impl RunLog {
    pub fn new(command: &str, config: &ExperimentConfig) -> Result<Self> {
        Ok(RunLog {
            meta: RunMeta {
                command: command.to_string(),
                crate_version: env!("CARGO_PKG_VERSION").to_string(),
                config_hash: config.hash()?,
                episodes: 0,
                metrics: None,
                extra: BTreeMap::new(),
                config: config.clone(),
            },
            episodes: Vec::new(),
            steps: Vec::new(),
            fock: Vec::new(),
        })
    }

    /// Appends one finished episode; returns its index.
    pub fn push_episode(&mut self, env: usize, records: &[StepRecord], keep_steps: bool) -> usize {
        let episode = self.episodes.len();
        let en: Vec<f64> = records.iter().map(|r| r.log_negativity).collect();
        let rewards: Vec<f64> = records.iter().map(|r| r.reward).collect();
        let mean_en = episode_mean(&en);
        self.episodes.push(EpisodeRow {
            episode,
            env,
            mean_log_negativity: mean_en,
            mean_reward: episode_mean(&rewards),
            log_negativity_percent: percent_of_ln2(mean_en),
        });
        if keep_steps {
            let dt = self.meta.config.env.physics().dt;
            self.steps.extend(records.iter().map(|r| StepRow::from_record(episode, dt, r)));
        }
        episode
    }

    pub fn push_fock(&mut self, episode: usize, cavity: &[f64], mechanical: &[f64]) {
        for (mode, pops) in [("cavity", cavity), ("mechanical", mechanical)] {
            self.fock.extend(pops.iter().enumerate().map(|(n, &p)| FockRow { episode, mode: mode.into(), n, population: p }));
        }
    }

    pub fn episode_stats(&self) -> Vec<EpisodeStats> {
        self.episodes
            .iter()
            .map(|e| EpisodeStats { episode: e.episode, mean_log_negativity: e.mean_log_negativity, mean_reward: e.mean_reward })
            .collect()
    }

    /// Recomputes the summary from the episode rows.
    pub fn finalize(&mut self) -> Result<()> {
        self.meta.episodes = self.episodes.len();
        self.meta.metrics = if self.episodes.is_empty() { None } else { Some(metrics(&self.episode_stats())?) };
        Ok(())
    }

    /// Checks that the stored summary follows from the stored rows.
    pub fn check_consistency(&self) -> Result<()> {
        let mut fresh = self.clone();
        fresh.finalize()?;
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()));
        let ok = fresh.meta.episodes == self.meta.episodes
            && match (fresh.meta.metrics, self.meta.metrics) {
                (None, None) => true,
                (Some(a), Some(b)) => {
                    a.window_len == b.window_len
                        && close(a.window_log_negativity, b.window_log_negativity)
                        && close(a.window_log_negativity_std, b.window_log_negativity_std)
                        && close(a.last_episode_log_negativity, b.last_episode_log_negativity)
                        && close(a.last_episode_reward, b.last_episode_reward)
                }
                _ => false,
            };
        let rows_ok = self.episodes.iter().enumerate().all(|(i, e)| e.episode == i && close(e.log_negativity_percent, percent_of_ln2(e.mean_log_negativity)));
        if ok && rows_ok {
            Ok(())
        } else {
            Err(Error::Config("run log summary does not match its episode rows".into()))
        }
    }

    pub fn metrics(&self) -> Option<Metrics> {
        self.meta.metrics
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let hash = &self.meta.config_hash;
        write_csv(&dir.join(EPISODES_FILE), hash, EPISODE_HEADER, &self.episodes)?;
        write_csv(&dir.join(STEPS_FILE), hash, STEP_HEADER, &self.steps)?;
        write_csv(&dir.join(FOCK_FILE), hash, FOCK_HEADER, &self.fock)?;
        fs::write(dir.join(META_FILE), toml::to_string(&self.meta)?)?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let meta: RunMeta = toml::from_str(&fs::read_to_string(dir.join(META_FILE))?)?;
        let hash = meta.config_hash.clone();
        Ok(RunLog {
            episodes: read_csv(&dir.join(EPISODES_FILE), &hash)?,
            steps: read_csv(&dir.join(STEPS_FILE), &hash)?,
            fock: read_csv(&dir.join(FOCK_FILE), &hash)?,
            meta,
        })
    }
}

/// Writes `# config_hash=...`, the header and the rows.
pub fn write_csv<T: Serialize>(path: &Path, hash: &str, header: &[&str], rows: &[T]) -> Result<()> {
    let mut file = fs::File::create(path)?;
    writeln!(file, "# config_hash={hash}")?;
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
    w.write_record(header)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// Config hash recorded in a CSV written by [`write_csv`].
pub fn csv_hash(path: &Path) -> Result<Option<String>> {
    let text = fs::read_to_string(path)?;
    Ok(text.lines().next().and_then(|l| l.strip_prefix("# config_hash=")).map(str::to_string))
}

fn read_csv<T: DeserializeOwned>(path: &Path, expected_hash: &str) -> Result<Vec<T>> {
    match csv_hash(path)? {
        Some(h) if h == expected_hash => {}
        found => {
            return Err(Error::ConfigHashMismatch { expected: expected_hash.to_string(), found: found.unwrap_or_default() });
        }
    }
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}
