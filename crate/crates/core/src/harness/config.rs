//! Experiment configuration: TOML on disk, dotted-key overrides, content hash.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agents::{BayesianLaw, PolicyKind, PpoConfig};
use crate::dynamics::{derive_seed, Regime};
use crate::env::{EnvConfig, LinearEnvConfig};
use crate::error::{Error, Result};

/// Controller driving the environment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Ppo,
    RecurrentPpo,
    Bayesian,
    Random,
}

impl AgentKind {
    pub fn policy_kind(self) -> Option<PolicyKind> {
        match self {
            AgentKind::Ppo => Some(PolicyKind::FeedForward),
            AgentKind::RecurrentPpo => Some(PolicyKind::Recurrent),
            AgentKind::Bayesian | AgentKind::Random => None,
        }
    }

    pub fn learns(self) -> bool {
        self.policy_kind().is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BayesianConfig {
    /// Feedback gain used by `eval` and `sweep`.
    pub lambda: f64,
    pub law: BayesianLaw,
    /// Gains tried by the `baseline` grid search.
    pub lambda_grid: Vec<f64>,
}

impl Default for BayesianConfig {
    fn default() -> Self {
        BayesianConfig { lambda: 10.0, law: BayesianLaw::Signed, lambda_grid: (1..=10).map(f64::from).collect() }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SeedConfig {
    pub master: u64,
    /// Base seed of each parallel environment; derived from `master` when empty.
    pub env: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TwoPhaseConfig {
    pub phase1_agent: AgentKind,
    pub phase1_episodes: usize,
    pub phase1_episodes_per_update: usize,
    pub phase2_agent: AgentKind,
    pub phase2_episodes: usize,
    pub phase2_episodes_per_update: usize,
}

impl Default for TwoPhaseConfig {
    fn default() -> Self {
        TwoPhaseConfig {
            phase1_agent: AgentKind::Ppo,
            phase1_episodes: 3000,
            phase1_episodes_per_update: 15,
            phase2_agent: AgentKind::RecurrentPpo,
            phase2_episodes: 1000,
            phase2_episodes_per_update: 5,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LogConfig {
    /// Keep per-step rows of every n-th training episode; 0 keeps only the
    /// final round. Evaluation always keeps every step.
    pub steps_every: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub agent: AgentKind,
    /// Parallel environments stepped in lock-step during training.
    pub n_envs: usize,
    /// Training budget in episodes, rounded up to a multiple of `n_envs`.
    pub train_episodes: usize,
    pub eval_episodes: usize,
    /// Evaluate trained policies with the squashed mean instead of sampling.
    pub eval_deterministic: bool,
    pub output_dir: PathBuf,
    pub seeds: SeedConfig,
    pub env: EnvConfig,
    pub ppo: PpoConfig,
    pub bayesian: BayesianConfig,
    pub two_phase: TwoPhaseConfig,
    pub log: LogConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            name: "run".into(),
            agent: AgentKind::Ppo,
            n_envs: 1,
            train_episodes: 500,
            eval_episodes: 10,
            eval_deterministic: true,
            output_dir: PathBuf::from("runs/run"),
            seeds: SeedConfig::default(),
            env: EnvConfig::Linear(LinearEnvConfig::default()),
            ppo: PpoConfig::default(),
            bayesian: BayesianConfig::default(),
            two_phase: TwoPhaseConfig::default(),
            log: LogConfig::default(),
        }
    }
}

/// Seed streams for the different consumers of randomness.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SeedStream {
    Train = 1,
    Eval = 2,
    Tune = 3,
    Agent = 4,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn regime(&self) -> Regime {
        self.env.regime()
    }

    /// Applies `a.b.c=value` overrides. Values parse as TOML and fall back to
    /// bare strings, so `agent=random` and `env.physics.kappa=0.03` both work.
    pub fn apply_overrides<S: AsRef<str>>(&mut self, overrides: &[S]) -> Result<()> {
        if overrides.is_empty() {
            return Ok(());
        }
        let mut root = toml::Value::try_from(&*self)?;
        for raw in overrides {
            let raw = raw.as_ref();
            let (key, value) = raw
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("override `{raw}` is not of the form key=value")))?;
            set_path(&mut root, key.trim(), parse_value(value.trim()))?;
        }
        *self = root.try_into().map_err(|e: toml::de::Error| Error::Config(format!("override rejected: {e}")))?;
        Ok(())
    }

    /// Hex SHA-256 of the canonical (key-sorted) JSON of everything except
    /// `output_dir`.
    pub fn hash(&self) -> Result<String> {
        let mut value = serde_json::to_value(self)?;
        if let Some(obj) = value.as_object_mut() {
            obj.remove("output_dir");
        }
        let canonical = serde_json::to_string(&value)?;
        Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
    }

    pub fn validate(&self) -> Result<()> {
        self.env.validate()?;
        self.ppo.validate()?;
        if self.n_envs == 0 {
            return Err(Error::Config("n_envs must be positive".into()));
        }
        if !self.seeds.env.is_empty() && self.seeds.env.len() != self.n_envs {
            return Err(Error::Config(format!(
                "{} per-environment seeds given for {} environments",
                self.seeds.env.len(),
                self.n_envs
            )));
        }
        if self.agent == AgentKind::Bayesian && self.regime() != Regime::Linear {
            return Err(Error::Config("the Bayesian controller is defined for the linear regime only".into()));
        }
        if self.bayesian.lambda_grid.is_empty() || self.bayesian.lambda_grid.iter().any(|l| !l.is_finite()) {
            return Err(Error::Config("lambda grid must be non-empty and finite".into()));
        }
        if self.two_phase.phase1_episodes_per_update == 0 || self.two_phase.phase2_episodes_per_update == 0 {
            return Err(Error::Config("episodes per update must be positive".into()));
        }
        Ok(())
    }

    /// Base seed of parallel environment `k`.
    pub fn env_seed(&self, k: usize) -> u64 {
        self.seeds.env.get(k).copied().unwrap_or_else(|| derive_seed(self.seeds.master, &[0, k as u64]))
    }

    /// Reset seed of environment `k` in episode round `round` of `stream`.
    pub fn episode_seed(&self, stream: SeedStream, k: usize, round: usize) -> u64 {
        derive_seed(self.env_seed(k), &[stream as u64, round as u64])
    }

    pub fn agent_seed(&self) -> u64 {
        derive_seed(self.seeds.master, &[SeedStream::Agent as u64])
    }
}

fn parse_value(raw: &str) -> toml::Value {
    match toml::from_str::<toml::Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").expect("parsed key"),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn set_path(root: &mut toml::Value, key: &str, value: toml::Value) -> Result<()> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("malformed override key `{key}`")));
    }
    let mut node = root;
    for part in &parts[..parts.len() - 1] {
        let table = node
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override key `{key}` descends into a non-table")))?;
        node = table.entry(part.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    let table = node
        .as_table_mut()
        .ok_or_else(|| Error::Config(format!("override key `{key}` descends into a non-table")))?;
    table.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}
