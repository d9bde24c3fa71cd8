//! Versioned JSON checkpoints of a PPO learner.
//!
//! Layout (format version 1), all at top level of one JSON object:
//!
//! * `format_version`: integer, bumped on any incompatible change.
//! * `crate_version`: version of the writing library.
//! * `config_hash`: hex SHA-256 of the experiment configuration.
//! * `config`: that configuration as JSON.
//! * `regime`: `"linear"` or `"nonlinear"`.
//! * `episodes_trained`: completed training episodes per environment.
//! * `agent.config`: PPO hyperparameters and network widths.
//! * `agent.model`: `kind`, `obs_dim`, `action_dim`, `action_bound`,
//!   `log_std`, and `actor` / `critic` networks. A feed-forward network is
//!   `{"type": "feed_forward", "sizes": [...], "output": ..., "params": [...]}`
//!   with, per layer, the `out x in` weight matrix in column-major order
//!   followed by the bias. A recurrent network is
//!   `{"type": "recurrent", "trunk": <feed-forward>, "lstm": {"input", "hidden", "params"}, "head": <feed-forward>}`;
//!   LSTM parameters are `W (4H x in)`, `U (4H x H)` column-major, then the
//!   bias, with gate blocks ordered input, forget, cell, output.
//!   `obs_norm` is `null` or the frozen observation statistics
//!   `{"mean", "var", "count", "clip"}` applied before the networks.
//! * `agent.optimizer`: Adam moments `m`, `v` (same order as the flattened
//!   parameters `[actor | critic | log_std]`), step count `t` and constants.
//! * `agent.rng`: ChaCha8 state of the action sampler.
//! * `agent.updates`: completed PPO updates.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agents::ppo::PpoAgent;
use crate::dynamics::Regime;
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u32,
    pub crate_version: String,
    pub config_hash: String,
    pub config: serde_json::Value,
    pub regime: Regime,
    pub episodes_trained: usize,
    pub agent: PpoAgent,
}

impl Checkpoint {
    pub fn new(agent: PpoAgent, regime: Regime, config: serde_json::Value, config_hash: String, episodes_trained: usize) -> Self {
        Checkpoint {
            format_version: CHECKPOINT_FORMAT,
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash,
            config,
            regime,
            episodes_trained,
            agent,
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, serde_json::to_vec(self)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_slice(&fs::read(path)?)?;
        let version = value.get("format_version").and_then(|v| v.as_u64());
        if version != Some(CHECKPOINT_FORMAT as u64) {
            return Err(Error::IncompatibleCheckpoint(format!(
                "format version {version:?}, this build reads {CHECKPOINT_FORMAT}"
            )));
        }
        Ok(serde_json::from_value(value)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::policy::{NetworkConfig, PolicyKind};
    use crate::agents::ppo::PpoConfig;

    #[test]
    fn round_trip_preserves_everything() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = PpoConfig { network: NetworkConfig { hidden: vec![4, 3], lstm_hidden: 5, init_log_std: 0.0, normalize_observations: true }, ..Default::default() };
        for kind in [PolicyKind::FeedForward, PolicyKind::Recurrent] {
            let mut agent = PpoAgent::new(kind, 1, 2, cfg.clone(), 7).unwrap();
            agent.model.obs_norm.as_mut().unwrap().update(&[vec![0.1], vec![0.7], vec![0.45]]);
            let ck = Checkpoint::new(agent, Regime::Nonlinear, serde_json::json!({"a": 1}), "abc".into(), 3);
            let path = dir.path().join("ck.json");
            ck.save(&path).unwrap();
            assert_eq!(Checkpoint::load(&path).unwrap(), ck);
        }
    }

    #[test]
    fn wrong_version_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ck.json");
        fs::write(&path, r#"{"format_version": 99}"#).unwrap();
        assert!(matches!(Checkpoint::load(&path), Err(Error::IncompatibleCheckpoint(_))));
    }
}
