//! Actor-critic model with a tanh-squashed diagonal Gaussian policy.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::agents::nn::{Activation, LstmState, Mat, Mlp, RecurrentNet};
use crate::dynamics::ACTION_BOUND;
use crate::error::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    FeedForward,
    Recurrent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkConfig {
    /// Hidden widths of the feed-forward stack (the recurrent trunk).
    pub hidden: Vec<usize>,
    pub lstm_hidden: usize,
    /// Initial log standard deviation of the pre-squash Gaussian.
    pub init_log_std: f64,
    /// Standardize observations with running statistics gathered during
    /// training and frozen at evaluation.
    pub normalize_observations: bool,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig { hidden: vec![256, 128, 64], lstm_hidden: 256, init_log_std: 0.0, normalize_observations: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Network {
    FeedForward(Mlp),
    Recurrent(RecurrentNet),
}

impl Network {
    fn build<R: Rng + ?Sized>(kind: PolicyKind, input: usize, output: usize, cfg: &NetworkConfig, head_gain: f64, rng: &mut R) -> Self {
        let mut sizes = vec![input];
        sizes.extend(&cfg.hidden);
        match kind {
            PolicyKind::FeedForward => {
                sizes.push(output);
                Network::FeedForward(Mlp::orthogonal(&sizes, Activation::Identity, head_gain, rng))
            }
            PolicyKind::Recurrent => Network::Recurrent(RecurrentNet::orthogonal(&sizes, cfg.lstm_hidden, output, head_gain, rng)),
        }
    }

    pub fn n_params(&self) -> usize {
        match self {
            Network::FeedForward(m) => m.n_params(),
            Network::Recurrent(r) => r.n_params(),
        }
    }

    pub fn flat_params(&self) -> Vec<f64> {
        match self {
            Network::FeedForward(m) => m.params().to_vec(),
            Network::Recurrent(r) => r.params(),
        }
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) {
        match self {
            Network::FeedForward(m) => m.params_mut().copy_from_slice(flat),
            Network::Recurrent(r) => r.set_params(flat),
        }
    }

    pub fn hidden(&self) -> Option<usize> {
        match self {
            Network::FeedForward(_) => None,
            Network::Recurrent(r) => Some(r.hidden()),
        }
    }

    /// One inference step for a batch; `state` is required for (and updated
    /// by) recurrent networks.
    pub fn step(&self, x: &Mat, state: Option<&mut LstmState>) -> Result<Mat> {
        match (self, state) {
            (Network::FeedForward(m), _) => m.predict(x),
            (Network::Recurrent(r), Some(s)) => {
                let (y, next) = r.step(x, s)?;
                *s = next;
                Ok(y)
            }
            (Network::Recurrent(_), None) => Err(Error::Config("recurrent network stepped without hidden state".into())),
        }
    }
}

/// Running per-feature mean and variance of observations, merged batch by
/// batch with the parallel-variance update.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObsNormalizer {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
    pub count: f64,
    /// Standardized values are clipped to `[-clip, clip]`.
    pub clip: f64,
}

impl ObsNormalizer {
    pub fn new(dim: usize) -> Self {
        ObsNormalizer { mean: vec![0.0; dim], var: vec![1.0; dim], count: 1e-4, clip: 10.0 }
    }

    pub fn update(&mut self, batch: &[Vec<f64>]) {
        if batch.is_empty() {
            return;
        }
        let n = batch.len() as f64;
        let total = self.count + n;
        for i in 0..self.mean.len() {
            let m = batch.iter().map(|x| x[i]).sum::<f64>() / n;
            let v = batch.iter().map(|x| (x[i] - m).powi(2)).sum::<f64>() / n;
            let delta = m - self.mean[i];
            self.mean[i] += delta * n / total;
            self.var[i] = (self.var[i] * self.count + v * n + delta * delta * self.count * n / total) / total;
        }
        self.count = total;
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(self.mean.iter().zip(&self.var))
            .map(|(x, (m, v))| ((x - m) / (v + 1e-8).sqrt()).clamp(-self.clip, self.clip))
            .collect()
    }
}

/// Recurrent state of actor and critic for a batch of environments.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyState {
    pub actor: LstmState,
    pub critic: LstmState,
}

impl PolicyState {
    pub fn column(&self, k: usize) -> PolicyState {
        PolicyState { actor: self.actor.column(k), critic: self.critic.column(k) }
    }
}

/// Output of one batched policy evaluation.
#[derive(Clone, Debug)]
pub struct PolicyOutput {
    /// Pre-squash Gaussian means, `action_dim x batch`.
    pub mean: Mat,
    pub value: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActorCritic {
    pub kind: PolicyKind,
    pub obs_dim: usize,
    pub action_dim: usize,
    pub action_bound: f64,
    pub actor: Network,
    pub critic: Network,
    pub log_std: Vec<f64>,
    #[serde(default)]
    pub obs_norm: Option<ObsNormalizer>,
}

impl ActorCritic {
    pub fn new<R: Rng + ?Sized>(kind: PolicyKind, obs_dim: usize, action_dim: usize, cfg: &NetworkConfig, rng: &mut R) -> Self {
        ActorCritic {
            kind,
            obs_dim,
            action_dim,
            action_bound: ACTION_BOUND,
            actor: Network::build(kind, obs_dim, action_dim, cfg, 0.01, rng),
            critic: Network::build(kind, obs_dim, 1, cfg, 1.0, rng),
            log_std: vec![cfg.init_log_std; action_dim],
            obs_norm: cfg.normalize_observations.then(|| ObsNormalizer::new(obs_dim)),
        }
    }

    /// Maps raw observations to network inputs.
    pub fn preprocess(&self, obs: &[Vec<f64>]) -> Vec<Vec<f64>> {
        match &self.obs_norm {
            Some(n) => obs.iter().map(|o| n.normalize(o)).collect(),
            None => obs.to_vec(),
        }
    }

    pub fn n_params(&self) -> usize {
        self.actor.n_params() + self.critic.n_params() + self.log_std.len()
    }

    /// `[actor | critic | log_std]`.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut v = self.actor.flat_params();
        v.extend(self.critic.flat_params());
        v.extend(&self.log_std);
        v
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) {
        let na = self.actor.n_params();
        let nc = self.critic.n_params();
        self.actor.set_flat_params(&flat[..na]);
        self.critic.set_flat_params(&flat[na..na + nc]);
        self.log_std.copy_from_slice(&flat[na + nc..]);
    }

    pub fn initial_state(&self, batch: usize) -> Option<PolicyState> {
        match (self.actor.hidden(), self.critic.hidden()) {
            (Some(ha), Some(hc)) => Some(PolicyState { actor: LstmState::zeros(ha, batch), critic: LstmState::zeros(hc, batch) }),
            _ => None,
        }
    }

    /// Means and values for a batch of preprocessed observations (`obs_dim x batch`).
    pub fn evaluate(&self, obs: &Mat, state: Option<&mut PolicyState>) -> Result<PolicyOutput> {
        let (mean, value) = match state {
            Some(s) => (self.actor.step(obs, Some(&mut s.actor))?, self.critic.step(obs, Some(&mut s.critic))?),
            None => (self.actor.step(obs, None)?, self.critic.step(obs, None)?),
        };
        Ok(PolicyOutput { mean, value: value.row(0).iter().copied().collect() })
    }

    pub fn squash(&self, u: &[f64]) -> Vec<f64> {
        u.iter().map(|x| self.action_bound * x.tanh()).collect()
    }

    /// Draws a pre-squash sample `u ~ N(mean, sigma^2)`.
    pub fn sample<R: Rng + ?Sized>(&self, mean: &[f64], rng: &mut R) -> Vec<f64> {
        mean.iter()
            .zip(&self.log_std)
            .map(|(m, ls)| m + ls.exp() * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    /// Gaussian log-density of the pre-squash sample. The tanh Jacobian is
    /// omitted: it depends only on `u` and cancels in probability ratios.
    pub fn log_prob(&self, mean: &[f64], u: &[f64]) -> f64 {
        gaussian_log_prob(mean, &self.log_std, u)
    }

    pub fn entropy(&self) -> f64 {
        self.log_std.iter().map(|ls| ls + 0.5 * (1.0 + LN_2PI)).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.flat_params().iter().all(|v| v.is_finite())
    }
}

pub fn gaussian_log_prob(mean: &[f64], log_std: &[f64], u: &[f64]) -> f64 {
    mean.iter()
        .zip(log_std)
        .zip(u)
        .map(|((m, ls), x)| {
            let z = (x - m) / ls.exp();
            -0.5 * z * z - ls - 0.5 * LN_2PI
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn log_prob_is_consistent_with_sampling() {
        // Monte-Carlo: E[log p(u)] = -entropy for u drawn from the policy.
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut ac = ActorCritic::new(PolicyKind::FeedForward, 1, 2, &NetworkConfig { hidden: vec![4], ..Default::default() }, &mut rng);
        ac.log_std = vec![-0.3, 0.4];
        let mean = [0.2, -1.0];
        let n = 200_000;
        let avg: f64 = (0..n).map(|_| ac.log_prob(&mean, &ac.sample(&mean, &mut rng))).sum::<f64>() / n as f64;
        assert!((avg + ac.entropy()).abs() < 0.01, "{avg} vs {}", -ac.entropy());
    }

    #[test]
    fn log_prob_matches_closed_form() {
        let lp = gaussian_log_prob(&[0.5], &[0.0], &[1.5]);
        assert!((lp - (-0.5 - 0.5 * LN_2PI)).abs() < 1e-15);
    }

    #[test]
    fn squashed_actions_stay_in_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let ac = ActorCritic::new(PolicyKind::FeedForward, 1, 1, &NetworkConfig { hidden: vec![4], ..Default::default() }, &mut rng);
        for u in [-1e3, -2.0, 0.0, 0.7, 1e6] {
            let a = ac.squash(&[u])[0];
            assert!(a.abs() <= ACTION_BOUND);
        }
    }

    #[test]
    fn normalizer_matches_batch_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let data: Vec<Vec<f64>> = (0..1000).map(|_| vec![3.0 + 2.0 * rng.sample::<f64, _>(StandardNormal), rng.random_range(0.0..1.0)]).collect();
        let mut norm = ObsNormalizer::new(2);
        for chunk in data.chunks(7) {
            norm.update(chunk);
        }
        let n = data.len() as f64;
        for i in 0..2 {
            let m = data.iter().map(|x| x[i]).sum::<f64>() / n;
            let v = data.iter().map(|x| (x[i] - m).powi(2)).sum::<f64>() / n;
            // the prior pseudo-count of 1e-4 perturbs the estimate at that order
            assert!((norm.mean[i] - m).abs() < 1e-5 * (1.0 + m.abs()), "{} vs {m}", norm.mean[i]);
            assert!((norm.var[i] - v).abs() < 1e-5 * (1.0 + v + m * m), "{} vs {v}", norm.var[i]);
        }
        let z = norm.normalize(&[norm.mean[0], 1e9]);
        assert!(z[0].abs() < 1e-12 && z[1] == norm.clip);
    }

    #[test]
    fn flat_params_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let cfg = NetworkConfig { hidden: vec![5, 3], lstm_hidden: 4, init_log_std: -0.5, normalize_observations: true };
        for kind in [PolicyKind::FeedForward, PolicyKind::Recurrent] {
            let ac = ActorCritic::new(kind, 1, 2, &cfg, &mut rng);
            let mut other = ActorCritic::new(kind, 1, 2, &cfg, &mut rng);
            assert_ne!(ac, other);
            other.set_flat_params(&ac.flat_params());
            assert_eq!(ac, other);
            assert_eq!(ac.flat_params().len(), ac.n_params());
        }
    }
}
