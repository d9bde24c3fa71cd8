//! Proximal policy optimization with a clipped surrogate and generalized
//! advantage estimation, for feed-forward and recurrent actor-critics.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agents::nn::Mat;
use crate::agents::optim::{clip_grad_norm, Adam};
use crate::agents::policy::{ActorCritic, Network, NetworkConfig, PolicyKind, PolicyState};
use crate::dynamics::ControlAction;
use crate::env::{StepRecord, VectorEnv};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub clip_epsilon: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub learning_rate: f64,
    pub adam_eps: f64,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub vf_coef: f64,
    pub ent_coef: f64,
    pub max_grad_norm: f64,
    pub normalize_advantages: bool,
    /// Episodes (per environment) collected between updates.
    pub episodes_per_update: usize,
    /// Truncated-BPTT segment length for recurrent policies.
    pub segment_len: usize,
    /// Segments per recurrent minibatch.
    pub segments_per_minibatch: usize,
    pub network: NetworkConfig,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            clip_epsilon: 0.2,
            gamma: 0.99,
            gae_lambda: 0.95,
            learning_rate: 3e-4,
            adam_eps: 1e-5,
            epochs: 10,
            minibatch_size: 64,
            vf_coef: 0.5,
            ent_coef: 0.0,
            max_grad_norm: 0.5,
            normalize_advantages: true,
            episodes_per_update: 1,
            segment_len: 125,
            segments_per_minibatch: 4,
            network: NetworkConfig::default(),
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.learning_rate, self.max_grad_norm];
        if positive.iter().any(|v| v.is_nan() || *v <= 0.0) || self.clip_epsilon < 0.0 {
            return Err(Error::Config("PPO learning rate, clip range and gradient bound must be positive".into()));
        }
        if self.epochs == 0 || self.minibatch_size == 0 || self.episodes_per_update == 0 {
            return Err(Error::Config("PPO epochs, minibatch size and episodes per update must be positive".into()));
        }
        if self.segment_len == 0 || self.segments_per_minibatch == 0 {
            return Err(Error::Config("recurrent segment settings must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err(Error::Config("discount and GAE lambda must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Generalized advantage estimates and returns for one sequence.
/// `bootstrap` is the value after the last step (0 at a terminal state).
pub fn gae(rewards: &[f64], values: &[f64], bootstrap: f64, gamma: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut acc = 0.0;
    for t in (0..n).rev() {
        let next = if t + 1 < n { values[t + 1] } else { bootstrap };
        let delta = rewards[t] + gamma * next - values[t];
        acc = delta + gamma * lambda * acc;
        adv[t] = acc;
    }
    let returns = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, returns)
}

/// One environment's contiguous experience under a fixed policy.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Sequence {
    /// Network inputs, i.e. observations after preprocessing.
    pub obs: Vec<Vec<f64>>,
    /// Pre-squash Gaussian samples.
    pub raw_actions: Vec<Vec<f64>>,
    pub log_probs: Vec<f64>,
    pub values: Vec<f64>,
    pub rewards: Vec<f64>,
    pub bootstrap: f64,
    /// Recurrent state at the start of every segment.
    pub segment_states: Vec<PolicyState>,
}

impl Sequence {
    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RolloutBuffer {
    pub sequences: Vec<Sequence>,
}

impl RolloutBuffer {
    pub fn n_samples(&self) -> usize {
        self.sequences.iter().map(Sequence::len).sum()
    }
}

/// Per-sample training targets.
struct Prepared {
    advantages: Vec<Vec<f64>>,
    returns: Vec<Vec<f64>>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    pub policy_loss: f64,
    /// Mean squared value error.
    pub value_loss: f64,
    pub entropy: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub grad_norm: f64,
    pub samples: usize,
}

/// A sample drawn by [`PpoAgent::act`].
#[derive(Clone, Debug, PartialEq)]
pub struct ActSample {
    pub raw: Vec<f64>,
    pub action: Vec<f64>,
    pub log_prob: f64,
    pub value: f64,
}

/// Loss terms of a minibatch plus their accumulated gradients.
#[derive(Default)]
struct LossTotals {
    policy: f64,
    value: f64,
    kl: f64,
    clipped: usize,
    n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PpoAgent {
    pub config: PpoConfig,
    pub model: ActorCritic,
    pub optimizer: Adam,
    pub rng: ChaCha8Rng,
    pub updates: u64,
}

impl PpoAgent {
    pub fn new(kind: PolicyKind, obs_dim: usize, action_dim: usize, config: PpoConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = ActorCritic::new(kind, obs_dim, action_dim, &config.network, &mut rng);
        let optimizer = Adam::new(model.n_params(), config.learning_rate, config.adam_eps);
        Ok(PpoAgent { config, model, optimizer, rng, updates: 0 })
    }

    /// Samples actions for a batch of preprocessed observations.
    pub fn act(&mut self, obs: &[Vec<f64>], state: Option<&mut PolicyState>) -> Result<Vec<ActSample>> {
        let x = obs_matrix(obs, self.model.obs_dim)?;
        let out = self.model.evaluate(&x, state)?;
        let mut samples = Vec::with_capacity(obs.len());
        for k in 0..obs.len() {
            let mean: Vec<f64> = out.mean.column(k).iter().copied().collect();
            let raw = self.model.sample(&mean, &mut self.rng);
            samples.push(ActSample {
                action: self.model.squash(&raw),
                log_prob: self.model.log_prob(&mean, &raw),
                value: out.value[k],
                raw,
            });
        }
        Ok(samples)
    }

    /// Runs `seeds.len()` lock-step episode rounds on `env`; `seeds[r]` holds
    /// one reset seed per member environment. Returns the experience and the
    /// step records of every (round, environment) pair in that order.
    pub fn collect(&mut self, env: &mut VectorEnv, seeds: &[Vec<u64>]) -> Result<(RolloutBuffer, Vec<Vec<StepRecord>>)> {
        let n = env.len();
        let regime = env.config().regime();
        let mut buffer = RolloutBuffer::default();
        let mut records = Vec::new();
        let seg = self.config.segment_len;
        for round_seeds in seeds {
            let mut obs = env.reset(round_seeds)?;
            let mut state = self.model.initial_state(n);
            let mut seqs = vec![Sequence::default(); n];
            let mut recs = vec![Vec::new(); n];
            let mut t = 0;
            loop {
                if let Some(s) = &state {
                    if t % seg == 0 {
                        for (k, sq) in seqs.iter_mut().enumerate() {
                            sq.segment_states.push(s.column(k));
                        }
                    }
                }
                if let Some(norm) = &mut self.model.obs_norm {
                    norm.update(&obs);
                }
                let inputs = self.model.preprocess(&obs);
                let samples = self.act(&inputs, state.as_mut())?;
                let actions = samples
                    .iter()
                    .map(|s| ControlAction::from_values(regime, &s.action))
                    .collect::<Result<Vec<_>>>()?;
                let outcomes = env.step(&actions)?;
                let mut done = false;
                for (k, (s, o)) in samples.into_iter().zip(outcomes).enumerate() {
                    let sq = &mut seqs[k];
                    sq.obs.push(inputs[k].clone());
                    sq.raw_actions.push(s.raw);
                    sq.log_probs.push(s.log_prob);
                    sq.values.push(s.value);
                    sq.rewards.push(o.reward);
                    obs[k] = o.observation;
                    done |= o.done;
                    recs[k].push(o.record);
                }
                t += 1;
                if done {
                    break;
                }
            }
            buffer.sequences.extend(seqs);
            records.extend(recs);
        }
        Ok((buffer, records))
    }

    fn prepare(&self, buffer: &RolloutBuffer) -> Prepared {
        let c = &self.config;
        let (mut advantages, returns): (Vec<_>, Vec<_>) =
            buffer.sequences.iter().map(|s| gae(&s.rewards, &s.values, s.bootstrap, c.gamma, c.gae_lambda)).unzip();
        if c.normalize_advantages {
            let all: Vec<f64> = advantages.iter().flatten().copied().collect();
            if all.len() > 1 {
                let mean = all.iter().sum::<f64>() / all.len() as f64;
                let std = (all.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / all.len() as f64).sqrt();
                for a in advantages.iter_mut().flatten() {
                    *a = (*a - mean) / (std + 1e-8);
                }
            }
        }
        Prepared { advantages, returns }
    }

    /// Mean clipped surrogate objective and mean squared value error of the
    /// buffer under the current parameters (no parameter change).
    pub fn surrogate(&self, buffer: &RolloutBuffer) -> Result<(f64, f64)> {
        let prep = self.prepare(buffer);
        let mut grads = vec![0.0; self.model.n_params()];
        let all: Vec<(usize, usize)> =
            buffer.sequences.iter().enumerate().flat_map(|(s, q)| (0..q.len()).map(move |t| (s, t))).collect();
        let totals = match self.model.kind {
            PolicyKind::FeedForward => self.feedforward_minibatch(buffer, &prep, &all, all.len(), &mut grads)?,
            PolicyKind::Recurrent => {
                let segs = self.segments(buffer);
                self.recurrent_minibatch(buffer, &prep, &segs, all.len(), &mut grads)?
            }
        };
        let n = totals.n.max(1) as f64;
        Ok((-totals.policy / n, totals.value / n))
    }

    /// Log-probabilities of the stored actions under the current parameters.
    pub fn recompute_log_probs(&self, buffer: &RolloutBuffer) -> Result<Vec<Vec<f64>>> {
        buffer
            .sequences
            .iter()
            .map(|sq| {
                let mut state = self.model.initial_state(1);
                let seg = self.config.segment_len;
                let mut out = Vec::with_capacity(sq.len());
                for t in 0..sq.len() {
                    if let Some(s) = state.as_mut() {
                        if t % seg == 0 {
                            *s = sq.segment_states[t / seg].clone();
                        }
                    }
                    let x = obs_matrix(std::slice::from_ref(&sq.obs[t]), self.model.obs_dim)?;
                    let o = self.model.evaluate(&x, state.as_mut())?;
                    let mean: Vec<f64> = o.mean.column(0).iter().copied().collect();
                    out.push(self.model.log_prob(&mean, &sq.raw_actions[t]));
                }
                Ok(out)
            })
            .collect()
    }

    /// `(sequence, start, len)` of every truncated-BPTT segment.
    fn segments(&self, buffer: &RolloutBuffer) -> Vec<(usize, usize, usize)> {
        let seg = self.config.segment_len;
        let mut out = Vec::new();
        for (s, q) in buffer.sequences.iter().enumerate() {
            let mut start = 0;
            while start < q.len() {
                out.push((s, start, seg.min(q.len() - start)));
                start += seg;
            }
        }
        out
    }

    /// Runs the configured number of epochs over the buffer.
    pub fn update(&mut self, buffer: &RolloutBuffer) -> Result<UpdateStats> {
        let prep = self.prepare(buffer);
        let n_total = buffer.n_samples();
        if n_total == 0 {
            return Ok(UpdateStats::default());
        }
        let backup = self.model.clone();
        let mut stats = UpdateStats { samples: n_total, ..Default::default() };
        let mut batches = 0usize;
        let mut grad_norm_sum = 0.0;
        for _ in 0..self.config.epochs {
            let mut order_totals = LossTotals::default();
            match self.model.kind {
                PolicyKind::FeedForward => {
                    let mut idx: Vec<(usize, usize)> =
                        buffer.sequences.iter().enumerate().flat_map(|(s, q)| (0..q.len()).map(move |t| (s, t))).collect();
                    idx.shuffle(&mut self.rng);
                    for chunk in idx.chunks(self.config.minibatch_size) {
                        let mut grads = vec![0.0; self.model.n_params()];
                        let t = self.feedforward_minibatch(buffer, &prep, chunk, chunk.len(), &mut grads)?;
                        grad_norm_sum += self.apply(&mut grads, &backup)?;
                        batches += 1;
                        accumulate(&mut order_totals, t);
                    }
                }
                PolicyKind::Recurrent => {
                    let mut segs = self.segments(buffer);
                    segs.shuffle(&mut self.rng);
                    for chunk in segs.chunks(self.config.segments_per_minibatch) {
                        let n: usize = chunk.iter().map(|c| c.2).sum();
                        let mut grads = vec![0.0; self.model.n_params()];
                        let t = self.recurrent_minibatch(buffer, &prep, chunk, n, &mut grads)?;
                        grad_norm_sum += self.apply(&mut grads, &backup)?;
                        batches += 1;
                        accumulate(&mut order_totals, t);
                    }
                }
            }
            let n = order_totals.n.max(1) as f64;
            stats.policy_loss = order_totals.policy / n;
            stats.value_loss = order_totals.value / n;
            stats.approx_kl = order_totals.kl / n;
            stats.clip_fraction = order_totals.clipped as f64 / n;
        }
        stats.entropy = self.model.entropy();
        stats.grad_norm = grad_norm_sum / batches.max(1) as f64;
        self.updates += 1;
        Ok(stats)
    }

    /// Clips, takes an optimizer step and checks the result is finite.
    fn apply(&mut self, grads: &mut [f64], backup: &ActorCritic) -> Result<f64> {
        let norm = clip_grad_norm(grads, self.config.max_grad_norm);
        if !norm.is_finite() {
            self.model = backup.clone();
            return Err(Error::TrainingDiverged { reason: format!("non-finite gradient norm after {} updates", self.updates), dump: None });
        }
        let mut flat = self.model.flat_params();
        self.optimizer.step(&mut flat, grads);
        if flat.iter().any(|v| !v.is_finite()) {
            self.model = backup.clone();
            return Err(Error::TrainingDiverged { reason: format!("non-finite parameters after {} updates", self.updates), dump: None });
        }
        self.model.set_flat_params(&flat);
        Ok(norm)
    }

    /// Per-sample loss gradients with respect to policy means, log-std and
    /// values. `norm` is the sample count the losses are averaged over.
    #[allow(clippy::too_many_arguments)]
    fn sample_terms(
        &self,
        mean: &[f64],
        value: f64,
        raw: &[f64],
        old_log_prob: f64,
        adv: f64,
        ret: f64,
        norm: f64,
        totals: &mut LossTotals,
        d_mean: &mut [f64],
        d_log_std: &mut [f64],
    ) -> f64 {
        let eps = self.config.clip_epsilon;
        let lp = self.model.log_prob(mean, raw);
        let ratio = (lp - old_log_prob).exp();
        let clipped = ratio.clamp(1.0 - eps, 1.0 + eps);
        let unclipped_term = ratio * adv;
        let clipped_term = clipped * adv;
        let d_lp = if unclipped_term <= clipped_term { -adv * ratio / norm } else { 0.0 };
        totals.policy += -unclipped_term.min(clipped_term);
        totals.value += (value - ret).powi(2);
        totals.kl += old_log_prob - lp;
        totals.clipped += usize::from((ratio - 1.0).abs() > eps);
        totals.n += 1;
        for j in 0..mean.len() {
            let sigma = self.model.log_std[j].exp();
            let z = (raw[j] - mean[j]) / sigma;
            d_mean[j] = d_lp * z / sigma;
            d_log_std[j] += d_lp * (z * z - 1.0) - self.config.ent_coef / norm;
        }
        2.0 * self.config.vf_coef * (value - ret) / norm
    }

    fn feedforward_minibatch(
        &self,
        buffer: &RolloutBuffer,
        prep: &Prepared,
        idx: &[(usize, usize)],
        norm: usize,
        grads: &mut [f64],
    ) -> Result<LossTotals> {
        let (Network::FeedForward(actor), Network::FeedForward(critic)) = (&self.model.actor, &self.model.critic) else {
            return Err(Error::Config("feed-forward update on a recurrent model".into()));
        };
        let obs: Vec<Vec<f64>> = idx.iter().map(|&(s, t)| buffer.sequences[s].obs[t].clone()).collect();
        let x = obs_matrix(&obs, self.model.obs_dim)?;
        let (mean, actor_cache) = actor.forward(&x)?;
        let (value, critic_cache) = critic.forward(&x)?;
        let ad = self.model.action_dim;
        let mut d_mean = Mat::zeros(ad, idx.len());
        let mut d_value = Mat::zeros(1, idx.len());
        let mut d_log_std = vec![0.0; ad];
        let mut totals = LossTotals::default();
        let mut dm = vec![0.0; ad];
        for (k, &(s, t)) in idx.iter().enumerate() {
            let sq = &buffer.sequences[s];
            let m: Vec<f64> = mean.column(k).iter().copied().collect();
            d_value[(0, k)] = self.sample_terms(
                &m,
                value[(0, k)],
                &sq.raw_actions[t],
                sq.log_probs[t],
                prep.advantages[s][t],
                prep.returns[s][t],
                norm as f64,
                &mut totals,
                &mut dm,
                &mut d_log_std,
            );
            d_mean.column_mut(k).copy_from_slice(&dm);
        }
        let na = actor.n_params();
        let nc = critic.n_params();
        let (ga, rest) = grads.split_at_mut(na);
        let (gc, gs) = rest.split_at_mut(nc);
        actor.backward(&actor_cache, &d_mean, ga);
        critic.backward(&critic_cache, &d_value, gc);
        for (g, d) in gs.iter_mut().zip(&d_log_std) {
            *g += d;
        }
        Ok(totals)
    }

    fn recurrent_minibatch(
        &self,
        buffer: &RolloutBuffer,
        prep: &Prepared,
        segs: &[(usize, usize, usize)],
        norm: usize,
        grads: &mut [f64],
    ) -> Result<LossTotals> {
        let (Network::Recurrent(actor), Network::Recurrent(critic)) = (&self.model.actor, &self.model.critic) else {
            return Err(Error::Config("recurrent update on a feed-forward model".into()));
        };
        let na = actor.n_params();
        let nc = critic.n_params();
        let ad = self.model.action_dim;
        let seg_len = self.config.segment_len;
        let mut totals = LossTotals::default();
        let mut lengths: Vec<usize> = segs.iter().map(|s| s.2).collect();
        lengths.sort_unstable();
        lengths.dedup();
        for len in lengths {
            let group: Vec<&(usize, usize, usize)> = segs.iter().filter(|s| s.2 == len).collect();
            let b = group.len();
            let xs: Vec<Mat> = (0..len)
                .map(|t| {
                    let obs: Vec<Vec<f64>> = group.iter().map(|&&(s, start, _)| buffer.sequences[s].obs[start + t].clone()).collect();
                    obs_matrix(&obs, self.model.obs_dim)
                })
                .collect::<Result<_>>()?;
            let init: Vec<&PolicyState> = group
                .iter()
                .map(|&&(s, start, _)| {
                    buffer.sequences[s]
                        .segment_states
                        .get(start / seg_len)
                        .ok_or_else(|| Error::Config("rollout is missing recurrent segment states".into()))
                })
                .collect::<Result<_>>()?;
            let init_actor = crate::agents::nn::LstmState::stack(&init.iter().map(|p| &p.actor).collect::<Vec<_>>());
            let init_critic = crate::agents::nn::LstmState::stack(&init.iter().map(|p| &p.critic).collect::<Vec<_>>());
            let (means, actor_cache) = actor.forward(&xs, &init_actor)?;
            let (values, critic_cache) = critic.forward(&xs, &init_critic)?;
            let mut d_means = Vec::with_capacity(len);
            let mut d_values = Vec::with_capacity(len);
            let mut d_log_std = vec![0.0; ad];
            let mut dm = vec![0.0; ad];
            for t in 0..len {
                let mut d_mean = Mat::zeros(ad, b);
                let mut d_value = Mat::zeros(1, b);
                for (k, &&(s, start, _)) in group.iter().enumerate() {
                    let sq = &buffer.sequences[s];
                    let i = start + t;
                    let m: Vec<f64> = means[t].column(k).iter().copied().collect();
                    d_value[(0, k)] = self.sample_terms(
                        &m,
                        values[t][(0, k)],
                        &sq.raw_actions[i],
                        sq.log_probs[i],
                        prep.advantages[s][i],
                        prep.returns[s][i],
                        norm as f64,
                        &mut totals,
                        &mut dm,
                        &mut d_log_std,
                    );
                    d_mean.column_mut(k).copy_from_slice(&dm);
                }
                d_means.push(d_mean);
                d_values.push(d_value);
            }
            let (ga, rest) = grads.split_at_mut(na);
            let (gc, gs) = rest.split_at_mut(nc);
            actor.backward(&actor_cache, &d_means, ga);
            critic.backward(&critic_cache, &d_values, gc);
            for (g, d) in gs.iter_mut().zip(&d_log_std) {
                *g += d;
            }
        }
        Ok(totals)
    }
}

fn accumulate(acc: &mut LossTotals, t: LossTotals) {
    acc.policy += t.policy;
    acc.value += t.value;
    acc.kl += t.kl;
    acc.clipped += t.clipped;
    acc.n += t.n;
}

/// Stacks observations as columns.
pub fn obs_matrix(obs: &[Vec<f64>], dim: usize) -> Result<Mat> {
    let mut m = Mat::zeros(dim, obs.len());
    for (k, o) in obs.iter().enumerate() {
        if o.len() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: o.len() });
        }
        m.column_mut(k).copy_from_slice(o);
    }
    Ok(m)
}
