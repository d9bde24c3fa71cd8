//! Observables extracted from trajectories: photon number, photocurrent,
//! Gaussian smoothing, logarithmic negativity and episode metrics.

use std::collections::VecDeque;
use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::dynamics::PhysicsParams;
use crate::error::{Error, Result};
use crate::fock::{hermitian_eigenvalues, partial_transpose, DensityMatrix, Mode};

/// `<n_p> = sum_n n <P_n>`.
pub fn expected_photon_number(rho: &DensityMatrix) -> f64 {
    rho.mean_number(Mode::Cavity)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhotocurrentSample {
    pub t: f64,
    pub value: f64,
}

/// Photocurrent over one control step: `I = sum_n n (<P_n> + dW_n / (2 eta dt))`.
///
/// `rho` is the state the step started from and `dw` the per-level
/// increments returned by the integrator for that step.
pub fn photocurrent(rho: &DensityMatrix, dw: &[f64], params: &PhysicsParams) -> Result<f64> {
    if params.eta <= 0.0 {
        return Err(Error::NoMeasurement);
    }
    let pops = rho.populations(Mode::Cavity);
    if dw.len() != pops.len() {
        return Err(Error::DimensionMismatch { expected: pops.len(), got: dw.len() });
    }
    let scale = 1.0 / (2.0 * params.eta * params.dt);
    Ok(pops.iter().zip(dw).enumerate().map(|(n, (p, w))| n as f64 * (p + w * scale)).sum())
}

pub fn photocurrent_sample(t: f64, rho: &DensityMatrix, dw: &[f64], params: &PhysicsParams) -> Result<PhotocurrentSample> {
    Ok(PhotocurrentSample { t, value: photocurrent(rho, dw, params)? })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaussianFilterConfig {
    /// Kernel standard deviation in samples.
    pub sigma_steps: f64,
    /// Kernel half-width in samples.
    pub radius_steps: usize,
    /// Use only the current and past samples.
    pub causal: bool,
}

impl Default for GaussianFilterConfig {
    fn default() -> Self {
        GaussianFilterConfig { sigma_steps: 20.0, radius_steps: 60, causal: true }
    }
}

impl GaussianFilterConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_steps > 0.0 && self.sigma_steps.is_finite()) {
            return Err(Error::Config(format!("filter sigma {} must be positive", self.sigma_steps)));
        }
        Ok(())
    }

    /// Normalized weights. Causal kernels are indexed by lag `0..=radius`
    /// (index 0 is the current sample); symmetric kernels by offset
    /// `-radius..=radius`.
    pub fn kernel(&self) -> Vec<f64> {
        let r = self.radius_steps as i64;
        let lo = if self.causal { 0 } else { -r };
        let w: Vec<f64> = (lo..=r)
            .map(|k| (-(k * k) as f64 / (2.0 * self.sigma_steps * self.sigma_steps)).exp())
            .collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|x| x / total).collect()
    }
}

/// Convolves `series` with the truncated Gaussian. Near the edges only the
/// available samples are used and the weights are renormalized.
pub fn gaussian_filter(series: &[f64], config: &GaussianFilterConfig) -> Vec<f64> {
    let kernel = config.kernel();
    let r = config.radius_steps as i64;
    let n = series.len() as i64;
    (0..n)
        .map(|t| {
            let mut acc = 0.0;
            let mut norm = 0.0;
            for (idx, w) in kernel.iter().enumerate() {
                let offset = if config.causal { -(idx as i64) } else { idx as i64 - r };
                let s = t + offset;
                if (0..n).contains(&s) {
                    acc += w * series[s as usize];
                    norm += w;
                }
            }
            acc / norm
        })
        .collect()
}

/// Online causal Gaussian filter; produces the same values as
/// [`gaussian_filter`] with `causal = true`.
#[derive(Clone, Debug)]
pub struct StreamingFilter {
    kernel: Vec<f64>,
    history: VecDeque<f64>,
}

impl StreamingFilter {
    pub fn new(config: &GaussianFilterConfig) -> Self {
        let causal = GaussianFilterConfig { causal: true, ..*config };
        StreamingFilter { kernel: causal.kernel(), history: VecDeque::with_capacity(config.radius_steps + 1) }
    }

    pub fn push(&mut self, x: f64) -> f64 {
        if self.history.len() == self.kernel.len() {
            self.history.pop_back();
        }
        self.history.push_front(x);
        let (mut acc, mut norm) = (0.0, 0.0);
        for (w, v) in self.kernel.iter().zip(&self.history) {
            acc += w * v;
            norm += w;
        }
        acc / norm
    }

    pub fn reset(&mut self) {
        self.history.clear();
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntanglementSample {
    pub t: f64,
    pub log_negativity: f64,
}

/// `E_N = ln ||rho^{T_A}||_1` with the cavity transposed.
pub fn log_negativity(rho: &DensityMatrix) -> Result<f64> {
    log_negativity_on(rho, Mode::Cavity)
}

/// `E_N` with the partial transpose taken on `subsystem`.
pub fn log_negativity_on(rho: &DensityMatrix, subsystem: Mode) -> Result<f64> {
    let pt = partial_transpose(rho, subsystem);
    let trace_norm: f64 = hermitian_eigenvalues(&pt)?.iter().map(|v| v.abs()).sum();
    Ok(trace_norm.ln().max(0.0))
}

/// Expresses a log-negativity as a percentage of the Bell-state value `ln 2`.
pub fn percent_of_ln2(value: f64) -> f64 {
    100.0 * value / LN_2
}

/// Time average over the samples of one episode.
pub fn episode_mean(samples: &[f64]) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    samples.iter().sum::<f64>() / samples.len() as f64
}

/// Mean and population standard deviation.
pub fn mean_std(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Number of successive episodes averaged for the headline metric.
pub const METRIC_WINDOW: usize = 10;

/// Per-episode aggregates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeStats {
    pub episode: usize,
    /// Time-averaged log-negativity of the episode.
    pub mean_log_negativity: f64,
    /// Reward averaged over time and over parallel environments.
    pub mean_reward: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    /// Time-averaged `E_N` of the last episode.
    pub last_episode_log_negativity: f64,
    /// Mean of the per-episode averages over the last (up to) ten episodes.
    pub window_log_negativity: f64,
    /// Standard deviation across those episodes.
    pub window_log_negativity_std: f64,
    /// Episodes actually in the window.
    pub window_len: usize,
    /// Mean reward of the last episode.
    pub last_episode_reward: f64,
}

impl Metrics {
    pub fn percent(&self) -> f64 {
        percent_of_ln2(self.window_log_negativity)
    }

    pub fn percent_std(&self) -> f64 {
        percent_of_ln2(self.window_log_negativity_std)
    }

    pub fn is_partial(&self) -> bool {
        self.window_len < METRIC_WINDOW
    }
}

/// Summarizes the final ten episodes. Fewer episodes are accepted with a
/// logged warning.
pub fn metrics(episodes: &[EpisodeStats]) -> Result<Metrics> {
    let last = episodes
        .last()
        .ok_or_else(|| Error::Config("metrics need at least one completed episode".into()))?;
    let start = episodes.len().saturating_sub(METRIC_WINDOW);
    let window: Vec<f64> = episodes[start..].iter().map(|e| e.mean_log_negativity).collect();
    if window.len() < METRIC_WINDOW {
        log::warn!("metric window has only {} of {} episodes", window.len(), METRIC_WINDOW);
    }
    let (mean, std) = mean_std(&window);
    Ok(Metrics {
        last_episode_log_negativity: last.mean_log_negativity,
        window_log_negativity: mean,
        window_log_negativity_std: std,
        window_len: window.len(),
        last_episode_reward: last.mean_reward,
    })
}

/// Trailing moving average with the window shrunk at the start.
pub fn moving_average(xs: &[f64], window: usize) -> Vec<f64> {
    let window = window.max(1);
    let mut out = Vec::with_capacity(xs.len());
    let mut acc = 0.0;
    for i in 0..xs.len() {
        acc += xs[i];
        if i >= window {
            acc -= xs[i - window];
        }
        out.push(acc / (i + 1).min(window) as f64);
    }
    out
}
