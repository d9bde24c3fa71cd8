//! Episodic control environments on top of the conditional dynamics.
//!
//! An environment owns `n_traj` trajectories evolved under one shared action
//! sequence. The scalar observation and the reported log-negativity are
//! averages across those trajectories.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{derive_seed, ControlAction, NoiseSource, PhysicsParams, Regime, SmeIntegrator, SmeOptions, WienerStream};
use crate::error::{Error, Result};
use crate::fock::{DensityMatrix, FockSpace, Mode};
use crate::observe::{expected_photon_number, log_negativity, photocurrent, GaussianFilterConfig, StreamingFilter};

/// Quantity fed to the controller in the beam-splitter regime.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// `<n_p>` read off the conditional state.
    ExpectedN,
    /// Gaussian-filtered photocurrent.
    Photocurrent,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialState {
    /// `|1_p 0_m>`.
    Pure10,
    /// `(1 - p)|10><10| + p|01><01|`.
    Mixed { p: f64 },
    /// As `Mixed` with `p` drawn uniformly from `[p_min, p_max]` at every reset.
    MixedRandom { p_min: f64, p_max: f64 },
}

impl InitialState {
    pub fn validate(&self) -> Result<()> {
        let check = |p: f64| if (0.0..=1.0).contains(&p) { Ok(()) } else { Err(Error::InvalidMixture(p)) };
        match *self {
            InitialState::Pure10 => Ok(()),
            InitialState::Mixed { p } => check(p),
            InitialState::MixedRandom { p_min, p_max } => {
                check(p_min)?;
                check(p_max)?;
                if p_min > p_max {
                    return Err(Error::Config(format!("empty mixing range [{p_min}, {p_max}]")));
                }
                Ok(())
            }
        }
    }

    fn build<R: Rng>(&self, space: FockSpace, rng: &mut R) -> Result<DensityMatrix> {
        self.validate()?;
        let p = match *self {
            InitialState::Pure10 => return space.basis_state(1, 0),
            InitialState::Mixed { p } => p,
            InitialState::MixedRandom { p_min, p_max } => {
                if p_max > p_min {
                    rng.random_range(p_min..=p_max)
                } else {
                    p_min
                }
            }
        };
        mixed_state(space, p)
    }
}

/// `(1 - p)|10><10| + p|01><01|`.
pub fn mixed_state(space: FockSpace, p: f64) -> Result<DensityMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidMixture(p));
    }
    let a = space.basis_state(1, 0)?;
    let b = space.basis_state(0, 1)?;
    DensityMatrix::mixture(&[(1.0 - p, &a), (p, &b)])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearEnvConfig {
    /// Control steps per episode.
    pub steps: usize,
    pub observable: Observable,
    /// Trajectories averaged per observation.
    pub n_traj: usize,
    pub physics: PhysicsParams,
    pub initial_state: InitialState,
    pub filter: GaussianFilterConfig,
    pub integrator: SmeOptions,
}

impl Default for LinearEnvConfig {
    fn default() -> Self {
        LinearEnvConfig {
            steps: 500,
            observable: Observable::ExpectedN,
            n_traj: 1,
            physics: PhysicsParams::linear(),
            initial_state: InitialState::Pure10,
            filter: GaussianFilterConfig::default(),
            integrator: SmeOptions::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// Rewarded on log-negativity and total excitation; observes `E_N`.
    TargetGenerating,
    /// Rewarded on tracking a photon-number target; observes `<n_p>`.
    TargetUtilization,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NonlinearEnvConfig {
    pub steps: usize,
    pub phase: Phase,
    pub physics: PhysicsParams,
    pub cutoff_cavity: usize,
    pub cutoff_mech: usize,
    /// Photon-number target per step (target-utilization phase).
    pub target_series: Option<Vec<f64>>,
    /// Target total excitation in the target-generating reward.
    pub reward_a: f64,
    /// Weight divisor of the excitation penalty.
    pub reward_b: f64,
    pub integrator: SmeOptions,
}

impl Default for NonlinearEnvConfig {
    fn default() -> Self {
        NonlinearEnvConfig {
            steps: 500,
            phase: Phase::TargetGenerating,
            physics: PhysicsParams::nonlinear(),
            cutoff_cavity: 10,
            cutoff_mech: 10,
            target_series: None,
            reward_a: 1.0,
            reward_b: 30.0,
            integrator: SmeOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum EnvConfig {
    Linear(LinearEnvConfig),
    Nonlinear(NonlinearEnvConfig),
}

impl EnvConfig {
    pub fn regime(&self) -> Regime {
        match self {
            EnvConfig::Linear(_) => Regime::Linear,
            EnvConfig::Nonlinear(_) => Regime::Nonlinear,
        }
    }

    pub fn steps(&self) -> usize {
        match self {
            EnvConfig::Linear(c) => c.steps,
            EnvConfig::Nonlinear(c) => c.steps,
        }
    }

    pub fn set_steps(&mut self, steps: usize) {
        match self {
            EnvConfig::Linear(c) => c.steps = steps,
            EnvConfig::Nonlinear(c) => c.steps = steps,
        }
    }

    pub fn physics(&self) -> &PhysicsParams {
        match self {
            EnvConfig::Linear(c) => &c.physics,
            EnvConfig::Nonlinear(c) => &c.physics,
        }
    }

    pub fn physics_mut(&mut self) -> &mut PhysicsParams {
        match self {
            EnvConfig::Linear(c) => &mut c.physics,
            EnvConfig::Nonlinear(c) => &mut c.physics,
        }
    }

    pub fn space(&self) -> Result<FockSpace> {
        match self {
            EnvConfig::Linear(_) => Ok(FockSpace::linear()),
            EnvConfig::Nonlinear(c) => FockSpace::new(c.cutoff_cavity, c.cutoff_mech),
        }
    }

    pub fn action_dim(&self) -> usize {
        self.regime().action_dim()
    }

    /// Observations are scalar in every configuration.
    pub fn obs_dim(&self) -> usize {
        1
    }

    pub fn n_traj(&self) -> usize {
        match self {
            EnvConfig::Linear(c) => c.n_traj,
            EnvConfig::Nonlinear(_) => 1,
        }
    }

    /// Most negative attainable reward.
    pub fn reward_floor(&self) -> Result<f64> {
        Ok(-((self.space()?.cutoff(Mode::Cavity) - 1) as f64))
    }

    pub fn validate(&self) -> Result<()> {
        self.physics().validate()?;
        if self.steps() == 0 {
            return Err(Error::Config("episode length must be positive".into()));
        }
        match self {
            EnvConfig::Linear(c) => {
                c.initial_state.validate()?;
                c.filter.validate()?;
                if c.n_traj == 0 {
                    return Err(Error::Config("n_traj must be at least 1".into()));
                }
                if c.observable == Observable::Photocurrent && c.physics.eta <= 0.0 {
                    return Err(Error::NoMeasurement);
                }
            }
            EnvConfig::Nonlinear(c) => {
                FockSpace::new(c.cutoff_cavity, c.cutoff_mech)?;
                if c.reward_b <= 0.0 {
                    return Err(Error::Config("reward_b must be positive".into()));
                }
                if c.phase == Phase::TargetUtilization {
                    match &c.target_series {
                        Some(t) if t.len() == c.steps => {}
                        Some(t) => return Err(Error::DimensionMismatch { expected: c.steps, got: t.len() }),
                        None => return Err(Error::Config("target-utilization phase needs a target series".into())),
                    }
                }
            }
        }
        Ok(())
    }
}

/// `-|O - 1/2|`: zero exactly at the balanced photon number.
pub fn linear_reward(observation: f64) -> f64 {
    -(observation - 0.5).abs()
}

/// `-|E_N - ln 2| - |<n_p> + <n_m> - a| / b`.
pub fn target_generating_reward(log_negativity: f64, photons: f64, phonons: f64, a: f64, b: f64) -> f64 {
    -(log_negativity - std::f64::consts::LN_2).abs() - (photons + phonons - a).abs() / b
}

/// `-|<n_p> - target|`.
pub fn target_utilization_reward(photons: f64, target: f64) -> f64 {
    -(photons - target).abs()
}

/// One environment transition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// Step index, 1-based: the record describes the state after step `t`.
    pub t: usize,
    pub observation: Vec<f64>,
    pub action: ControlAction,
    pub reward: f64,
    /// Trajectory-averaged log-negativity after the step.
    pub log_negativity: f64,
    pub photon_number: f64,
    pub phonon_number: f64,
    /// Unfiltered trajectory-averaged photocurrent, when measured.
    pub raw_photocurrent: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub observation: Vec<f64>,
    pub reward: f64,
    pub done: bool,
    pub record: StepRecord,
}

#[derive(Clone, Debug)]
pub struct Env {
    config: EnvConfig,
    space: FockSpace,
    integrator: SmeIntegrator,
    states: Vec<DensityMatrix>,
    noise: Vec<NoiseSource>,
    filter: Option<StreamingFilter>,
    t: usize,
    done: bool,
}

impl Env {
    pub fn new(config: EnvConfig) -> Result<Self> {
        config.validate()?;
        let space = config.space()?;
        let options = match &config {
            EnvConfig::Linear(c) => c.integrator,
            EnvConfig::Nonlinear(c) => c.integrator,
        };
        let integrator = SmeIntegrator::new(space, *config.physics(), options)?;
        let filter = match &config {
            EnvConfig::Linear(c) if c.observable == Observable::Photocurrent => Some(StreamingFilter::new(&c.filter)),
            _ => None,
        };
        Ok(Env { config, space, integrator, states: Vec::new(), noise: Vec::new(), filter, t: 0, done: true })
    }

    pub fn config(&self) -> &EnvConfig {
        &self.config
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn step_index(&self) -> usize {
        self.t
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    /// Starts a new episode. The seed fixes the initial-state draw and the
    /// measurement noise of every trajectory.
    pub fn reset(&mut self, seed: u64) -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0]));
        let rho0 = match &self.config {
            EnvConfig::Linear(c) => c.initial_state.build(self.space, &mut rng)?,
            EnvConfig::Nonlinear(_) => self.space.vacuum(),
        };
        let n = self.config.n_traj();
        self.states = vec![rho0; n];
        let noise_seed = derive_seed(seed, &[1]);
        self.noise = (0..n as u64)
            .map(|k| if self.config.physics().eta > 0.0 { NoiseSource::Wiener(WienerStream::new(noise_seed, k)) } else { NoiseSource::Zero })
            .collect();
        self.t = 0;
        self.done = false;
        if let Some(f) = self.filter.as_mut() {
            f.reset();
        }
        let obs = match &self.config {
            EnvConfig::Linear(c) => {
                let n_p = self.mean_over_states(expected_photon_number);
                match c.observable {
                    Observable::ExpectedN => n_p,
                    // noiseless current of the initial state seeds the filter
                    Observable::Photocurrent => self.filter.as_mut().expect("photocurrent filter").push(n_p),
                }
            }
            EnvConfig::Nonlinear(c) => match c.phase {
                Phase::TargetGenerating => self.mean_log_negativity()?,
                Phase::TargetUtilization => self.mean_over_states(expected_photon_number),
            },
        };
        Ok(vec![obs])
    }

    fn mean_over_states(&self, f: impl Fn(&DensityMatrix) -> f64) -> f64 {
        self.states.iter().map(f).sum::<f64>() / self.states.len() as f64
    }

    fn mean_log_negativity(&self) -> Result<f64> {
        let mut acc = 0.0;
        for rho in &self.states {
            acc += log_negativity(rho)?;
        }
        Ok(acc / self.states.len() as f64)
    }

    /// Trajectory-averaged Fock distribution of `mode`.
    pub fn populations(&self, mode: Mode) -> Vec<f64> {
        let mut out = vec![0.0; self.space.cutoff(mode)];
        for rho in &self.states {
            for (o, p) in out.iter_mut().zip(rho.populations(mode)) {
                *o += p / self.states.len() as f64;
            }
        }
        out
    }

    pub fn step(&mut self, action: ControlAction) -> Result<StepOutcome> {
        if self.done {
            return Err(Error::EpisodeDone);
        }
        if action.regime() != self.config.regime() {
            return Err(Error::DimensionMismatch { expected: self.config.action_dim(), got: action.values().len() });
        }
        let action = action.clamped();
        let params = *self.config.physics();
        let hamiltonian = self.integrator.hamiltonian(action);
        let mut current = 0.0;
        for (rho, noise) in self.states.iter_mut().zip(&self.noise) {
            let before = if params.eta > 0.0 { Some(rho.clone()) } else { None };
            let dw = self.integrator.step_with_hamiltonian(rho, &hamiltonian, noise, self.t)?;
            if let Some(before) = before {
                current += photocurrent(&before, &dw, &params)?;
            }
        }
        let n = self.states.len() as f64;
        let raw_photocurrent = (params.eta > 0.0).then_some(current / n);
        self.t += 1;
        self.done = self.t >= self.config.steps();

        let photon_number = self.mean_over_states(expected_photon_number);
        let phonon_number = self.mean_over_states(|r| r.mean_number(Mode::Mech));
        let en = self.mean_log_negativity()?;
        let floor = self.config.reward_floor()?;
        let (obs, reward) = match &self.config {
            EnvConfig::Linear(c) => {
                let o = match c.observable {
                    Observable::ExpectedN => photon_number,
                    Observable::Photocurrent => {
                        self.filter.as_mut().expect("photocurrent filter").push(raw_photocurrent.expect("eta > 0"))
                    }
                };
                (o, linear_reward(o))
            }
            EnvConfig::Nonlinear(c) => match c.phase {
                Phase::TargetGenerating => {
                    (en, target_generating_reward(en, photon_number, phonon_number, c.reward_a, c.reward_b))
                }
                Phase::TargetUtilization => {
                    let target = c.target_series.as_ref().expect("validated")[self.t - 1];
                    (photon_number, target_utilization_reward(photon_number, target))
                }
            },
        };
        let reward = reward.clamp(floor, 0.0);
        let record = StepRecord {
            t: self.t,
            observation: vec![obs],
            action,
            reward,
            log_negativity: en,
            photon_number,
            phonon_number,
            raw_photocurrent,
        };
        Ok(StepOutcome { observation: vec![obs], reward, done: self.done, record })
    }
}

/// Lock-step batch of identically configured environments.
#[derive(Clone, Debug)]
pub struct VectorEnv {
    envs: Vec<Env>,
}

impl VectorEnv {
    pub fn new(configs: &[EnvConfig]) -> Result<Self> {
        let first = configs.first().ok_or_else(|| Error::Config("vector environment needs at least one member".into()))?;
        if let Some(i) = configs.iter().position(|c| c != first) {
            return Err(Error::HeterogeneousConfigs(format!("member {i} differs from member 0")));
        }
        Ok(VectorEnv { envs: configs.iter().cloned().map(Env::new).collect::<Result<_>>()? })
    }

    pub fn replicated(config: &EnvConfig, n: usize) -> Result<Self> {
        Self::new(&vec![config.clone(); n])
    }

    pub fn len(&self) -> usize {
        self.envs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.envs.is_empty()
    }

    pub fn envs(&self) -> &[Env] {
        &self.envs
    }

    pub fn config(&self) -> &EnvConfig {
        self.envs[0].config()
    }

    pub fn reset(&mut self, seeds: &[u64]) -> Result<Vec<Vec<f64>>> {
        if seeds.len() != self.envs.len() {
            return Err(Error::DimensionMismatch { expected: self.envs.len(), got: seeds.len() });
        }
        self.envs.par_iter_mut().zip(seeds.par_iter()).map(|(e, &s)| e.reset(s)).collect()
    }

    pub fn step(&mut self, actions: &[ControlAction]) -> Result<Vec<StepOutcome>> {
        if actions.len() != self.envs.len() {
            return Err(Error::DimensionMismatch { expected: self.envs.len(), got: actions.len() });
        }
        self.envs.par_iter_mut().zip(actions.par_iter()).map(|(e, &a)| e.step(a)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn linear(observable: Observable) -> EnvConfig {
        EnvConfig::Linear(LinearEnvConfig { observable, ..Default::default() })
    }

    #[test]
    fn reset_examples() {
        let mut env = Env::new(linear(Observable::ExpectedN)).unwrap();
        assert_eq!(env.reset(1).unwrap(), vec![1.0]);
        let cfg = LinearEnvConfig { initial_state: InitialState::Mixed { p: 0.5 }, ..Default::default() };
        let mut env = Env::new(EnvConfig::Linear(cfg)).unwrap();
        assert!((env.reset(1).unwrap()[0] - 0.5).abs() < 1e-15);
        let nl = NonlinearEnvConfig { cutoff_cavity: 4, cutoff_mech: 4, ..Default::default() };
        let mut env = Env::new(EnvConfig::Nonlinear(nl)).unwrap();
        assert_eq!(env.reset(3).unwrap(), vec![0.0]);
    }

    #[test]
    fn invalid_mixture_rejected() {
        let cfg = LinearEnvConfig { initial_state: InitialState::Mixed { p: 1.5 }, ..Default::default() };
        assert!(matches!(Env::new(EnvConfig::Linear(cfg)), Err(Error::InvalidMixture(_))));
    }

    #[test]
    fn episode_has_exactly_t_steps() {
        let cfg = LinearEnvConfig { steps: 7, ..Default::default() };
        let mut env = Env::new(EnvConfig::Linear(cfg)).unwrap();
        env.reset(0).unwrap();
        let mut n = 0;
        loop {
            n += 1;
            let out = env.step(ControlAction::Linear { g: 1.0 }).unwrap();
            assert!(out.reward <= 0.0 && out.reward >= -1.0);
            if out.done {
                break;
            }
        }
        assert_eq!(n, 7);
        assert!(matches!(env.step(ControlAction::Linear { g: 1.0 }), Err(Error::EpisodeDone)));
    }

    #[test]
    fn same_seed_same_records() {
        for obs in [Observable::ExpectedN, Observable::Photocurrent] {
            let cfg = linear(obs);
            let run = |seed| {
                let mut env = Env::new(cfg.clone()).unwrap();
                env.reset(seed).unwrap();
                (0..50).map(|t| env.step(ControlAction::Linear { g: (t as f64).sin() }).unwrap().record).collect::<Vec<_>>()
            };
            assert_eq!(run(4), run(4));
            assert_ne!(run(4), run(5));
        }
    }

    #[test]
    fn reward_examples() {
        assert_eq!(linear_reward(0.5), 0.0);
        assert_eq!(linear_reward(1.0), -0.5);
        assert_eq!(target_generating_reward(LN_2, 0.5, 0.5, 1.0, 30.0), 0.0);
        assert!((target_generating_reward(0.0, 2.0, 0.0, 1.0, 30.0) + LN_2 + 1.0 / 30.0).abs() < 1e-15);
        assert_eq!(target_utilization_reward(0.25, 0.75), -0.5);
    }

    #[test]
    fn utilization_phase_requires_matching_target() {
        let cfg = NonlinearEnvConfig { phase: Phase::TargetUtilization, steps: 5, target_series: Some(vec![0.0; 4]), ..Default::default() };
        assert!(Env::new(EnvConfig::Nonlinear(cfg)).is_err());
    }

    #[test]
    fn vector_env_rejects_heterogeneous_configs() {
        let a = linear(Observable::ExpectedN);
        let mut b = a.clone();
        b.physics_mut().kappa = 0.02;
        assert!(matches!(VectorEnv::new(&[a.clone(), b]), Err(Error::HeterogeneousConfigs(_))));
        let mut v = VectorEnv::replicated(&a, 3).unwrap();
        let obs = v.reset(&[9, 9, 9]).unwrap();
        assert!(obs.iter().all(|o| o == &obs[0]));
        let out = v.step(&[ControlAction::Linear { g: 0.5 }; 3]).unwrap();
        assert!(out.iter().all(|o| o.record == out[0].record));
    }
}
