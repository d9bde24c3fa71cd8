//! Controllers that map an observation to an action without learning, and
//! a frozen-policy adapter with the same interface.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agents::policy::{ActorCritic, PolicyState};
use crate::agents::ppo::obs_matrix;
use crate::dynamics::{ControlAction, Regime, ACTION_BOUND};
use crate::error::{Error, Result};

/// Closed-loop controller interface shared by baselines and trained policies.
pub trait Controller: Send {
    /// Called at every episode start with that episode's seed.
    fn reset(&mut self, seed: u64);
    fn act(&mut self, observation: &[f64]) -> Result<ControlAction>;
    fn name(&self) -> String;
}

/// Form of the proportional feedback on the photon-number deviation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BayesianLaw {
    /// `G = -lambda |O - 1/2|`.
    Absolute,
    /// `G = -lambda (O - 1/2)`.
    #[default]
    Signed,
}

/// Proportional feedback `G = -lambda f(O - 1/2)` for the beam-splitter regime.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BayesianController {
    pub lambda: f64,
    pub law: BayesianLaw,
}

impl BayesianController {
    pub fn new(lambda: f64, law: BayesianLaw) -> Self {
        BayesianController { lambda, law }
    }

    pub fn coupling(&self, observation: f64) -> f64 {
        let dev = observation - 0.5;
        let g = match self.law {
            BayesianLaw::Absolute => -self.lambda * dev.abs(),
            BayesianLaw::Signed => -self.lambda * dev,
        };
        g.clamp(-ACTION_BOUND, ACTION_BOUND)
    }
}

impl Controller for BayesianController {
    fn reset(&mut self, _seed: u64) {}

    fn act(&mut self, observation: &[f64]) -> Result<ControlAction> {
        let o = *observation.first().ok_or(Error::DimensionMismatch { expected: 1, got: 0 })?;
        Ok(ControlAction::Linear { g: self.coupling(o) })
    }

    fn name(&self) -> String {
        format!("bayesian(lambda={}, {:?})", self.lambda, self.law)
    }
}

/// Independent uniform draws over the action box.
#[derive(Clone, Debug)]
pub struct RandomController {
    regime: Regime,
    rng: ChaCha8Rng,
}

impl RandomController {
    pub fn new(regime: Regime, seed: u64) -> Self {
        RandomController { regime, rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    pub fn draw(&mut self) -> ControlAction {
        let values: Vec<f64> = (0..self.regime.action_dim()).map(|_| self.rng.random_range(-ACTION_BOUND..=ACTION_BOUND)).collect();
        ControlAction::from_values(self.regime, &values).expect("dimension matches regime")
    }
}

impl Controller for RandomController {
    fn reset(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    fn act(&mut self, _observation: &[f64]) -> Result<ControlAction> {
        Ok(self.draw())
    }

    fn name(&self) -> String {
        "random".into()
    }
}

/// A trained actor-critic with frozen parameters. Deterministic mode applies
/// the squashed mean; stochastic mode samples like training did.
#[derive(Clone, Debug)]
pub struct PolicyController {
    model: ActorCritic,
    regime: Regime,
    deterministic: bool,
    state: Option<PolicyState>,
    rng: ChaCha8Rng,
}

impl PolicyController {
    pub fn new(model: ActorCritic, regime: Regime, deterministic: bool) -> Result<Self> {
        if model.action_dim != regime.action_dim() {
            return Err(Error::IncompatibleCheckpoint(format!(
                "policy emits {} actions but the regime needs {}",
                model.action_dim,
                regime.action_dim()
            )));
        }
        let state = model.initial_state(1);
        Ok(PolicyController { model, regime, deterministic, state, rng: ChaCha8Rng::seed_from_u64(0) })
    }

    pub fn model(&self) -> &ActorCritic {
        &self.model
    }
}

impl Controller for PolicyController {
    fn reset(&mut self, seed: u64) {
        self.state = self.model.initial_state(1);
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }

    fn act(&mut self, observation: &[f64]) -> Result<ControlAction> {
        let x = obs_matrix(&self.model.preprocess(&[observation.to_vec()]), self.model.obs_dim)?;
        let out = self.model.evaluate(&x, self.state.as_mut())?;
        let mean: Vec<f64> = out.mean.column(0).iter().copied().collect();
        let u = if self.deterministic { mean } else { self.model.sample(&mean, &mut self.rng) };
        ControlAction::from_values(self.regime, &self.model.squash(&u))
    }

    fn name(&self) -> String {
        format!("{:?} policy", self.model.kind)
    }
}
