use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest admissible magnitude of every control parameter, in units of omega_m.
pub const ACTION_BOUND: f64 = 5.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Linear,
    Nonlinear,
}

impl Regime {
    pub fn action_dim(self) -> usize {
        match self {
            Regime::Linear => 1,
            Regime::Nonlinear => 2,
        }
    }
}

/// Physical constants of one simulation. Frequencies and rates are in units
/// of the mechanical frequency, times in units of its inverse.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhysicsParams {
    pub omega_m: f64,
    /// Cavity decay rate.
    pub kappa: f64,
    /// Mechanical decay rate.
    pub gamma: f64,
    /// Single-photon optomechanical coupling (nonlinear regime only).
    pub g0: f64,
    /// Measurement rate of the photon-number projectors.
    pub eta: f64,
    /// Control step.
    pub dt: f64,
}

impl PhysicsParams {
    pub fn linear() -> Self {
        PhysicsParams { omega_m: 1.0, kappa: 0.01, gamma: 1e-4, g0: 0.0, eta: 1.0, dt: 0.01 }
    }

    pub fn nonlinear() -> Self {
        PhysicsParams { omega_m: 1.0, kappa: 0.1, gamma: 1e-3, g0: 0.2, eta: 0.1, dt: 0.01 }
    }

    pub fn for_regime(regime: Regime) -> Self {
        match regime {
            Regime::Linear => Self::linear(),
            Regime::Nonlinear => Self::nonlinear(),
        }
    }

    /// Sets `kappa` and ties `gamma` to it with the usual 1 % ratio.
    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self.gamma = 0.01 * kappa;
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.omega_m, self.kappa, self.gamma, self.g0, self.eta, self.dt]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("physics parameters must be finite".into()));
        }
        if self.kappa < 0.0 || self.gamma < 0.0 {
            return Err(Error::Config("decay rates must be non-negative".into()));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::Config(format!("measurement rate {} outside [0, 1]", self.eta)));
        }
        if self.dt <= 0.0 {
            return Err(Error::Config("dt must be positive".into()));
        }
        Ok(())
    }
}

/// The laser drive applied during one control step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum ControlAction {
    /// Beam-splitter coupling `G`.
    Linear { g: f64 },
    /// Detuning and drive amplitude.
    Nonlinear { delta: f64, alpha_l: f64 },
}

impl ControlAction {
    pub fn regime(&self) -> Regime {
        match self {
            ControlAction::Linear { .. } => Regime::Linear,
            ControlAction::Nonlinear { .. } => Regime::Nonlinear,
        }
    }

    /// Builds an action from raw values, clamping each into the admissible box.
    pub fn from_values(regime: Regime, values: &[f64]) -> Result<Self> {
        if values.len() != regime.action_dim() {
            return Err(Error::DimensionMismatch { expected: regime.action_dim(), got: values.len() });
        }
        let action = match regime {
            Regime::Linear => ControlAction::Linear { g: values[0] },
            Regime::Nonlinear => ControlAction::Nonlinear { delta: values[0], alpha_l: values[1] },
        };
        Ok(action.clamped())
    }

    pub fn clamped(self) -> Self {
        let c = |v: f64| if v.is_nan() { 0.0 } else { v.clamp(-ACTION_BOUND, ACTION_BOUND) };
        match self {
            ControlAction::Linear { g } => ControlAction::Linear { g: c(g) },
            ControlAction::Nonlinear { delta, alpha_l } => {
                ControlAction::Nonlinear { delta: c(delta), alpha_l: c(alpha_l) }
            }
        }
    }

    pub fn values(&self) -> Vec<f64> {
        match *self {
            ControlAction::Linear { g } => vec![g],
            ControlAction::Nonlinear { delta, alpha_l } => vec![delta, alpha_l],
        }
    }
}
