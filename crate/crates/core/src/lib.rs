//! Measurement-based feedback control of entanglement in a cavity
//! optomechanical system, with model-free reinforcement learning.
//!
//! * [`fock`]: truncated two-mode Fock space, density matrices, partial transpose.
//! * [`dynamics`]: Hamiltonians and the stochastic master equation under
//!   continuous photon-number measurement.
//! * [`observe`]: photocurrent, Gaussian filtering, logarithmic negativity,
//!   episode metrics.
//! * [`env`]: episodic control environments for the beam-splitter and the
//!   driven nonlinear regime.
//! * [`agents`]: PPO (feed-forward and LSTM), baseline controllers, checkpoints.
//! * [`harness`]: TOML experiment configs and the train / eval / baseline /
//!   sweep / two-phase / export drivers used by the `optomech` binary and the
//!   examples.
//!
//! ```
//! use optomech::fock::FockSpace;
//! use optomech::observe::log_negativity;
//!
//! let rho = FockSpace::linear().basis_state(1, 0).unwrap();
//! assert_eq!(log_negativity(&rho).unwrap(), 0.0);
//! ```

pub mod agents;
pub mod dynamics;
pub mod env;
pub mod error;
pub mod fock;
pub mod harness;
pub mod observe;

pub use error::{Error, Result};
