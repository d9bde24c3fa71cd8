//! Actor-critic learning stack and baseline controllers.

pub mod baselines;
pub mod checkpoint;
pub mod nn;
pub mod optim;
pub mod policy;
pub mod ppo;

pub use baselines::{BayesianController, BayesianLaw, Controller, PolicyController, RandomController};
pub use checkpoint::{Checkpoint, CHECKPOINT_FORMAT};
pub use policy::{ActorCritic, NetworkConfig, PolicyKind, PolicyState};
pub use ppo::{gae, PpoAgent, PpoConfig, RolloutBuffer, Sequence, UpdateStats};
