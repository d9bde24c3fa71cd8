//! Hamiltonians, superoperators and the stochastic master-equation integrator.

pub mod hamiltonian;
pub mod noise;
pub mod params;
pub mod sme;
pub mod superop;

pub use hamiltonian::{hamiltonian_linear, hamiltonian_nonlinear, HamiltonianTerms};
pub use noise::{derive_seed, NoiseSource, WienerStream};
pub use params::{ControlAction, PhysicsParams, Regime, ACTION_BOUND};
pub use sme::{Scheme, SmeIntegrator, SmeOptions, Trajectory};
pub use superop::{lindblad_dissipator, measurement_superop};
