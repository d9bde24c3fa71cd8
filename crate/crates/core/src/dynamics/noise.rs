//! Reproducible Wiener increments.
//!
//! Every trajectory owns a stream keyed by `(run_seed, trajectory_index)`.
//! The increments of control step `k` are drawn from a ChaCha generator
//! positioned at stream `k` of that key, so a step's noise does not depend
//! on how many variates earlier steps consumed or on thread scheduling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// SplitMix64 finalizer, used to spread seeds into independent keys.
pub fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives a child seed from a parent seed and a list of indices.
pub fn derive_seed(parent: u64, path: &[u64]) -> u64 {
    path.iter().fold(mix64(parent), |acc, &i| mix64(acc ^ mix64(i.wrapping_add(0x51_7CC1_B727_220A))))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WienerStream {
    run_seed: u64,
    trajectory: u64,
    key: [u8; 32],
}

impl WienerStream {
    pub fn new(run_seed: u64, trajectory_index: u64) -> Self {
        let mut key = [0u8; 32];
        let mut state = derive_seed(run_seed, &[trajectory_index]);
        for chunk in key.chunks_mut(8) {
            state = mix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        WienerStream { run_seed, trajectory: trajectory_index, key }
    }

    pub fn run_seed(&self) -> u64 {
        self.run_seed
    }

    pub fn trajectory_index(&self) -> u64 {
        self.trajectory
    }

    /// `count` independent N(0, h) increments for control step `step`.
    pub fn increments(&self, step: u64, count: usize, h: f64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::from_seed(self.key);
        rng.set_stream(step);
        let sd = h.sqrt();
        (0..count).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect()
    }
}

/// Source of measurement noise for the integrator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseSource {
    Wiener(WienerStream),
    /// All increments forced to zero: the integrator then follows the
    /// unconditional (measurement-averaged) master equation.
    Zero,
}
