//! Plugging a hand-written controller into the environment: a bang-bang
//! law that swaps at full strength until the photon number crosses 1/2.
//!
//! cargo run --example custom_controller

use optomech::agents::Controller;
use optomech::dynamics::ControlAction;
use optomech::env::{Env, EnvConfig, LinearEnvConfig};
use optomech::harness::run_episode;
use optomech::observe::{episode_mean, percent_of_ln2};

struct BangBang {
    gain: f64,
}

impl Controller for BangBang {
    fn reset(&mut self, _seed: u64) {}

    fn act(&mut self, observation: &[f64]) -> optomech::Result<ControlAction> {
        let g = if observation[0] > 0.5 { -self.gain } else { self.gain };
        Ok(ControlAction::Linear { g })
    }

    fn name(&self) -> String {
        format!("bang-bang({})", self.gain)
    }
}

fn main() -> optomech::Result<()> {
    let mut env = Env::new(EnvConfig::Linear(LinearEnvConfig::default()))?;
    for gain in [0.5, 2.0, 5.0] {
        let mut c = BangBang { gain };
        let scores: Vec<f64> = (0..5)
            .map(|seed| {
                let trace = run_episode(&mut env, &mut c, seed)?;
                let en: Vec<f64> = trace.records.iter().map(|r| r.log_negativity).collect();
                Ok(percent_of_ln2(episode_mean(&en)))
            })
            .collect::<optomech::Result<_>>()?;
        println!("{:<14} {:?}", c.name(), scores.iter().map(|s| format!("{s:.1}%")).collect::<Vec<_>>());
    }
    Ok(())
}
