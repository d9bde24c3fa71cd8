//! Measurement record of a photon-number measurement and its Gaussian
//! smoothing, along a swap trajectory.
//!
//! cargo run --example photocurrent_filter

use optomech::dynamics::{ControlAction, NoiseSource, PhysicsParams, SmeIntegrator, SmeOptions, WienerStream};
use optomech::fock::FockSpace;
use optomech::observe::{expected_photon_number, gaussian_filter, mean_std, photocurrent, GaussianFilterConfig};

fn main() -> optomech::Result<()> {
    let space = FockSpace::linear();
    let params = PhysicsParams::linear();
    let sme = SmeIntegrator::new(space, params, SmeOptions::default())?;
    let steps = 600;
    let traj = sme.run_trajectory(
        &space.basis_state(1, 0)?,
        &vec![ControlAction::Linear { g: 0.5 }; steps],
        &NoiseSource::Wiener(WienerStream::new(3, 0)),
    )?;
    let raw: Vec<f64> = (0..steps)
        .map(|k| photocurrent(&traj.states[k], &traj.increments[k], &params))
        .collect::<Result<_, _>>()?;
    let truth: Vec<f64> = traj.states[..steps].iter().map(expected_photon_number).collect();

    let residual: Vec<f64> = raw.iter().zip(&truth).map(|(i, n)| i - n).collect();
    let (bias, sd) = mean_std(&residual);
    println!("raw current: residual mean {bias:+.3}, std {sd:.2} (expected 1/(2 eta sqrt(dt)) = {:.2})", 1.0 / (2.0 * params.eta * params.dt.sqrt()));

    for cfg in [GaussianFilterConfig::default(), GaussianFilterConfig { causal: false, ..Default::default() }] {
        let smooth = gaussian_filter(&raw, &cfg);
        let err: Vec<f64> = smooth.iter().zip(&truth).map(|(s, n)| (s - n).abs()).collect();
        println!("filter sigma = {} steps, causal = {}: mean |filtered - <n_p>| = {:.3}", cfg.sigma_steps, cfg.causal, mean_std(&err).0);
    }

    let smooth = gaussian_filter(&raw, &GaussianFilterConfig::default());
    println!("\n{:>5} {:>8} {:>9} {:>8}", "t", "<n_p>", "raw I", "filtered");
    for k in (0..steps).step_by(50) {
        println!("{:5.2} {:8.4} {:9.3} {:8.4}", k as f64 * params.dt, truth[k], raw[k], smooth[k]);
    }
    Ok(())
}
