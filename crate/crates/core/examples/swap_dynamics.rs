//! Conditional dynamics of the beam-splitter regime: a photon swapping into
//! the mechanics, with and without losses and measurement.
//!
//! cargo run --example swap_dynamics

use optomech::dynamics::{ControlAction, NoiseSource, PhysicsParams, SmeIntegrator, SmeOptions, WienerStream};
use optomech::fock::FockSpace;
use optomech::observe::{expected_photon_number, log_negativity};

fn main() -> optomech::Result<()> {
    let space = FockSpace::linear();
    let rho0 = space.basis_state(1, 0)?;
    let g = 1.0;
    let steps = 320; // a little more than one full swap at dt = 0.01
    let actions = vec![ControlAction::Linear { g }; steps];

    let lossless = PhysicsParams { kappa: 0.0, gamma: 0.0, eta: 0.0, ..PhysicsParams::linear() };
    let sme = SmeIntegrator::new(space, lossless, SmeOptions::default())?;
    let closed = sme.run_trajectory(&rho0, &actions, &NoiseSource::Zero)?;

    let measured = SmeIntegrator::new(space, PhysicsParams::linear(), SmeOptions::default())?;
    let noisy = measured.run_trajectory(&rho0, &actions, &NoiseSource::Wiener(WienerStream::new(7, 0)))?;

    println!("{:>6} {:>10} {:>10} {:>10} {:>10}", "t", "cos^2(Gt)", "<n_p>", "<n_p>|eta", "E_N|eta");
    for k in (0..=steps).step_by(20) {
        let t = k as f64 * lossless.dt;
        println!(
            "{t:6.2} {:10.6} {:10.6} {:10.6} {:10.6}",
            (g * t).cos().powi(2),
            expected_photon_number(&closed.states[k]),
            expected_photon_number(&noisy.states[k]),
            log_negativity(&noisy.states[k])?,
        );
    }

    // damped cavity: <n_p> = exp(-kappa t) without coupling
    let damped = PhysicsParams { kappa: 0.5, gamma: 0.0, eta: 0.0, ..PhysicsParams::linear() };
    let sme = SmeIntegrator::new(space, damped, SmeOptions::default())?;
    let idle = sme.run_trajectory(&rho0, &vec![ControlAction::Linear { g: 0.0 }; 200], &NoiseSource::Zero)?;
    let t = 200.0 * damped.dt;
    println!("\ndamped cavity at t = {t}: <n_p> = {:.8}, exp(-kappa t) = {:.8}", expected_photon_number(&idle.states[200]), (-damped.kappa * t).exp());
    Ok(())
}
