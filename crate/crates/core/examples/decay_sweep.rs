//! Sweeps of the decay and measurement rates with the Bayesian controller.
//!
//! cargo run --example decay_sweep

use optomech::harness::{cmd_sweep, AgentKind, ExperimentConfig, SweepAxis};

fn main() -> optomech::Result<()> {
    let out = std::env::temp_dir().join("optomech-sweeps");
    let base = ExperimentConfig { agent: AgentKind::Bayesian, ..Default::default() };
    for (axis, values) in [(SweepAxis::Kappa, vec![0.0, 0.01, 0.03, 0.05]), (SweepAxis::Eta, vec![0.05, 0.1, 0.3, 0.5, 0.7, 1.0])] {
        let cfg = ExperimentConfig { output_dir: out.join(axis.name()), ..base.clone() };
        println!("{}:", axis.name());
        for row in cmd_sweep(&cfg, axis, &values, None)? {
            println!("  {:>5} {:>6}  {:6.2} +- {:5.2}%", row.value, row.status, row.percent, row.percent_std);
        }
    }
    // an unphysical value fails on its own without stopping the sweep
    let cfg = ExperimentConfig { output_dir: out.join("bad"), ..base };
    for row in cmd_sweep(&cfg, SweepAxis::Eta, &[0.5, 2.0], None)? {
        println!("  eta {:>4}: {} {}", row.value, row.status, row.error);
    }
    Ok(())
}
