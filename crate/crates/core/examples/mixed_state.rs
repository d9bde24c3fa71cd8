//! Robustness to a classically mixed initial state
//! `(1 - p)|10><10| + p|01><01|`.
//!
//! cargo run --example mixed_state

use optomech::harness::{cmd_sweep, AgentKind, ExperimentConfig, SweepAxis};

fn main() -> optomech::Result<()> {
    let cfg = ExperimentConfig {
        agent: AgentKind::Bayesian,
        output_dir: std::env::temp_dir().join("optomech-mixed"),
        ..Default::default()
    };
    println!("{:>5}  {:>16}", "p", "E_N / ln2");
    for row in cmd_sweep(&cfg, SweepAxis::MixedP, &[0.0, 0.25, 0.5, 0.75, 1.0], None)? {
        println!("{:5.2}  {:7.2} +- {:5.2}%", row.value, row.percent, row.percent_std);
    }
    Ok(())
}
