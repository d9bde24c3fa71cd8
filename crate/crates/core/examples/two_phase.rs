//! Nonlinear regime: generate an entangling photon-number profile with PPO,
//! then teach a recurrent agent to track it. Runs at a reduced 4x4 Fock
//! space and a short horizon so it finishes in minutes; raise the numbers
//! for real experiments.
//!
//! cargo run --example two_phase -- [phase1_episodes] [phase2_episodes]

use optomech::env::{EnvConfig, NonlinearEnvConfig};
use optomech::harness::{cmd_two_phase, AgentKind, ExperimentConfig};

fn main() -> optomech::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let mut args = std::env::args().skip(1).map(|a| a.parse::<usize>().ok());
    let p1 = args.next().flatten().unwrap_or(60);
    let p2 = args.next().flatten().unwrap_or(20);
    let mut cfg = ExperimentConfig {
        agent: AgentKind::Ppo,
        env: EnvConfig::Nonlinear(NonlinearEnvConfig { cutoff_cavity: 4, cutoff_mech: 4, steps: 100, ..Default::default() }),
        eval_episodes: 4,
        output_dir: std::env::temp_dir().join("optomech-two-phase"),
        ..Default::default()
    };
    cfg.ppo.network.hidden = vec![64, 64];
    cfg.ppo.network.lstm_hidden = 32;
    cfg.two_phase.phase1_episodes = p1;
    cfg.two_phase.phase2_episodes = p2;

    match cmd_two_phase(&cfg) {
        Ok(out) => {
            println!("target episode {} ({} steps)", out.target_episode, out.target_series.len());
            let show = |name: &str, log: &optomech::harness::RunLog| {
                if let Some(m) = log.metrics() {
                    println!("{name:<18} {:6.2} +- {:5.2}% of ln2", m.percent(), m.percent_std());
                }
            };
            show("phase 1 (train)", &out.phase1);
            show("phase 2 (train)", &out.phase2.train);
            show("phase 2 (test)", &out.phase2.eval);
            show("random control", &out.phase2.random_eval);
        }
        Err(e @ optomech::Error::NotConverged(_)) => println!("phase 1 aborted: {e}"),
        Err(e) => return Err(e),
    }
    Ok(())
}
