//! Feedback from the filtered photocurrent of five averaged trajectories,
//! compared against the random controller, and tested at a longer horizon.
//!
//! cargo run --example photocurrent_ppo -- [episodes] [ppo|recurrent_ppo]

use optomech::env::{EnvConfig, LinearEnvConfig, Observable};
use optomech::harness::{cmd_eval, cmd_train, AgentKind, ExperimentConfig};

fn main() -> optomech::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let mut args = std::env::args().skip(1);
    let episodes = args.next().and_then(|a| a.parse().ok()).unwrap_or(20);
    let agent = match args.next().as_deref() {
        Some("recurrent_ppo") => AgentKind::RecurrentPpo,
        _ => AgentKind::Ppo,
    };
    let out = std::env::temp_dir().join("optomech-photocurrent");
    let env = EnvConfig::Linear(LinearEnvConfig { observable: Observable::Photocurrent, n_traj: 5, ..Default::default() });
    let cfg = ExperimentConfig { agent, env, train_episodes: episodes, output_dir: out.join("train"), ..Default::default() };

    let trained = cmd_train(&cfg)?;
    let ckpt = optomech::agents::Checkpoint::load(trained.checkpoint.as_ref().expect("checkpoint"))?;
    let test = ExperimentConfig { output_dir: out.join("eval"), ..cfg.clone() };
    let m = cmd_eval(&test, Some(&ckpt))?.metrics().expect("episodes");
    println!("{agent:?} after {episodes} episodes: {:.2} +- {:.2}% of ln2", m.percent(), m.percent_std());

    let mut long = test.clone();
    long.env.set_steps(2000);
    long.output_dir = out.join("eval-T2000");
    let m = cmd_eval(&long, Some(&ckpt))?.metrics().expect("episodes");
    println!("same policy at T = 2000: {:.2} +- {:.2}%", m.percent(), m.percent_std());

    let random = ExperimentConfig { agent: AgentKind::Random, output_dir: out.join("random"), ..cfg };
    let m = cmd_eval(&random, None)?.metrics().expect("episodes");
    println!("random control: {:.2} +- {:.2}%", m.percent(), m.percent_std());
    Ok(())
}
