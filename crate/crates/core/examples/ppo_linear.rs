//! Trains a feed-forward PPO agent on the expected-number observation and
//! evaluates the frozen policy.
//!
//! cargo run --example ppo_linear -- [episodes]

use optomech::harness::{cmd_eval, cmd_train, AgentKind, ExperimentConfig};

fn main() -> optomech::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let episodes = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(60);
    let out = std::env::temp_dir().join("optomech-ppo-linear");
    let cfg = ExperimentConfig { agent: AgentKind::Ppo, train_episodes: episodes, output_dir: out.join("train"), ..Default::default() };
    let trained = cmd_train(&cfg)?;
    let m = trained.log.metrics().expect("at least one episode");
    println!("training ({episodes} episodes): last ten {:.2} +- {:.2}% of ln2", m.percent(), m.percent_std());

    let ckpt = optomech::agents::Checkpoint::load(trained.checkpoint.as_ref().expect("learner saves a checkpoint"))?;
    let eval_cfg = ExperimentConfig { output_dir: out.join("eval"), ..cfg };
    let m = cmd_eval(&eval_cfg, Some(&ckpt))?.metrics().expect("ten test episodes");
    println!("testing: {:.2} +- {:.2}% of ln2", m.percent(), m.percent_std());
    Ok(())
}
