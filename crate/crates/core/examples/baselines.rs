//! Bayesian proportional feedback and random control on the expected-number
//! task, through the same harness path as trained agents.
//!
//! cargo run --example baselines

use optomech::agents::BayesianLaw;
use optomech::harness::{cmd_baseline, AgentKind, ExperimentConfig};

fn main() -> optomech::Result<()> {
    let out = std::env::temp_dir().join("optomech-baselines");
    let mut cfg = ExperimentConfig { agent: AgentKind::Bayesian, output_dir: out.join("bayesian"), ..Default::default() };
    let bayes = cmd_baseline(&cfg)?;
    println!("lambda grid (tuning episodes):");
    for p in &bayes.grid {
        println!("  lambda {:>4}: {:6.2}% of ln2", p.lambda, p.percent);
    }
    let m = bayes.log.metrics().expect("ten test episodes");
    println!("best lambda {:?}: test {:.2} +- {:.2}%", bayes.lambda, m.percent(), m.percent_std());

    cfg.bayesian.law = BayesianLaw::Absolute;
    cfg.bayesian.lambda_grid = vec![10.0];
    cfg.output_dir = out.join("bayesian-absolute");
    let m = cmd_baseline(&cfg)?.log.metrics().expect("episodes");
    println!("absolute-value law at lambda 10: {:.2} +- {:.2}%", m.percent(), m.percent_std());

    cfg.agent = AgentKind::Random;
    cfg.output_dir = out.join("random");
    let m = cmd_baseline(&cfg)?.log.metrics().expect("episodes");
    println!("random control: {:.2} +- {:.2}%", m.percent(), m.percent_std());
    println!("logs under {}", out.display());
    Ok(())
}
