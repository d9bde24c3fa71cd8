use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use optomech::agents::Checkpoint;
use optomech::harness::{self, ExperimentConfig, RunLog, SweepAxis};
use optomech::{Error, Result};

#[derive(Parser)]
#[command(name = "optomech", version, about = "Feedback control of optomechanical entanglement")]
struct Cli {
    /// TOML experiment configuration; defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Dotted-key override such as `env.physics.kappa=0.03`; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the configured agent and save a checkpoint.
    Train,
    /// Evaluate a checkpoint or a fixed controller.
    Eval {
        /// Checkpoint of a learning agent; its embedded config is used unless --config is given.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Bayesian gain search or random control.
    Baseline,
    /// One run per value of a physical parameter.
    Sweep {
        /// kappa, eta, T or mixed_p.
        #[arg(long)]
        axis: String,
        /// Comma-separated parameter values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<f64>,
        /// Evaluate this policy at every point instead of training one per point.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Target generation followed by target tracking (nonlinear regime).
    TwoPhase,
    /// Plot-ready tables from a run directory.
    Export {
        /// Run directory holding episodes.csv, steps.csv and fock.csv.
        #[arg(long)]
        run: PathBuf,
        /// training-curve, time-series or fock-stats.
        #[arg(long)]
        kind: String,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(report) => {
            println!("{report}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let mut report = json!({ "error": e.kind(), "message": e.to_string() });
            if let Error::TrainingDiverged { dump: Some(p), .. } = &e {
                report["dump"] = json!(p);
            }
            eprintln!("{report}");
            ExitCode::FAILURE
        }
    }
}

fn base_config(cli: &Cli) -> Result<ExperimentConfig> {
    match &cli.config {
        Some(p) => ExperimentConfig::from_file(p),
        None => Ok(ExperimentConfig::default()),
    }
}

fn finish(cli: &Cli, mut cfg: ExperimentConfig) -> Result<ExperimentConfig> {
    if let Some(s) = cli.seed {
        cfg.seeds.master = s;
    }
    if let Some(o) = &cli.out {
        cfg.output_dir = o.clone();
    }
    Ok(cfg)
}

fn resolved(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = base_config(cli)?;
    cfg.apply_overrides(&cli.overrides)?;
    finish(cli, cfg)
}

fn summary(log: &RunLog, dir: &Path) -> Value {
    json!({
        "command": log.meta.command,
        "output_dir": dir,
        "config_hash": log.meta.config_hash,
        "episodes": log.meta.episodes,
        "log_negativity_percent": log.metrics().map(|m| m.percent()),
        "log_negativity_percent_std": log.metrics().map(|m| m.percent_std()),
        "metrics": log.metrics(),
        "extra": log.meta.extra,
    })
}

fn run(cli: Cli) -> Result<Value> {
    match &cli.command {
        Command::Train => {
            let cfg = resolved(&cli)?;
            let out = harness::cmd_train(&cfg)?;
            let mut report = summary(&out.log, &cfg.output_dir);
            report["checkpoint"] = json!(out.checkpoint);
            Ok(report)
        }
        Command::Eval { checkpoint } => {
            let (cfg, ck) = match checkpoint {
                Some(path) => {
                    let ck = Checkpoint::load(path)?;
                    let explicit = cli.config.as_deref().map(ExperimentConfig::from_file).transpose()?;
                    let mut cfg = harness::eval_config(&ck, explicit, &cli.overrides)?;
                    cfg.output_dir = path.parent().unwrap_or(Path::new(".")).join("eval");
                    (finish(&cli, cfg)?, Some(ck))
                }
                None => (resolved(&cli)?, None),
            };
            let log = harness::cmd_eval(&cfg, ck.as_ref())?;
            Ok(summary(&log, &cfg.output_dir))
        }
        Command::Baseline => {
            let cfg = resolved(&cli)?;
            let out = harness::cmd_baseline(&cfg)?;
            let mut report = summary(&out.log, &cfg.output_dir);
            report["lambda"] = json!(out.lambda);
            report["grid"] = json!(out.grid);
            Ok(report)
        }
        Command::Sweep { axis, values, checkpoint } => {
            let axis: SweepAxis = axis.parse()?;
            let cfg = resolved(&cli)?;
            let ck = checkpoint.as_deref().map(Checkpoint::load).transpose()?;
            let rows = harness::cmd_sweep(&cfg, axis, values, ck.as_ref())?;
            Ok(json!({ "command": "sweep", "output_dir": cfg.output_dir, "rows": rows }))
        }
        Command::TwoPhase => {
            let cfg = resolved(&cli)?;
            let out = harness::cmd_two_phase(&cfg)?;
            Ok(json!({
                "command": "two-phase",
                "output_dir": cfg.output_dir,
                "target_episode": out.target_episode,
                "phase1": summary(&out.phase1, &cfg.output_dir.join("phase1")),
                "phase2": summary(&out.phase2.train, &cfg.output_dir.join("phase2")),
                "phase2_eval": summary(&out.phase2.eval, &cfg.output_dir.join("phase2_eval")),
                "random_eval": summary(&out.phase2.random_eval, &cfg.output_dir.join("random_eval")),
            }))
        }
        Command::Export { run, kind } => {
            let log = RunLog::read(run)?;
            log.check_consistency()?;
            let out = cli.out.clone().unwrap_or_else(|| run.join("plots"));
            let path = harness::export_plot_data(&log, kind, &out)?;
            Ok(json!({ "command": "export", "kind": kind, "path": path }))
        }
    }
}
