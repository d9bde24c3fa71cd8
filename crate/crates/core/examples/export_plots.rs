//! Produces plot-ready long-format tables from a run directory.
//!
//! cargo run --example export_plots -- [run_dir]
//!
//! Without an argument a short Bayesian evaluation is run first.

use std::path::PathBuf;

use optomech::harness::{cmd_eval, export_plot_data, AgentKind, ExperimentConfig, RunLog};

fn main() -> optomech::Result<()> {
    let run = match std::env::args().nth(1) {
        Some(dir) => PathBuf::from(dir),
        None => {
            let cfg = ExperimentConfig {
                agent: AgentKind::Bayesian,
                eval_episodes: 3,
                output_dir: std::env::temp_dir().join("optomech-export"),
                ..Default::default()
            };
            cmd_eval(&cfg, None)?;
            cfg.output_dir
        }
    };
    let log = RunLog::read(&run)?;
    log.check_consistency()?;
    for kind in ["training-curve", "time-series", "fock-stats"] {
        let path = export_plot_data(&log, kind, &run.join("plots"))?;
        let rows = std::fs::read_to_string(&path)?.lines().count() - 2;
        println!("{kind:<15} {rows:>6} rows -> {}", path.display());
    }
    if let Err(e) = export_plot_data(&log, "spectrogram", &run.join("plots")) {
        println!("unsupported kind: {e}");
    }
    Ok(())
}
