//! Configuration, experiment drivers, run logs and plot-data export.

pub mod commands;
pub mod config;
pub mod export;
pub mod runlog;

pub use commands::{
    cmd_baseline, cmd_eval, cmd_sweep, cmd_train, cmd_two_phase, eval_config, evaluate_controller, run_episode, run_phase2,
    train_ppo, BaselineOutcome, EpisodeTrace, GridPoint, Phase2Outcome, SweepAxis, SweepRow, TrainOutcome, TwoPhaseOutcome, CHECKPOINT_FILE,
    DIVERGED_FILE, GRID_FILE, SWEEP_FILE, TARGET_FILE,
};
pub use config::{AgentKind, ExperimentConfig, SeedStream};
pub use export::{export_plot_data, ExportKind};
pub use runlog::RunLog;
