//! Experiment drivers behind the CLI subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::{BayesianController, Checkpoint, Controller, PolicyController, PpoAgent, RandomController};
use crate::dynamics::derive_seed;
use crate::env::{Env, EnvConfig, InitialState, Phase, StepRecord, VectorEnv};
use crate::error::{Error, Result};
use crate::fock::Mode;
use crate::harness::config::{AgentKind, ExperimentConfig, SeedStream};
use crate::harness::runlog::{write_csv, RunLog};
use crate::observe::{mean_std, moving_average, percent_of_ln2};

pub const CHECKPOINT_FILE: &str = "checkpoint.json";
pub const DIVERGED_FILE: &str = "diverged_state.json";
pub const TARGET_FILE: &str = "target_series.csv";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const GRID_FILE: &str = "baseline_grid.csv";

/// Window of the reward moving average used by the convergence test.
pub const CONVERGENCE_WINDOW: usize = 100;

/// Everything one closed-loop episode produced.
#[derive(Clone, Debug)]
pub struct EpisodeTrace {
    pub records: Vec<StepRecord>,
    pub cavity_populations: Vec<f64>,
    pub mechanical_populations: Vec<f64>,
}

/// Runs one episode of `env` under `controller`.
pub fn run_episode(env: &mut Env, controller: &mut dyn Controller, seed: u64) -> Result<EpisodeTrace> {
    let mut obs = env.reset(seed)?;
    controller.reset(derive_seed(seed, &[2]));
    let mut records = Vec::with_capacity(env.config().steps());
    loop {
        let action = controller.act(&obs)?;
        let out = env.step(action)?;
        obs = out.observation;
        records.push(out.record);
        if out.done {
            break;
        }
    }
    Ok(EpisodeTrace {
        records,
        cavity_populations: env.populations(Mode::Cavity),
        mechanical_populations: env.populations(Mode::Mech),
    })
}

/// Evaluates fresh controllers from `make` on `episodes` independent
/// episodes (in parallel) and appends them to `log` in episode order.
pub fn evaluate_controller<F>(cfg: &ExperimentConfig, stream: SeedStream, episodes: usize, make: F, log: &mut RunLog) -> Result<()>
where
    F: Fn() -> Result<Box<dyn Controller>> + Sync,
{
    let traces: Vec<EpisodeTrace> = (0..episodes)
        .into_par_iter()
        .map(|i| {
            let mut env = Env::new(cfg.env.clone())?;
            let mut controller = make()?;
            run_episode(&mut env, controller.as_mut(), cfg.episode_seed(stream, 0, i))
        })
        .collect::<Result<_>>()?;
    for trace in traces {
        let ep = log.push_episode(0, &trace.records, true);
        log.push_fock(ep, &trace.cavity_populations, &trace.mechanical_populations);
    }
    Ok(())
}

/// Non-learning controller selected by the config.
pub fn baseline_controller(cfg: &ExperimentConfig, lambda: f64) -> Result<Box<dyn Controller>> {
    match cfg.agent {
        AgentKind::Bayesian => Ok(Box::new(BayesianController::new(lambda, cfg.bayesian.law))),
        AgentKind::Random => Ok(Box::new(RandomController::new(cfg.regime(), 0))),
        other => Err(Error::Config(format!("{other:?} is a learning agent, not a fixed controller"))),
    }
}

/// Trains a PPO learner on `env_cfg`. `on_episode` sees every finished
/// episode with its global index.
#[allow(clippy::too_many_arguments)]
pub fn train_ppo(
    cfg: &ExperimentConfig,
    env_cfg: &EnvConfig,
    kind: AgentKind,
    episodes: usize,
    episodes_per_update: usize,
    out_dir: &Path,
    log: &mut RunLog,
    on_episode: &mut dyn FnMut(usize, &[StepRecord]),
) -> Result<PpoAgent> {
    let policy = kind.policy_kind().ok_or_else(|| Error::Config(format!("{kind:?} cannot be trained")))?;
    let mut ppo = cfg.ppo.clone();
    ppo.episodes_per_update = episodes_per_update;
    let mut agent = PpoAgent::new(policy, env_cfg.obs_dim(), env_cfg.action_dim(), ppo, cfg.agent_seed())?;
    let n = cfg.n_envs;
    let mut venv = VectorEnv::replicated(env_cfg, n)?;
    let rounds = episodes.div_ceil(n);
    let mut round = 0;
    while round < rounds {
        let r = episodes_per_update.min(rounds - round);
        let seeds: Vec<Vec<u64>> =
            (round..round + r).map(|q| (0..n).map(|k| cfg.episode_seed(SeedStream::Train, k, q)).collect()).collect();
        let (buffer, records) = agent.collect(&mut venv, &seeds)?;
        let final_call = round + r == rounds;
        for (i, recs) in records.iter().enumerate() {
            let k = i % n;
            let last_round = final_call && i / n == r - 1;
            let every = cfg.log.steps_every;
            let keep = last_round || (every > 0 && log.episodes.len().is_multiple_of(every));
            let ep = log.push_episode(k, recs, keep);
            if last_round {
                let e = &venv.envs()[k];
                log.push_fock(ep, &e.populations(Mode::Cavity), &e.populations(Mode::Mech));
            }
            on_episode(ep, recs);
        }
        let stats = match agent.update(&buffer) {
            Ok(s) if s.policy_loss.is_finite() && s.value_loss.is_finite() => s,
            Ok(s) => return Err(diverged(&agent, out_dir, format!("non-finite losses {s:?}"))),
            Err(Error::TrainingDiverged { reason, .. }) => return Err(diverged(&agent, out_dir, reason)),
            Err(e) => return Err(e),
        };
        round += r;
        let recent = &log.episodes[log.episodes.len().saturating_sub(n * r)..];
        let en: Vec<f64> = recent.iter().map(|e| e.mean_log_negativity).collect();
        log::info!(
            "{kind:?} update {}: episodes {}/{}, E_N {:.1}% of ln2, value loss {:.4}, kl {:.2e}",
            agent.updates,
            round * n,
            rounds * n,
            percent_of_ln2(mean_std(&en).0),
            stats.value_loss,
            stats.approx_kl
        );
    }
    Ok(agent)
}

/// Dumps the learner's last finite state next to the run outputs.
fn diverged(agent: &PpoAgent, out_dir: &Path, reason: String) -> Error {
    let path = out_dir.join(DIVERGED_FILE);
    let dump = fs::create_dir_all(out_dir)
        .map_err(Error::from)
        .and_then(|_| serde_json::to_vec(agent).map_err(Error::from))
        .and_then(|bytes| fs::write(&path, bytes).map_err(Error::from))
        .ok()
        .map(|_| path);
    Error::TrainingDiverged { reason, dump }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    pub log: RunLog,
    pub agent: Option<PpoAgent>,
    pub checkpoint: Option<PathBuf>,
}

/// Trains the configured agent and writes its log and checkpoint to
/// `output_dir`. Fixed controllers are evaluated instead.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<TrainOutcome> {
    cfg.validate()?;
    let out = cfg.output_dir.clone();
    let mut log = RunLog::new("train", cfg)?;
    if !cfg.agent.learns() {
        evaluate_controller(cfg, SeedStream::Eval, cfg.eval_episodes, || baseline_controller(cfg, cfg.bayesian.lambda), &mut log)?;
        log.meta.extra.insert("trained_episodes".into(), 0.0);
        log.finalize()?;
        log.write(&out)?;
        return Ok(TrainOutcome { log, agent: None, checkpoint: None });
    }
    let agent = train_ppo(cfg, &cfg.env, cfg.agent, cfg.train_episodes, cfg.ppo.episodes_per_update, &out, &mut log, &mut |_, _| {})?;
    log.finalize()?;
    log.write(&out)?;
    let path = out.join(CHECKPOINT_FILE);
    checkpoint_for(cfg, &agent, log.episodes.len())?.save(&path)?;
    Ok(TrainOutcome { log, agent: Some(agent), checkpoint: Some(path) })
}

pub fn checkpoint_for(cfg: &ExperimentConfig, agent: &PpoAgent, episodes: usize) -> Result<Checkpoint> {
    Ok(Checkpoint::new(agent.clone(), cfg.regime(), serde_json::to_value(cfg)?, cfg.hash()?, episodes))
}

/// Configuration for evaluating `checkpoint`: the embedded training config,
/// or `explicit` after checking that its hash matches. Overrides are applied
/// afterwards, so horizons and physics can be changed for testing.
pub fn eval_config<S: AsRef<str>>(checkpoint: &Checkpoint, explicit: Option<ExperimentConfig>, overrides: &[S]) -> Result<ExperimentConfig> {
    let mut cfg = match explicit {
        Some(c) => {
            let found = c.hash()?;
            if found != checkpoint.config_hash {
                return Err(Error::ConfigHashMismatch { expected: checkpoint.config_hash.clone(), found });
            }
            c
        }
        None => serde_json::from_value(checkpoint.config.clone())?,
    };
    cfg.apply_overrides(overrides)?;
    Ok(cfg)
}

/// Frozen-policy (or fixed-controller) evaluation over `eval_episodes`.
pub fn cmd_eval(cfg: &ExperimentConfig, checkpoint: Option<&Checkpoint>) -> Result<RunLog> {
    cfg.validate()?;
    let mut log = RunLog::new("eval", cfg)?;
    match (cfg.agent.learns(), checkpoint) {
        (true, Some(ck)) => {
            if ck.regime != cfg.regime() {
                return Err(Error::IncompatibleCheckpoint(format!(
                    "checkpoint is for the {:?} regime, config for {:?}",
                    ck.regime,
                    cfg.regime()
                )));
            }
            let model = &ck.agent.model;
            if model.obs_dim != cfg.env.obs_dim() || model.action_dim != cfg.env.action_dim() {
                return Err(Error::IncompatibleCheckpoint("observation or action size differs".into()));
            }
            let make = || -> Result<Box<dyn Controller>> {
                Ok(Box::new(PolicyController::new(model.clone(), cfg.regime(), cfg.eval_deterministic)?))
            };
            evaluate_controller(cfg, SeedStream::Eval, cfg.eval_episodes, make, &mut log)?;
            log.meta.extra.insert("trained_episodes".into(), ck.episodes_trained as f64);
        }
        (true, None) => return Err(Error::Config("evaluating a learning agent needs a checkpoint".into())),
        (false, _) => {
            evaluate_controller(cfg, SeedStream::Eval, cfg.eval_episodes, || baseline_controller(cfg, cfg.bayesian.lambda), &mut log)?;
            if cfg.agent == AgentKind::Bayesian {
                log.meta.extra.insert("lambda".into(), cfg.bayesian.lambda);
            }
        }
    }
    log.finalize()?;
    log.write(&cfg.output_dir)?;
    Ok(log)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub lambda: f64,
    pub mean_log_negativity: f64,
    pub std_log_negativity: f64,
    pub percent: f64,
}

#[derive(Clone, Debug)]
pub struct BaselineOutcome {
    pub log: RunLog,
    /// Gain search results (Bayesian only).
    pub grid: Vec<GridPoint>,
    pub lambda: Option<f64>,
}

/// Baseline controllers. The Bayesian gain is picked by grid search on
/// tuning episodes, then tested on fresh evaluation episodes.
pub fn cmd_baseline(cfg: &ExperimentConfig) -> Result<BaselineOutcome> {
    cfg.validate()?;
    let mut grid = Vec::new();
    let mut lambda = None;
    if cfg.agent == AgentKind::Bayesian {
        for &l in &cfg.bayesian.lambda_grid {
            let mut tune = RunLog::new("baseline-tune", cfg)?;
            evaluate_controller(cfg, SeedStream::Tune, cfg.eval_episodes, || baseline_controller(cfg, l), &mut tune)?;
            let en: Vec<f64> = tune.episodes.iter().map(|e| e.mean_log_negativity).collect();
            let (m, s) = mean_std(&en);
            log::info!("lambda {l}: {:.2}% of ln2", percent_of_ln2(m));
            grid.push(GridPoint { lambda: l, mean_log_negativity: m, std_log_negativity: s, percent: percent_of_ln2(m) });
        }
        let best = grid
            .iter()
            .fold(None::<&GridPoint>, |acc, p| match acc {
                Some(a) if a.mean_log_negativity >= p.mean_log_negativity => Some(a),
                _ => Some(p),
            })
            .expect("grid is non-empty");
        lambda = Some(best.lambda);
    } else if cfg.agent.learns() {
        return Err(Error::Config("baseline needs agent = \"bayesian\" or \"random\"".into()));
    }
    let mut log = RunLog::new("baseline", cfg)?;
    let gain = lambda.unwrap_or(cfg.bayesian.lambda);
    evaluate_controller(cfg, SeedStream::Eval, cfg.eval_episodes, || baseline_controller(cfg, gain), &mut log)?;
    if let Some(l) = lambda {
        log.meta.extra.insert("lambda".into(), l);
    }
    log.finalize()?;
    log.write(&cfg.output_dir)?;
    if !grid.is_empty() {
        write_csv(
            &cfg.output_dir.join(GRID_FILE),
            &log.meta.config_hash,
            &["lambda", "mean_log_negativity", "std_log_negativity", "percent"],
            &grid,
        )?;
    }
    Ok(BaselineOutcome { log, grid, lambda })
}

/// Parameter varied by a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Cavity decay rate, with the mechanical rate tied at 1 % of it.
    Kappa,
    /// Measurement rate.
    Eta,
    /// Episode horizon in control steps.
    #[serde(rename = "T")]
    Horizon,
    /// Mixing probability of the initial state.
    MixedP,
}

impl std::str::FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kappa" => Ok(SweepAxis::Kappa),
            "eta" => Ok(SweepAxis::Eta),
            "T" | "t" | "horizon" => Ok(SweepAxis::Horizon),
            "mixed_p" | "p" => Ok(SweepAxis::MixedP),
            other => Err(Error::Config(format!("unknown sweep axis `{other}`"))),
        }
    }
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Kappa => "kappa",
            SweepAxis::Eta => "eta",
            SweepAxis::Horizon => "T",
            SweepAxis::MixedP => "mixed_p",
        }
    }

    pub fn apply(self, cfg: &mut ExperimentConfig, value: f64) -> Result<()> {
        match self {
            SweepAxis::Kappa => {
                let p = cfg.env.physics_mut();
                *p = p.with_kappa(value);
            }
            SweepAxis::Eta => cfg.env.physics_mut().eta = value,
            SweepAxis::Horizon => {
                if !(value >= 1.0 && value.fract() == 0.0) {
                    return Err(Error::Config(format!("horizon {value} is not a positive integer")));
                }
                cfg.env.set_steps(value as usize);
            }
            SweepAxis::MixedP => match &mut cfg.env {
                EnvConfig::Linear(l) => l.initial_state = InitialState::Mixed { p: value },
                EnvConfig::Nonlinear(_) => return Err(Error::Config("mixed initial states exist only in the linear regime".into())),
            },
        }
        cfg.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis: String,
    pub value: f64,
    /// `ok` or `failed`.
    pub status: String,
    pub episodes: usize,
    pub mean_log_negativity: f64,
    pub std_log_negativity: f64,
    pub percent: f64,
    pub percent_std: f64,
    pub error: String,
}

pub const SWEEP_HEADER: &[&str] =
    &["axis", "value", "status", "episodes", "mean_log_negativity", "std_log_negativity", "percent", "percent_std", "error"];

/// One evaluation per value; learning agents are trained per value unless
/// a checkpoint is supplied. A failing point is recorded and skipped.
pub fn cmd_sweep(base: &ExperimentConfig, axis: SweepAxis, values: &[f64], checkpoint: Option<&Checkpoint>) -> Result<Vec<SweepRow>> {
    let rows: Vec<SweepRow> = values
        .iter()
        .map(|&value| {
            let result = sweep_point(base, axis, value, checkpoint);
            match result {
                Ok(log) => {
                    let en: Vec<f64> = log.episodes.iter().map(|e| e.mean_log_negativity).collect();
                    let (m, s) = mean_std(&en);
                    SweepRow {
                        axis: axis.name().into(),
                        value,
                        status: "ok".into(),
                        episodes: en.len(),
                        mean_log_negativity: m,
                        std_log_negativity: s,
                        percent: percent_of_ln2(m),
                        percent_std: percent_of_ln2(s),
                        error: String::new(),
                    }
                }
                Err(e) => {
                    log::warn!("sweep point {}={value} failed: {e}", axis.name());
                    SweepRow {
                        axis: axis.name().into(),
                        value,
                        status: "failed".into(),
                        episodes: 0,
                        mean_log_negativity: f64::NAN,
                        std_log_negativity: f64::NAN,
                        percent: f64::NAN,
                        percent_std: f64::NAN,
                        error: format!("{}: {e}", e.kind()),
                    }
                }
            }
        })
        .collect();
    fs::create_dir_all(&base.output_dir)?;
    write_csv(&base.output_dir.join(SWEEP_FILE), &base.hash()?, SWEEP_HEADER, &rows)?;
    Ok(rows)
}

fn sweep_point(base: &ExperimentConfig, axis: SweepAxis, value: f64, checkpoint: Option<&Checkpoint>) -> Result<RunLog> {
    let mut cfg = base.clone();
    axis.apply(&mut cfg, value)?;
    let dir = base.output_dir.join(format!("{}={value}", axis.name()));
    cfg.output_dir = dir.join("eval");
    if checkpoint.is_none() && cfg.agent.learns() {
        let mut train_cfg = cfg.clone();
        train_cfg.output_dir = dir.join("train");
        let trained = cmd_train(&train_cfg)?;
        let agent = trained.agent.expect("learning agent returns its learner");
        let ck = checkpoint_for(&train_cfg, &agent, trained.log.episodes.len())?;
        return cmd_eval(&cfg, Some(&ck));
    }
    cmd_eval(&cfg, checkpoint)
}

/// Mean of the reward moving average over the first and last tenth of
/// training; the pair `(first, last)`.
pub fn reward_trend(rewards: &[f64]) -> (f64, f64) {
    let ma = moving_average(rewards, CONVERGENCE_WINDOW);
    let decile = rewards.len().div_ceil(10).max(1);
    let first = mean_std(&ma[..decile.min(ma.len())]).0;
    let last = mean_std(&ma[ma.len().saturating_sub(decile)..]).0;
    (first, last)
}

/// Index (into `episodes`) of the highest-`E_N` episode among the final 10 %.
pub fn select_target_episode(mean_log_negativity: &[f64]) -> Option<usize> {
    let n = mean_log_negativity.len();
    let start = n - n.div_ceil(10);
    (start..n).fold(None, |best, i| match best {
        Some(b) if mean_log_negativity[b] >= mean_log_negativity[i] => Some(b),
        _ => Some(i),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct TargetRow {
    t: usize,
    time: f64,
    photon_number: f64,
}

#[derive(Clone, Debug)]
pub struct TwoPhaseOutcome {
    pub phase1: RunLog,
    pub target_episode: usize,
    pub target_series: Vec<f64>,
    pub phase2: Phase2Outcome,
}

#[derive(Clone, Debug)]
pub struct Phase2Outcome {
    pub train: RunLog,
    pub agent: PpoAgent,
    pub eval: RunLog,
    pub random_eval: RunLog,
}

/// Target generation on an entanglement reward, then target tracking with
/// a recurrent learner. Aborts when phase-1 rewards do not improve.
pub fn cmd_two_phase(cfg: &ExperimentConfig) -> Result<TwoPhaseOutcome> {
    cfg.validate()?;
    let EnvConfig::Nonlinear(base_env) = &cfg.env else {
        return Err(Error::Config("the two-phase protocol needs the nonlinear regime".into()));
    };
    let tp = &cfg.two_phase;
    let mut env1 = base_env.clone();
    env1.phase = Phase::TargetGenerating;
    env1.target_series = None;
    let env1 = EnvConfig::Nonlinear(env1);
    let dir1 = cfg.output_dir.join("phase1");
    let mut log1 = RunLog::new("two-phase/phase1", cfg)?;
    let keep_from = tp.phase1_episodes.div_ceil(cfg.n_envs) * cfg.n_envs;
    let keep_from = keep_from - keep_from.div_ceil(10);
    let mut photon_series: Vec<(usize, Vec<f64>)> = Vec::new();
    let agent1 = train_ppo(cfg, &env1, tp.phase1_agent, tp.phase1_episodes, tp.phase1_episodes_per_update, &dir1, &mut log1, &mut |ep, recs| {
        if ep >= keep_from {
            photon_series.push((ep, recs.iter().map(|r| r.photon_number).collect()));
        }
    })?;
    log1.finalize()?;
    log1.write(&dir1)?;
    checkpoint_for(cfg, &agent1, log1.episodes.len())?.save(&dir1.join(CHECKPOINT_FILE))?;

    let rewards: Vec<f64> = log1.episodes.iter().map(|e| e.mean_reward).collect();
    let (first, last) = reward_trend(&rewards);
    if last.partial_cmp(&first) != Some(std::cmp::Ordering::Greater) {
        return Err(Error::NotConverged(format!(
            "reward moving average went from {first:.4} (first decile) to {last:.4} (last decile) over {} episodes; logs in {}",
            rewards.len(),
            dir1.display()
        )));
    }
    let en: Vec<f64> = log1.episodes.iter().map(|e| e.mean_log_negativity).collect();
    let target_episode = select_target_episode(&en).ok_or_else(|| Error::NotConverged("phase 1 produced no episodes".into()))?;
    let target_series = photon_series
        .iter()
        .find(|(ep, _)| *ep == target_episode)
        .map(|(_, s)| s.clone())
        .expect("final-decile series are retained");
    let dt = cfg.env.physics().dt;
    let rows: Vec<TargetRow> =
        target_series.iter().enumerate().map(|(i, &n)| TargetRow { t: i + 1, time: (i + 1) as f64 * dt, photon_number: n }).collect();
    write_csv(&cfg.output_dir.join(TARGET_FILE), &log1.meta.config_hash, &["t", "time", "photon_number"], &rows)?;
    log::info!("phase 1 target: episode {target_episode}, E_N {:.1}% of ln2", percent_of_ln2(en[target_episode]));

    let phase2 = run_phase2(cfg, target_series.clone())?;
    Ok(TwoPhaseOutcome { phase1: log1, target_episode, target_series, phase2 })
}

/// Trains the tracking learner against `target`, then evaluates it and a
/// random controller on the same environment.
pub fn run_phase2(cfg: &ExperimentConfig, target: Vec<f64>) -> Result<Phase2Outcome> {
    let EnvConfig::Nonlinear(base_env) = &cfg.env else {
        return Err(Error::Config("the two-phase protocol needs the nonlinear regime".into()));
    };
    let mut env2 = base_env.clone();
    env2.phase = Phase::TargetUtilization;
    env2.target_series = Some(target);
    let mut cfg2 = cfg.clone();
    cfg2.env = EnvConfig::Nonlinear(env2);
    cfg2.agent = cfg.two_phase.phase2_agent;
    cfg2.validate()?;
    let tp = &cfg.two_phase;
    let dir2 = cfg.output_dir.join("phase2");
    let mut train = RunLog::new("two-phase/phase2", &cfg2)?;
    let agent = train_ppo(&cfg2, &cfg2.env, tp.phase2_agent, tp.phase2_episodes, tp.phase2_episodes_per_update, &dir2, &mut train, &mut |_, _| {})?;
    train.finalize()?;
    train.write(&dir2)?;
    let ck = checkpoint_for(&cfg2, &agent, train.episodes.len())?;
    ck.save(&dir2.join(CHECKPOINT_FILE))?;

    let mut eval_cfg = cfg2.clone();
    eval_cfg.output_dir = cfg.output_dir.join("phase2_eval");
    let eval = cmd_eval(&eval_cfg, Some(&ck))?;
    let mut random_cfg = cfg2.clone();
    random_cfg.agent = AgentKind::Random;
    random_cfg.output_dir = cfg.output_dir.join("random_eval");
    let random_eval = cmd_eval(&random_cfg, None)?;
    Ok(Phase2Outcome { train, agent, eval, random_eval })
}
