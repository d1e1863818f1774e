//! Running baselines, sweeps and evaluations.

use std::path::{Path, PathBuf};
use std::time::Instant;

use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Baseline, ExperimentConfig, SweepAxis};
use super::metrics::{final_window_mean, mean_std, MetricsRecord, MetricsWriter, Phase};
use crate::agents::{msat_train_episode, run_episode, EpisodeMetrics, EpisodeMode, MsatAgent, ReplayBuffer};
use crate::env::{mix_seed, Env, EnvConfig, TaskSpec};
use crate::error::{Error, Result};
use crate::meta::{meta_adapt, MetaLearner};
use crate::nn::checkpoint::Bundle;

/// Environment variable holding the worker-pool size.
pub const WORKERS_ENV: &str = "AARIS_WORKERS";

/// Worker count from [`WORKERS_ENV`], else the available parallelism.
pub fn worker_count() -> usize {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Independent random streams derived from one run seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSeeds {
    pub env: u64,
    pub init: u64,
    pub train: u64,
    pub tasks: u64,
}

impl RunSeeds {
    pub fn new(seed: u64) -> Self {
        Self {
            env: mix_seed(seed, 0x01),
            init: mix_seed(seed, 0x02),
            train: mix_seed(seed, 0x03),
            tasks: mix_seed(seed, 0x04),
        }
    }
}

/// `cfg.meta.tasks` training tasks and one held-out evaluation task
/// (id `T`), all drawn from the task seed.
pub fn make_tasks(cfg: &ExperimentConfig, seed: u64) -> (Vec<TaskSpec>, TaskSpec) {
    let mut rng = ChaCha8Rng::seed_from_u64(RunSeeds::new(seed).tasks);
    let train = (0..cfg.meta.tasks).map(|i| TaskSpec::random(i, &cfg.env, &mut rng)).collect();
    let held_out = TaskSpec::random(cfg.meta.tasks, &cfg.env, &mut rng);
    (train, held_out)
}

/// Fresh agent sized for `env`, initialised from the run's init stream.
pub fn init_agent(cfg: &ExperimentConfig, env: &EnvConfig, seed: u64) -> Result<MsatAgent> {
    let e = Env::new(env.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(RunSeeds::new(seed).init);
    MsatAgent::for_env(&e, cfg.agent.clone(), &mut rng)
}

fn env_with_seed(env: &EnvConfig, seed: u64) -> EnvConfig {
    let mut e = env.clone();
    e.seed = RunSeeds::new(seed).env;
    e
}

/// Builds records and forwards them to an optional sink.
struct Recorder<'a> {
    cfg: &'a ExperimentConfig,
    baseline: Baseline,
    seed: u64,
    sink: Option<&'a mut MetricsWriter>,
    records: Vec<MetricsRecord>,
}

impl Recorder<'_> {
    fn push(&mut self, m: &EpisodeMetrics, phase: Phase, task: Option<usize>, episode: usize, secs: f64) -> Result<()> {
        let mut r = MetricsRecord::from_episode(m, self.baseline, self.seed, phase, episode);
        r.task = task;
        if self.cfg.wall_clock {
            r.wall_clock_s = Some(secs);
        }
        if self.cfg.detail {
            r = r.with_detail(m);
        }
        if let Some(s) = self.sink.as_deref_mut() {
            s.write(&r)?;
        }
        self.records.push(r);
        Ok(())
    }
}

/// Trained agent and the records of one run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub baseline: Baseline,
    pub seed: u64,
    pub records: Vec<MetricsRecord>,
    pub agent: MsatAgent,
    /// Globals and task registry of the meta-training phase.
    pub meta: Option<Bundle>,
}

impl RunOutput {
    /// Records of the evaluation task: training for `msat`, adaptation
    /// for the meta-trained baselines.
    pub fn series(&self) -> Vec<&MetricsRecord> {
        let phase = if self.baseline.is_meta() { Phase::Adapt } else { Phase::Train };
        self.records.iter().filter(|r| r.phase == phase).collect()
    }

    pub fn final_ee(&self) -> Option<f64> {
        final_window_mean(&self.series().iter().map(|r| r.avg_ee).collect::<Vec<_>>())
    }

    pub fn final_reward(&self) -> Option<f64> {
        final_window_mean(&self.series().iter().map(|r| r.mean_reward).collect::<Vec<_>>())
    }
}

/// From-scratch training of the joint agent on `task` for `episodes`.
pub fn train_msat(
    cfg: &ExperimentConfig,
    env: &EnvConfig,
    task: &TaskSpec,
    agent: &mut MsatAgent,
    episodes: usize,
    seed: u64,
    mut on_record: impl FnMut(&EpisodeMetrics, usize, f64) -> Result<()>,
) -> Result<()> {
    let mut e = Env::new(env_with_seed(env, seed))?;
    let mut rng = ChaCha8Rng::seed_from_u64(RunSeeds::new(seed).train);
    let mut buffer = ReplayBuffer::new(cfg.agent.buffer_capacity);
    for ep in 0..episodes {
        let t0 = Instant::now();
        let m = msat_train_episode(&mut e, agent, &mut buffer, task, &mut rng)?;
        on_record(&m, ep, t0.elapsed().as_secs_f64())?;
    }
    Ok(())
}

/// Meta-trains from the run's initial agent on the training tasks.
pub fn meta_train(
    cfg: &ExperimentConfig,
    env: &EnvConfig,
    tasks: Vec<TaskSpec>,
    seed: u64,
    mut on_record: impl FnMut(&EpisodeMetrics, usize, usize, f64) -> Result<()>,
) -> Result<MetaLearner> {
    let globals = init_agent(cfg, env, seed)?;
    let mut learner = MetaLearner::new(globals, tasks, &env_with_seed(env, seed), cfg.meta.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(RunSeeds::new(seed).train, 0x4d));
    for ep in 0..cfg.meta.e_trn {
        let t0 = Instant::now();
        let ms = learner.train_episode(&mut rng)?;
        let secs = t0.elapsed().as_secs_f64();
        for (t, m) in ms.iter().enumerate() {
            on_record(m, t, ep, secs)?;
        }
    }
    learner.globals.sync_targets();
    Ok(learner)
}

/// Adapts meta-trained globals to `task` for `cfg.meta.e_adp` episodes.
pub fn adapt(
    cfg: &ExperimentConfig,
    env: &EnvConfig,
    globals: &MsatAgent,
    task: &TaskSpec,
    seed: u64,
    mut on_record: impl FnMut(&EpisodeMetrics, usize, f64) -> Result<()>,
) -> Result<MsatAgent> {
    let mut e = Env::new(env_with_seed(env, seed))?;
    let mut rng = ChaCha8Rng::seed_from_u64(RunSeeds::new(seed).train);
    let mut agent = meta_adapt(globals, &mut e, task, 0, &mut rng)?.agent;
    let mut buffer = ReplayBuffer::new(cfg.agent.buffer_capacity);
    for ep in 0..cfg.meta.e_adp {
        let t0 = Instant::now();
        let m = msat_train_episode(&mut e, &mut agent, &mut buffer, task, &mut rng)?;
        on_record(&m, ep, t0.elapsed().as_secs_f64())?;
    }
    Ok(agent)
}

/// Greedy episodes without learning.
pub fn evaluate(
    env: &EnvConfig,
    agent: &MsatAgent,
    task: &TaskSpec,
    episodes: usize,
    seed: u64,
) -> Result<Vec<EpisodeMetrics>> {
    let mut e = Env::new(env_with_seed(env, seed))?;
    let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, 0x45));
    let mut scratch_agent = agent.clone();
    let mut buffer = ReplayBuffer::new(1);
    (0..episodes)
        .map(|_| run_episode(&mut e, &mut scratch_agent, &mut buffer, task, EpisodeMode::EVAL, &mut rng))
        .collect()
}

/// One complete run of a baseline for one seed. The evaluation task is
/// the held-out task of [`make_tasks`], so different baselines with the
/// same seed face the same users and the same initial networks.
pub fn run_baseline(
    cfg: &ExperimentConfig,
    baseline: Baseline,
    seed: u64,
    sink: Option<&mut MetricsWriter>,
) -> Result<RunOutput> {
    let env = cfg.env_for(baseline);
    let (tasks, held_out) = make_tasks(cfg, seed);
    let mut rec = Recorder { cfg, baseline, seed, sink, records: Vec::new() };
    info!("{baseline} seed {seed}: start");
    let (agent, meta) = if baseline.is_meta() {
        let learner = meta_train(cfg, &env, tasks, seed, |m, t, ep, s| rec.push(m, Phase::MetaTrain, Some(t), ep, s))?;
        let bundle = learner.to_bundle()?;
        let agent =
            adapt(cfg, &env, &learner.globals, &held_out, seed, |m, ep, s| rec.push(m, Phase::Adapt, None, ep, s))?;
        (agent, Some(bundle))
    } else {
        let mut agent = init_agent(cfg, &env, seed)?;
        train_msat(cfg, &env, &held_out, &mut agent, cfg.episodes, seed, |m, ep, s| {
            rec.push(m, Phase::Train, None, ep, s)
        })?;
        (agent, None)
    };
    info!("{baseline} seed {seed}: done");
    Ok(RunOutput { baseline, seed, records: rec.records, agent, meta })
}

/// Runs `jobs` on a pool of [`worker_count`] threads, keeping input order.
pub fn par_map<T: Sync, U: Send>(jobs: &[T], f: impl Fn(&T) -> Result<U> + Sync + Send) -> Result<Vec<U>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count())
        .build()
        .map_err(|e| Error::InvalidState(format!("worker pool: {e}")))?;
    pool.install(|| jobs.par_iter().map(f).collect())
}

/// Runs `baseline` for every configured seed, in parallel. Metrics of
/// each run go to `<out>/<baseline>_seed<s>.jsonl` when `out` is given.
pub fn run_seeds(cfg: &ExperimentConfig, baseline: Baseline, out: Option<&Path>) -> Result<Vec<RunOutput>> {
    par_map(&cfg.seeds, |&seed| {
        let mut sink = match out {
            Some(dir) => Some(MetricsWriter::create(metrics_path(dir, baseline, seed))?),
            None => None,
        };
        run_baseline(cfg, baseline, seed, sink.as_mut())
    })
}

pub fn metrics_path(dir: &Path, baseline: Baseline, seed: u64) -> PathBuf {
    dir.join(format!("{baseline}_seed{seed}.jsonl"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    /// Mean over seeds of the final-window average EE.
    pub mean_ee: f64,
    pub std_ee: f64,
    pub per_seed: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub axis: SweepAxis,
    pub baseline: Baseline,
    pub rows: Vec<SweepRow>,
}

/// Trains the configured baseline at every axis value and seed. Returns
/// the table and all records, tagged with their axis value, in (value,
/// seed) order.
pub fn sweep(cfg: &ExperimentConfig) -> Result<(SweepTable, Vec<MetricsRecord>)> {
    let spec = cfg.sweep.as_ref().ok_or_else(|| Error::config("sweep.axis", "no sweep configured"))?;
    let jobs: Vec<(usize, f64, u64)> =
        spec.values.iter().enumerate().flat_map(|(i, &v)| cfg.seeds.iter().map(move |&s| (i, v, s))).collect();
    let outs = par_map(&jobs, |&(_, v, seed)| {
        let mut c = cfg.clone();
        spec.axis.apply(&mut c.env, v)?;
        c.validate()?;
        run_baseline(&c, cfg.baseline, seed, None)
    })?;
    let mut rows: Vec<SweepRow> =
        spec.values.iter().map(|&value| SweepRow { value, mean_ee: 0.0, std_ee: 0.0, per_seed: Vec::new() }).collect();
    let mut records = Vec::new();
    for (&(i, v, _), out) in jobs.iter().zip(&outs) {
        rows[i].per_seed.push(out.final_ee().unwrap_or(f64::NAN));
        records.extend(out.records.iter().cloned().map(|mut r| {
            r.axis_value = Some(v);
            r
        }));
    }
    for r in &mut rows {
        (r.mean_ee, r.std_ee) = mean_std(&r.per_seed);
    }
    Ok((SweepTable { axis: spec.axis, baseline: cfg.baseline, rows }, records))
}

/// First episode index at which `series` reaches `threshold`.
pub fn episodes_to_reach(series: &[f64], threshold: f64) -> Option<usize> {
    series.iter().position(|&v| v >= threshold)
}
