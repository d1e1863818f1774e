//! Command-line front end of the experiment harness.
//!
//! The worker pool used by `train` and `sweep` is sized by the
//! `AARIS_WORKERS` environment variable.

use std::path::{Path, PathBuf};

use aaris::agents::{MsatAgent, MsatConfig};
use aaris::harness::{
    self, complexity_estimate, emit_plot_data, make_tasks, read_metrics, Baseline, ComplexityInputs, ExperimentConfig,
    MetricsRecord, MetricsWriter, Phase, WORKERS_ENV,
};
use aaris::meta::MetaCheckpointInfo;
use aaris::nn::checkpoint::Bundle;
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;
use serde::{Deserialize, Serialize};

#[derive(Parser, Debug)]
#[command(name = "aaris", version, about = "RSMA aerial active-RIS simulator and meta-RL experiments")]
#[command(after_help = "Environment:\n  AARIS_WORKERS  size of the worker pool (default: all cores)")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Experiment config file (TOML, dotted keys).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Run a single seed instead of the configured list.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Baseline: mmsat, msat, passive_ris or fixed_ris.
    #[arg(long, global = true)]
    baseline: Option<String>,
    /// Output directory (overrides run.out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Start from the small desk-scale preset.
    #[arg(long, global = true)]
    desk_scale: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a baseline end to end and save metrics and checkpoints.
    Train,
    /// Meta-train the global networks and save a meta-checkpoint.
    MetaTrain,
    /// Adapt a meta-checkpoint to the held-out task.
    Adapt {
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Run greedy episodes with a saved agent.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 10)]
        episodes: usize,
    },
    /// Train at every value of the configured sweep axis.
    Sweep,
    /// Turn metrics files into CSV plot data.
    PlotData {
        /// JSON-lines metrics files.
        #[arg(required = true)]
        metrics: Vec<PathBuf>,
    },
    /// Print the operation-count estimates for the config.
    Complexity,
}

/// Metadata stored with a single-agent checkpoint.
#[derive(Debug, Serialize, Deserialize)]
struct AgentInfo {
    kind: String,
    baseline: Baseline,
    seed: u64,
    agent: MsatConfig,
}

const AGENT_KIND: &str = "agent";

fn load_config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(p) => ExperimentConfig::load(p, c.desk_scale).with_context(|| format!("loading {}", p.display()))?,
        None if c.desk_scale => ExperimentConfig::desk_scale(),
        None => ExperimentConfig::reference(),
    };
    if let Some(s) = c.seed {
        cfg.seeds = vec![s];
    }
    if let Some(b) = &c.baseline {
        cfg.baseline = b.parse()?;
    }
    if let Some(o) = &c.out {
        cfg.out_dir = o.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn save_agent(agent: &MsatAgent, baseline: Baseline, seed: u64, path: &Path) -> Result<()> {
    let info = AgentInfo { kind: AGENT_KIND.into(), baseline, seed, agent: agent.cfg.clone() };
    agent.to_bundle(serde_json::to_string(&info)?).save(path)?;
    Ok(())
}

fn load_agent(path: &Path) -> Result<(MsatAgent, AgentInfo)> {
    let b = Bundle::load(path).with_context(|| format!("reading {}", path.display()))?;
    let info: AgentInfo = serde_json::from_str(&b.metadata).context("agent checkpoint metadata")?;
    if info.kind != AGENT_KIND {
        bail!("{} is a `{}` checkpoint, not an agent", path.display(), info.kind);
    }
    Ok((MsatAgent::from_bundle(&b, info.agent.clone())?, info))
}

fn train(cfg: &ExperimentConfig) -> Result<()> {
    let out = &cfg.out_dir;
    std::fs::create_dir_all(out)?;
    let runs = harness::run_seeds(cfg, cfg.baseline, Some(out))?;
    for r in &runs {
        let stem = format!("{}_seed{}", r.baseline, r.seed);
        save_agent(&r.agent, r.baseline, r.seed, &out.join(format!("{stem}.agent")))?;
        if let Some(m) = &r.meta {
            m.save(out.join(format!("{stem}.meta")))?;
        }
        println!(
            "{} seed {}: final mean reward {:.6e}, final avg EE {:.6e} bits/Hz/J",
            r.baseline,
            r.seed,
            r.final_reward().unwrap_or(f64::NAN),
            r.final_ee().unwrap_or(f64::NAN)
        );
    }
    Ok(())
}

fn meta_train(cfg: &ExperimentConfig) -> Result<()> {
    let out = &cfg.out_dir;
    for &seed in &cfg.seeds {
        let env = cfg.env_for(cfg.baseline);
        let (tasks, _) = make_tasks(cfg, seed);
        let mut sink = MetricsWriter::create(out.join(format!("meta_train_seed{seed}.jsonl")))?;
        let learner = harness::meta_train(cfg, &env, tasks, seed, |m, t, ep, secs| {
            let mut r = MetricsRecord::from_episode(m, cfg.baseline, seed, Phase::MetaTrain, ep);
            r.task = Some(t);
            if cfg.wall_clock {
                r.wall_clock_s = Some(secs);
            }
            sink.write(&r)?;
            Ok(())
        })?;
        let path = out.join(format!("meta_seed{seed}.meta"));
        learner.to_bundle()?.save(&path)?;
        println!("seed {seed}: meta-checkpoint written to {}", path.display());
    }
    Ok(())
}

fn adapt(cfg: &ExperimentConfig, checkpoint: &Path) -> Result<()> {
    let b = Bundle::load(checkpoint).with_context(|| format!("reading {}", checkpoint.display()))?;
    let info = MetaCheckpointInfo::from_bundle(&b)?;
    let globals = MsatAgent::from_bundle(&b, cfg.agent.clone())?;
    let env = cfg.env_for(cfg.baseline);
    for &seed in &cfg.seeds {
        let (_, held_out) = make_tasks(cfg, seed);
        if info.tasks.iter().any(|t| t.user_xy == held_out.user_xy) {
            log::warn!("held-out task of seed {seed} coincides with a training task");
        }
        let mut sink = MetricsWriter::create(cfg.out_dir.join(format!("adapt_seed{seed}.jsonl")))?;
        let agent = harness::adapt(cfg, &env, &globals, &held_out, seed, |m, ep, _| {
            sink.write(&MetricsRecord::from_episode(m, cfg.baseline, seed, Phase::Adapt, ep))?;
            Ok(())
        })?;
        let path = cfg.out_dir.join(format!("adapted_seed{seed}.agent"));
        save_agent(&agent, cfg.baseline, seed, &path)?;
        println!("seed {seed}: adapted agent written to {}", path.display());
    }
    Ok(())
}

fn eval(cfg: &ExperimentConfig, checkpoint: &Path, episodes: usize) -> Result<()> {
    let (agent, info) = load_agent(checkpoint)?;
    let env = cfg.env_for(info.baseline);
    for &seed in &cfg.seeds {
        let (_, held_out) = make_tasks(cfg, seed);
        let ms = harness::evaluate(&env, &agent, &held_out, episodes, seed)?;
        let records: Vec<_> = ms
            .iter()
            .enumerate()
            .map(|(i, m)| MetricsRecord::from_episode(m, info.baseline, seed, Phase::Eval, i))
            .collect();
        MetricsWriter::create(cfg.out_dir.join(format!("eval_seed{seed}.jsonl")))?.write_all(&records)?;
        let n = ms.len().max(1) as f64;
        println!(
            "seed {seed}: {episodes} episodes, mean reward {:.6e}, avg EE {:.6e} bits/Hz/J, avg sum rate {:.6e} bps/Hz",
            ms.iter().map(|m| m.mean_reward).sum::<f64>() / n,
            ms.iter().map(|m| m.avg_ee).sum::<f64>() / n,
            ms.iter().map(|m| m.avg_sum_rate).sum::<f64>() / n,
        );
    }
    Ok(())
}

fn sweep(cfg: &ExperimentConfig) -> Result<()> {
    let (table, records) = harness::sweep(cfg)?;
    MetricsWriter::create(cfg.out_dir.join("sweep_metrics.jsonl"))?.write_all(&records)?;
    emit_plot_data(&[], Some(&table), &cfg.out_dir)?;
    println!("{:>10}  {:>14}  {:>14}", table.axis.as_str(), "mean EE", "std EE");
    for r in &table.rows {
        println!("{:>10}  {:>14.6e}  {:>14.6e}", r.value, r.mean_ee, r.std_ee);
    }
    Ok(())
}

fn plot_data(cfg: &ExperimentConfig, files: &[PathBuf]) -> Result<()> {
    let mut records = Vec::new();
    for f in files {
        records.extend(read_metrics(f).with_context(|| format!("reading {}", f.display()))?);
    }
    for p in emit_plot_data(&records, None, &cfg.out_dir)? {
        println!("{}", p.display());
    }
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let cfg = load_config(&cli.common)?;
    info!("scenario `{}`, {} seeds, {WORKERS_ENV}={}", cfg.scenario, cfg.seeds.len(), harness::worker_count());
    match &cli.cmd {
        Command::Train => train(&cfg),
        Command::MetaTrain => meta_train(&cfg),
        Command::Adapt { checkpoint } => adapt(&cfg, checkpoint),
        Command::Eval { checkpoint, episodes } => eval(&cfg, checkpoint, *episodes),
        Command::Sweep => sweep(&cfg),
        Command::PlotData { metrics } => plot_data(&cfg, metrics),
        Command::Complexity => {
            let est = complexity_estimate(&ComplexityInputs::from_config(&cfg));
            println!("{}", serde_json::to_string_pretty(&est)?);
            Ok(())
        }
    }
}
