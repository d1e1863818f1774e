//! Per-episode records and their line-delimited JSON sink.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::Baseline;
use crate::agents::EpisodeMetrics;
use crate::env::NUM_CONSTRAINTS;
use crate::error::{Error, Result};

/// Stage of a run an episode belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// From-scratch training.
    Train,
    MetaTrain,
    /// Adaptation of meta-trained networks to the evaluation task.
    Adapt,
    Eval,
}

/// Per-slot detail, logged on request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlotDetail {
    pub rates: Vec<f64>,
    pub powers: Vec<f64>,
}

impl SlotDetail {
    /// Mean of the per-slot `rate / power` ratios.
    pub fn recomputed_ee(&self) -> f64 {
        let n = self.rates.len() as f64;
        self.rates.iter().zip(&self.powers).map(|(r, p)| r / p).sum::<f64>() / n
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub baseline: Baseline,
    pub seed: u64,
    pub phase: Phase,
    /// Training task for meta-training records.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<usize>,
    /// Sweep coordinate, when the run is part of a sweep.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub axis_value: Option<f64>,
    pub episode: usize,
    pub mean_reward: f64,
    /// bits/Hz/J.
    pub avg_ee: f64,
    /// bps/Hz.
    pub avg_sum_rate: f64,
    /// W.
    pub avg_power: f64,
    /// Slots in which each constraint was violated, `C1` first.
    pub violations: [u32; NUM_CONSTRAINTS],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock_s: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slots: Option<SlotDetail>,
}

impl MetricsRecord {
    pub fn from_episode(m: &EpisodeMetrics, baseline: Baseline, seed: u64, phase: Phase, episode: usize) -> Self {
        Self {
            baseline,
            seed,
            phase,
            task: None,
            axis_value: None,
            episode,
            mean_reward: m.mean_reward,
            avg_ee: m.avg_ee,
            avg_sum_rate: m.avg_sum_rate,
            avg_power: m.avg_power,
            violations: m.violations,
            wall_clock_s: None,
            slots: None,
        }
    }

    pub fn with_detail(mut self, m: &EpisodeMetrics) -> Self {
        self.slots = Some(SlotDetail { rates: m.slot_rates.clone(), powers: m.slot_powers.clone() });
        self
    }
}

/// Append-only JSON-lines writer. Every record is flushed as written so
/// a crash loses at most the line in progress.
#[derive(Debug)]
pub struct MetricsWriter {
    out: BufWriter<File>,
}

impl MetricsWriter {
    /// Creates (truncating) `path` and any missing parent directories.
    pub fn create(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)?;
        }
        Ok(Self { out: BufWriter::new(File::create(path)?) })
    }

    pub fn write(&mut self, r: &MetricsRecord) -> Result<()> {
        serde_json::to_writer(&mut self.out, r)?;
        self.out.write_all(b"\n")?;
        self.out.flush()?;
        Ok(())
    }

    pub fn write_all<'a>(&mut self, rs: impl IntoIterator<Item = &'a MetricsRecord>) -> Result<()> {
        for r in rs {
            self.write(r)?;
        }
        Ok(())
    }
}

/// Reads every record of a JSON-lines file. Blank lines are skipped.
pub fn read_metrics(path: impl AsRef<Path>) -> Result<Vec<MetricsRecord>> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for (i, line) in BufReader::new(File::open(path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let r = serde_json::from_str(&line)
            .map_err(|e| Error::Parse { origin: format!("{}:{}", path.display(), i + 1), message: e.to_string() })?;
        out.push(r);
    }
    Ok(out)
}

/// Mean over the last 10% of `values` (at least one).
pub fn final_window_mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let w = values.len().div_ceil(10);
    let tail = &values[values.len() - w..];
    Some(tail.iter().sum::<f64>() / w as f64)
}

/// Sample mean and standard deviation (`n − 1` denominator; zero for a
/// single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
