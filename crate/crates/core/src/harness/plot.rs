//! Comma-separated plot data.
//!
//! `convergence.csv` holds the evaluation-task series of every run,
//! sorted by baseline, seed and episode. `sweep.csv` holds one row per
//! axis value.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::metrics::{MetricsRecord, Phase};
use super::run::SweepTable;
use crate::error::{ensure, Result};

pub const CONVERGENCE_HEADER: &str = "episode,baseline,seed,mean_reward,avg_ee,avg_sum_rate";
pub const SWEEP_HEADER: &str = "axis,value,baseline,mean_ee,std_ee,seeds";

/// Writes the plot files and returns their paths.
pub fn emit_plot_data(records: &[MetricsRecord], sweep: Option<&SweepTable>, out_dir: &Path) -> Result<Vec<PathBuf>> {
    ensure!(!records.is_empty() || sweep.is_some(), InvalidArgument, "no metrics to plot");
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();

    let mut rows: Vec<&MetricsRecord> =
        records.iter().filter(|r| matches!(r.phase, Phase::Train | Phase::Adapt) && r.axis_value.is_none()).collect();
    if !rows.is_empty() {
        rows.sort_by_key(|r| (r.baseline, r.seed, r.episode));
        let mut s = String::from(CONVERGENCE_HEADER);
        s.push('\n');
        for r in rows {
            writeln!(s, "{},{},{},{},{},{}", r.episode, r.baseline, r.seed, r.mean_reward, r.avg_ee, r.avg_sum_rate)
                .expect("writing to a String");
        }
        let p = out_dir.join("convergence.csv");
        std::fs::write(&p, s)?;
        written.push(p);
    }

    if let Some(t) = sweep {
        let mut s = String::from(SWEEP_HEADER);
        s.push('\n');
        for r in &t.rows {
            writeln!(
                s,
                "{},{},{},{},{},{}",
                t.axis.as_str(),
                r.value,
                t.baseline,
                r.mean_ee,
                r.std_ee,
                r.per_seed.len()
            )
            .expect("writing to a String");
        }
        let p = out_dir.join("sweep.csv");
        std::fs::write(&p, s)?;
        written.push(p);
    }
    Ok(written)
}
