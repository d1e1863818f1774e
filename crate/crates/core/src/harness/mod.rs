//! Configuration, experiment orchestration, metric logging, complexity
//! estimates and plot data.

mod complexity;
mod config;
mod metrics;
mod plot;
mod run;

pub use complexity::{complexity_estimate, ComplexityEstimate, ComplexityInputs};
pub use config::{
    known_keys, Baseline, ExperimentConfig, SweepAxis, SweepSpec, FIXED_RIS_POSITION, PAPER_M_VALUES, PAPER_NBS_VALUES,
};
pub use metrics::{final_window_mean, mean_std, read_metrics, MetricsRecord, MetricsWriter, Phase, SlotDetail};
pub use plot::{emit_plot_data, CONVERGENCE_HEADER, SWEEP_HEADER};
pub use run::{
    adapt, episodes_to_reach, evaluate, init_agent, make_tasks, meta_train, metrics_path, par_map, run_baseline,
    run_seeds, sweep, train_msat, worker_count, RunOutput, RunSeeds, SweepRow, SweepTable, WORKERS_ENV,
};
