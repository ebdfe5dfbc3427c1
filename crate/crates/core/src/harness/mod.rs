//! Experiment driver: method comparisons, the rewiring sweep and the
//! clustering scatter, each reproducible from a base seed.

mod config;
mod report;
mod run;
mod sweep;

pub use config::{
    ExperimentConfig, Method, NamedSource, RunSettings, ScatterConfig, Source, SweepConfig,
};
pub use report::{
    mean, paper_reference_rows, sample_std, simple_csv, to_csv, Cell, ResultRow, CSV_HEADER,
};
pub use run::{
    align_scores, method_scores, run_experiment, run_experiment_detailed, run_repeat,
    ExperimentOutcome, MethodOutcome, RepeatOutcome,
};
pub use sweep::{cc_scatter, scatter_csv, spearman, sweep_csv, ws_sweep, DiffRow, SweepRow};
