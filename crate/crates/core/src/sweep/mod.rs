//! Configuration-driven parameter sweeps and their CSV output.

mod config;
mod output;
mod runner;
mod search;

pub use config::{
    parse_config, Experiment, Metric, Spacing, SweepConfig, TGrid, DEFAULT_DISTILL_CUTOFF,
    DEFAULT_SUBTRACT_CUTOFF,
};
pub use output::{format_significant, to_csv_string, write_csv, HEADER};
pub use runner::{run_sweep, thread_limit, Evaluator, SweepRecord, THREADS_VAR};
pub use search::{find_t_for_probability, T_MAX};
