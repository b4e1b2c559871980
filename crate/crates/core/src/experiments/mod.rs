//! Scheme grids, scenario files, replication orchestration and output.

mod config_file;
mod emit;
mod runner;
mod scheme;

pub use config_file::{load_config, parse_config};
pub use emit::{csv_string, emit, fmt_g, plot_files, rows, write_csv, OutputFormat, OutputRow, CSV_HEADER};
pub use runner::{run_scheme, trace_path, PointResult, RunnerOptions, SchemeResult};
pub use scheme::{
    GridPoint, SchemeConfig, SchemeId, DEFAULT_HORIZON, DEFAULT_REPS, DEFAULT_SEED, DEFAULT_WARMUP_FRACTION,
};
