//! Experiment harness for the `clm-core` solvers: configuration, initial
//! data, the experiment suite and CSV/JSON output.

pub mod config;
pub mod experiments;
pub mod initial;
pub mod report;

pub use config::{ConfigError, Experiment, ExperimentConfig, InitDescriptor};
pub use experiments::run;
pub use initial::make_initial;
pub use report::{write_csv, write_csv_to, write_json, Check, RunReport, CSV_COLUMNS};
