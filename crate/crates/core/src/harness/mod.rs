//! Configured experiments: parsing, running, and writing results.

mod config;
mod render;
mod run;

pub use config::{parse_config, ConfigError, ExperimentConfig, OutputFormat, OutputSpec};
pub use render::{history_label, render_counterexample, render_enumeration, render_martingale, render_regret};
pub use run::{run_experiment, summarize, with_jobs, ExperimentOutcome, ReplicationRow, RunSummary};
