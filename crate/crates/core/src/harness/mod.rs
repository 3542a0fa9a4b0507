//! Experiment configuration, the closed-loop run driver and its outputs.

mod config;
mod output;
mod run;

pub use config::{AdversaryConfig, ExperimentConfig, ADVERSARY_DIVERGENCE_CAP};
pub use output::{parse_range, write_csv, write_run, CSV_HEADER};
pub use run::{run_experiment, RunOutput, RunSummary, Verdict, CERTIFICATE_FILE};
