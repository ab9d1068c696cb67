//! Experiment driver library behind the `cdro` binary: config ingestion,
//! sweep execution, result persistence and plot-ready CSV emission.

pub mod config;
pub mod plot;
pub mod run;

pub use config::{AmbiguityKind, ConfigError, ExperimentConfig, ModelKind};
pub use plot::emit_plot_data;
pub use run::{run_experiment, ResultRow, RunError, RunOutcome};
