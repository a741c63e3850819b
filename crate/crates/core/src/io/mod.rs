//! Data ingestion, experiment configuration and report emission.

pub mod config;
pub mod data;
pub mod pipeline;
pub mod svg;

pub use config::{AnalysisToggles, ExperimentConfig, ResolvedRun};
pub use data::{load_flow_table, load_flows, load_prices, load_sector_flows};
pub use pipeline::{
    analyze, evaluate, run_experiment, write_synthetic_flows, Analysis, RunSummary,
};
