//! Monte-Carlo simulation harness: configuration, association schemes,
//! slot and trial execution, metrics and the command-line front end.

mod cli;
mod config;
mod metrics;
mod scheme;
mod trial;

pub use cli::{cli_main, compare, sweep, SweepPoint, SWEEP_K, SWEEP_SCHEMES, SWEEP_V_MAX};
pub use config::{ArrayConfig, RunConfig, SimConfig};
pub use metrics::{
    read_rows, report, rows_of, run_monte_carlo, run_trials, summarize, summarize_results, summary_path,
    trial_seed, trials_path, write_rows, write_summary, CsvRow, MetricsSummary,
};
pub use scheme::{
    composed_velocity, predicted_features, AssociationInput, AssociationScheme, BeamSource, FeatureMode,
    FeedbackScheme, IdentityScheme, NearestNeighborScheme, SchemeRegistry,
};
pub use trial::{run_trial, LinkRecord, Simulation, SlotRecord, TrialResult, TrialState, MIN_SENSING_GAIN};
