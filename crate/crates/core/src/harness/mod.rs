//! Experiment families, space-filling designs, batch runs and reports.

mod config;
mod metrics;
pub mod replay;
pub mod report;
mod runner;
mod scenario;
mod svg;
pub mod wsp;

pub use config::{
    ConfigError, Experiment, RunConfig, DEFAULT_SEED, DESK_POINTS, DESK_TRANSFER_SIZE, FULL_POINTS,
    FULL_TRANSFER_SIZE,
};
pub use metrics::{extract_metrics, metrics_from_outcome, MetricsError, RunMetrics};
pub use runner::{run_all, run_one, RunError, RunOptions, RunResult};
pub use scenario::{
    hetero2_paths, hetero3_paths, Family, PathSpec, ScenarioError, HETERO2_TOTAL_BANDWIDTH_MBPS,
    HETERO2_TOTAL_RTT_MS, HETERO3_TOTAL_BANDWIDTH_MBPS, HETERO3_TOTAL_RTT_MS, WEIGHT_RANGE,
};
pub use svg::{cdf, scatter, Axes, Scale};
pub use wsp::{wsp_design, DesignError};
