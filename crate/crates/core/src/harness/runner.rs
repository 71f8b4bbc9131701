use rayon::prelude::*;
use thiserror::Error;

use super::config::{ConfigError, RunConfig};
use super::metrics::{extract_metrics, MetricsError, RunMetrics};
use crate::endpoint::Connection;
use crate::netsim::{SimError, Simulation};
use crate::trace::TraceRecord;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("run {run_id}: {source}")]
    Sim { run_id: u64, source: SimError },
    #[error("run {run_id}: {source}")]
    Metrics { run_id: u64, source: MetricsError },
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub config: RunConfig,
    pub metrics: RunMetrics,
    pub trace: Vec<TraceRecord>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Trace every link enqueue and delivery.
    pub link_events: bool,
    /// Drop the trace after computing metrics.
    pub discard_trace: bool,
}

pub fn run_one(cfg: &RunConfig, opts: RunOptions) -> Result<RunResult, RunError> {
    cfg.validate()?;
    let conn = cfg.connection_config();
    let out = Simulation::new(
        Connection::client(conn),
        Connection::server(conn),
        &cfg.links(),
    )
    .with_link_events(opts.link_events)
    .run()
    .map_err(|source| RunError::Sim {
        run_id: cfg.run_id,
        source,
    })?;
    let metrics =
        extract_metrics(&out.trace, cfg.transfer_size).map_err(|source| RunError::Metrics {
            run_id: cfg.run_id,
            source,
        })?;
    Ok(RunResult {
        config: cfg.clone(),
        metrics,
        trace: if opts.discard_trace {
            Vec::new()
        } else {
            out.trace
        },
    })
}

/// Runs every configuration in parallel; results keep the input order.
pub fn run_all(cfgs: &[RunConfig], opts: RunOptions) -> Result<Vec<RunResult>, RunError> {
    cfgs.par_iter().map(|c| run_one(c, opts)).collect()
}
