use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netsim::SimOutcome;
use crate::trace::{TraceEvent, TraceRecord};
use crate::Side;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("trace has no transfer_complete event")]
    Incomplete,
}

/// Per-run results.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub transfer_time_s: f64,
    /// Mean number of ranges over the client's ACK and ACK_MP frames.
    pub mean_ranges_per_ack_frame: f64,
    /// Share of client acknowledgment frames that used every allowed range.
    pub frac_ack_frames_at_limit: f64,
    /// Retransmitted stream bytes over the transfer size.
    pub rel_retransmitted: f64,
    /// Most times any single stream byte was retransmitted.
    pub max_per_byte_retrans: u32,
    /// Bytes of ACK and ACK_MP frames sent by the client.
    pub ack_bytes_total: u64,
    pub ack_frames: u64,
    pub spurious_losses: u64,
    pub buffer_drops: u64,
}

/// Computes the metrics of a complete trace.
pub fn extract_metrics(
    trace: &[TraceRecord],
    transfer_size: u64,
) -> Result<RunMetrics, MetricsError> {
    let mut m = RunMetrics::default();
    let mut complete = None;
    let (mut ranges, mut at_limit, mut retrans) = (0u64, 0u64, 0u64);
    for r in trace {
        match &r.event {
            TraceEvent::AckGenerated {
                n_ranges,
                at_limit: lim,
                bytes,
                ..
            } if r.side == Some(Side::Client) => {
                m.ack_frames += 1;
                ranges += n_ranges;
                at_limit += u64::from(*lim);
                m.ack_bytes_total += bytes;
            }
            TraceEvent::StreamRetransmit { len, nth_time, .. } => {
                retrans += len;
                m.max_per_byte_retrans = m.max_per_byte_retrans.max(*nth_time);
            }
            TraceEvent::SpuriousLoss { .. } => m.spurious_losses += 1,
            TraceEvent::BufferDrop { .. } => m.buffer_drops += 1,
            TraceEvent::TransferComplete { seconds } => complete = Some(*seconds),
            _ => {}
        }
    }
    m.transfer_time_s = complete.ok_or(MetricsError::Incomplete)?;
    finish(&mut m, ranges, at_limit, retrans, transfer_size);
    Ok(m)
}

fn finish(m: &mut RunMetrics, ranges: u64, at_limit: u64, retrans: u64, transfer_size: u64) {
    if m.ack_frames > 0 {
        m.mean_ranges_per_ack_frame = ranges as f64 / m.ack_frames as f64;
        m.frac_ack_frames_at_limit = at_limit as f64 / m.ack_frames as f64;
    }
    m.rel_retransmitted = retrans as f64 / transfer_size as f64;
}

/// The same metrics from the counters the endpoints keep while running.
pub fn metrics_from_outcome(
    out: &SimOutcome,
    transfer_size: u64,
) -> Result<RunMetrics, MetricsError> {
    let c = &out.client;
    let s = &out.server;
    let mut m = RunMetrics {
        transfer_time_s: out
            .transfer_time
            .ok_or(MetricsError::Incomplete)?
            .as_secs_f64(),
        max_per_byte_retrans: s.max_per_byte_retransmissions,
        ack_bytes_total: c.ack_bytes_sent,
        ack_frames: c.ack_frames_sent,
        spurious_losses: c.spurious_losses + s.spurious_losses,
        buffer_drops: out.links.iter().map(|(a, b)| a.dropped + b.dropped).sum(),
        ..RunMetrics::default()
    };
    finish(
        &mut m,
        c.ack_ranges_sent,
        c.ack_frames_at_limit,
        s.retransmitted_bytes,
        transfer_size,
    );
    Ok(m)
}
