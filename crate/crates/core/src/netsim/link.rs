use std::collections::VecDeque;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::SimTime;

/// Buffer size as a multiple of the bandwidth-delay product.
pub const BUFFER_BDP_FACTOR: f64 = 1.5;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinkConfig {
    pub bandwidth_bps: f64,
    pub delay: Duration,
    pub buffer_bytes: u64,
}

impl LinkConfig {
    /// One direction of a path with the given bandwidth (Mbit/s) and round
    /// trip time; the buffer holds 1.5 bandwidth-delay products.
    pub fn for_path(bandwidth_mbps: f64, rtt: Duration) -> Self {
        let bandwidth_bps = bandwidth_mbps * 1e6;
        LinkConfig {
            bandwidth_bps,
            delay: rtt / 2,
            buffer_bytes: (BUFFER_BDP_FACTOR * bandwidth_bps * rtt.as_secs_f64() / 8.0).round()
                as u64,
        }
    }

    pub fn serialization_time(&self, bytes: u64) -> Duration {
        Duration::from_nanos((bytes as f64 * 8.0 * 1e9 / self.bandwidth_bps).round() as u64)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkStats {
    pub enqueued: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub bytes_enqueued: u64,
    pub bytes_dropped: u64,
    pub max_backlog_bytes: u64,
}

/// A FIFO bottleneck with byte-counted drop-tail buffer. The packet being
/// serialized does not occupy buffer space.
#[derive(Clone, Debug)]
pub struct Link {
    cfg: LinkConfig,
    /// Accepted packets not yet fully serialized: (start, end, bytes).
    pending: VecDeque<(SimTime, SimTime, u64)>,
    busy_until: SimTime,
    stats: LinkStats,
}

impl Link {
    pub fn new(cfg: LinkConfig) -> Self {
        Link {
            cfg,
            pending: VecDeque::new(),
            busy_until: SimTime::ZERO,
            stats: LinkStats::default(),
        }
    }

    pub fn config(&self) -> &LinkConfig {
        &self.cfg
    }

    pub fn stats(&self) -> LinkStats {
        self.stats
    }

    /// Bytes waiting behind the packet in service.
    pub fn backlog(&mut self, now: SimTime) -> u64 {
        while self.pending.front().is_some_and(|&(_, end, _)| end <= now) {
            self.pending.pop_front();
        }
        self.pending
            .iter()
            .filter(|&&(start, _, _)| start > now)
            .map(|&(_, _, b)| b)
            .sum()
    }

    /// Offers a packet at `now`. Returns its arrival time at the far end,
    /// or `None` if the buffer is full.
    pub fn enqueue(&mut self, now: SimTime, bytes: u64) -> Option<SimTime> {
        let backlog = self.backlog(now);
        let idle = self.busy_until <= now;
        if !idle && backlog + bytes > self.cfg.buffer_bytes {
            self.stats.dropped += 1;
            self.stats.bytes_dropped += bytes;
            return None;
        }
        let start = self.busy_until.max(now);
        let end = start + self.cfg.serialization_time(bytes);
        self.busy_until = end;
        self.pending.push_back((start, end, bytes));
        self.stats.enqueued += 1;
        self.stats.bytes_enqueued += bytes;
        if !idle {
            self.stats.max_backlog_bytes = self.stats.max_backlog_bytes.max(backlog + bytes);
        }
        Some(end + self.cfg.delay)
    }

    pub fn on_delivered(&mut self) {
        self.stats.delivered += 1;
    }
}
