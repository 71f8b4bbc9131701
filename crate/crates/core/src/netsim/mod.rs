//! Discrete-event network between one client and one server connected by
//! several independent paths, each a pair of one-way bottleneck links.

mod link;
mod queue;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::endpoint::{Connection, ConnectionError, ConnectionStats};
use crate::trace::{TraceEvent, TraceRecord};
use crate::wire::{Packet, IP_UDP_OVERHEAD};
use crate::{Side, SimTime};

pub use link::{Link, LinkConfig, LinkStats, BUFFER_BDP_FACTOR};
pub use queue::EventQueue;

/// Simulated time after which a run is abandoned.
pub const DEFAULT_TIME_LIMIT: Duration = Duration::from_secs(1800);

#[derive(Debug, Error)]
pub enum SimError {
    #[error("{side} connection failed at {at:?}: {source}")]
    Connection {
        side: Side,
        at: SimTime,
        source: ConnectionError,
    },
    #[error("transfer not complete after {0:?} of simulated time")]
    TimeLimit(Duration),
    #[error("packet sent on path {0}, which has no link")]
    NoSuchPath(u64),
}

/// Both directions of one path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathLinks {
    pub to_client: LinkConfig,
    pub to_server: LinkConfig,
}

impl PathLinks {
    pub fn symmetric(bandwidth_mbps: f64, rtt: Duration) -> Self {
        let l = LinkConfig::for_path(bandwidth_mbps, rtt);
        PathLinks {
            to_client: l,
            to_server: l,
        }
    }
}

#[derive(Debug)]
enum Event {
    Deliver { to: Side, path: u64, packet: Packet },
    Timer { side: Side, generation: u64 },
}

#[derive(Clone, Debug)]
pub struct SimOutcome {
    /// Completion time as seen by the client, if the transfer finished.
    pub transfer_time: Option<Duration>,
    pub end_time: SimTime,
    pub client: ConnectionStats,
    pub server: ConnectionStats,
    /// Per path: (towards client, towards server).
    pub links: Vec<(LinkStats, LinkStats)>,
    pub trace: Vec<TraceRecord>,
}

pub struct Simulation {
    now: SimTime,
    queue: EventQueue<Event>,
    client: Connection,
    server: Connection,
    /// Per path: (towards client, towards server).
    links: Vec<(Link, Link)>,
    timer_generation: [u64; 2],
    timer_at: [Option<SimTime>; 2],
    link_events: bool,
    time_limit: Duration,
    trace: Vec<TraceRecord>,
}

fn idx(side: Side) -> usize {
    match side {
        Side::Client => 0,
        Side::Server => 1,
    }
}

impl Simulation {
    pub fn new(client: Connection, server: Connection, paths: &[PathLinks]) -> Self {
        Simulation {
            now: SimTime::ZERO,
            queue: EventQueue::new(),
            client,
            server,
            links: paths
                .iter()
                .map(|p| (Link::new(p.to_client), Link::new(p.to_server)))
                .collect(),
            timer_generation: [0; 2],
            timer_at: [None; 2],
            link_events: false,
            time_limit: DEFAULT_TIME_LIMIT,
            trace: Vec::new(),
        }
    }

    /// Also trace every link enqueue and delivery, not just drops.
    pub fn with_link_events(mut self, on: bool) -> Self {
        self.link_events = on;
        self
    }

    pub fn with_time_limit(mut self, limit: Duration) -> Self {
        self.time_limit = limit;
        self
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn client(&self) -> &Connection {
        &self.client
    }

    pub fn server(&self) -> &Connection {
        &self.server
    }

    fn conn(&mut self, side: Side) -> &mut Connection {
        match side {
            Side::Client => &mut self.client,
            Side::Server => &mut self.server,
        }
    }

    /// Runs until the client has received the whole object and the close,
    /// or nothing is left to happen.
    pub fn run(mut self) -> Result<SimOutcome, SimError> {
        self.pump(Side::Client)?;
        self.pump(Side::Server)?;
        while let Some((t, ev)) = self.queue.pop() {
            if t.saturating_duration_since(SimTime::ZERO) > self.time_limit {
                return Err(SimError::TimeLimit(self.time_limit));
            }
            self.now = t;
            match ev {
                Event::Deliver { to, path, packet } => {
                    let (l, dir) = match to {
                        Side::Client => (&mut self.links[path as usize].0, Side::Client),
                        Side::Server => (&mut self.links[path as usize].1, Side::Server),
                    };
                    l.on_delivered();
                    if self.link_events {
                        let bytes = (packet.udp_len() + IP_UDP_OVERHEAD) as u64;
                        self.log(
                            None,
                            TraceEvent::LinkDeliver {
                                path,
                                to: dir,
                                bytes,
                            },
                        );
                    }
                    let now = self.now;
                    self.conn(to)
                        .handle_datagram(now, packet)
                        .map_err(|source| SimError::Connection {
                            side: to,
                            at: now,
                            source,
                        })?;
                    self.pump(to)?;
                }
                Event::Timer { side, generation } => {
                    if generation != self.timer_generation[idx(side)] {
                        continue;
                    }
                    self.timer_at[idx(side)] = None;
                    let now = self.now;
                    self.conn(side).handle_timeout(now);
                    self.pump(side)?;
                }
            }
            if self.client.is_closed() {
                break;
            }
        }
        let stats = self.client.stats();
        self.collect_trace(Side::Client);
        self.collect_trace(Side::Server);
        Ok(SimOutcome {
            transfer_time: stats.transfer_time(),
            end_time: self.now,
            server: self.server.stats(),
            client: stats,
            links: self
                .links
                .iter()
                .map(|(a, b)| (a.stats(), b.stats()))
                .collect(),
            trace: self.trace,
        })
    }

    fn log(&mut self, side: Option<Side>, event: TraceEvent) {
        self.trace.push(TraceRecord::new(self.now, side, event));
    }

    fn collect_trace(&mut self, side: Side) {
        let events = self.conn(side).drain_trace();
        self.trace.extend(
            events
                .into_iter()
                .map(|(t, e)| TraceRecord::new(t, Some(side), e)),
        );
    }

    /// Sends everything `side` has ready and re-arms its timer.
    fn pump(&mut self, side: Side) -> Result<(), SimError> {
        let now = self.now;
        while let Some(tx) = self.conn(side).poll_transmit(now) {
            self.collect_trace(side);
            let to = side.peer();
            let path = tx.path;
            let bytes = (tx.udp_len + IP_UDP_OVERHEAD) as u64;
            let links = self
                .links
                .get_mut(path as usize)
                .ok_or(SimError::NoSuchPath(path))?;
            let link = match to {
                Side::Client => &mut links.0,
                Side::Server => &mut links.1,
            };
            match link.enqueue(now, bytes) {
                Some(arrival) => {
                    if self.link_events {
                        self.log(None, TraceEvent::LinkEnqueue { path, to, bytes });
                    }
                    self.queue.push(
                        arrival,
                        Event::Deliver {
                            to,
                            path,
                            packet: tx.packet,
                        },
                    );
                }
                None => self.log(None, TraceEvent::BufferDrop { path, to, bytes }),
            }
        }
        self.collect_trace(side);
        let i = idx(side);
        match self.conn(side).poll_timeout() {
            Some(t) => {
                // A deadline already due fires on the next tick; this keeps
                // the clock moving if an endpoint reports work it cannot do yet.
                let t = t.max(now + Duration::from_nanos(1));
                if self.timer_at[i] != Some(t) {
                    self.timer_generation[i] += 1;
                    self.timer_at[i] = Some(t);
                    self.queue.push(
                        t,
                        Event::Timer {
                            side,
                            generation: self.timer_generation[i],
                        },
                    );
                }
            }
            None => {
                self.timer_generation[i] += 1;
                self.timer_at[i] = None;
            }
        }
        Ok(())
    }
}
