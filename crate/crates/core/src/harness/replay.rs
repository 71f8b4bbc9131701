//! Scripted two-path reception replay showing how the ranges a receiver
//! advertises depend on the packet number space design.
//!
//! The server sends 12 packets round robin, one per millisecond, starting
//! on the upper path. The lower path is faster, so its packets overtake
//! the upper path's and leave holes in a shared number space.

use std::time::Duration;

use crate::acktrack::{AbLimit, AckDispatch, AckPolicy, AckTracker};
use crate::{Design, SimTime};

pub const REPLAY_PACKETS: u64 = 12;
pub const REPLAY_SPACING: Duration = Duration::from_millis(1);
pub const UPPER_PATH: u64 = 0;
pub const LOWER_PATH: u64 = 1;
pub const UPPER_DELAY: Duration = Duration::from_millis(9);
pub const LOWER_DELAY: Duration = Duration::from_millis(5);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReplayArrival {
    pub time: SimTime,
    pub path: u64,
    pub space: u64,
    pub pn: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReplayAck {
    pub time: SimTime,
    /// Path the frame is sent on.
    pub path: u64,
    pub space: u64,
    /// Advertised ranges, highest first.
    pub ranges: Vec<(u64, u64)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Replay {
    pub design: Design,
    pub arrivals: Vec<ReplayArrival>,
    pub acks: Vec<ReplayAck>,
    /// Received ranges of the lower path's space, ascending, right after its
    /// fourth packet arrived.
    pub ranges_at_fourth_lower: Vec<(u64, u64)>,
    /// Last frame sent before that fourth arrival.
    pub ack_before_fourth_lower: Option<ReplayAck>,
}

/// Replays the script under `design`, acknowledging every packet on the
/// path it arrived on.
pub fn replay(design: Design) -> Replay {
    let policy = AckPolicy {
        ab_limit: AbLimit::Unlimited,
        dispatch: AckDispatch::OnPath,
        packet_threshold: 1,
        ack_frequency: false,
        ..AckPolicy::default()
    };
    let mut arrivals: Vec<ReplayArrival> = (0..REPLAY_PACKETS)
        .map(|i| {
            let path = if i % 2 == 0 { UPPER_PATH } else { LOWER_PATH };
            let delay = if path == LOWER_PATH {
                LOWER_DELAY
            } else {
                UPPER_DELAY
            };
            let (space, pn) = match design {
                Design::Spns => (0, i),
                Design::Mpns => (path, i / 2),
            };
            ReplayArrival {
                time: SimTime::ZERO + REPLAY_SPACING * i as u32 + delay,
                path,
                space,
                pn,
            }
        })
        .collect();
    arrivals.sort_by_key(|a| a.time);

    let mut tracker = AckTracker::new(design, policy);
    let mut acks: Vec<ReplayAck> = Vec::new();
    let mut lower_seen = 0;
    let mut snapshot = None;
    for a in &arrivals {
        tracker.on_packet_received(a.space, a.pn, a.path, true, a.time);
        if a.path == LOWER_PATH {
            lower_seen += 1;
            if lower_seen == 4 {
                let ranges = tracker
                    .space(a.space)
                    .map(|s| s.ranges().iter().collect())
                    .unwrap_or_default();
                snapshot = Some((ranges, acks.last().cloned()));
            }
        }
        if tracker.wants_send(a.time) {
            for b in tracker.build_ack_frames(a.time, &[UPPER_PATH, LOWER_PATH]) {
                acks.push(ReplayAck {
                    time: a.time,
                    path: b.path,
                    space: b.space,
                    ranges: b.ranges,
                });
            }
        }
    }
    let (ranges_at_fourth_lower, ack_before_fourth_lower) =
        snapshot.expect("script has four lower-path packets");
    Replay {
        design,
        arrivals,
        acks,
        ranges_at_fourth_lower,
        ack_before_fourth_lower,
    }
}
