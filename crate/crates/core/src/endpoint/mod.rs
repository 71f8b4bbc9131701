//! Client and server endpoints of a bulk-download connection.
//!
//! The client opens the connection, requests one object on stream 0 and
//! receives it; the server sends the object, spreading packets over every
//! validated path.

mod connection;
mod stream;

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::acktrack::AckPolicy;
use crate::cc::CcAlgorithm;
use crate::path::PathError;
use crate::sendtrack::SendError;
use crate::wire::{Packet, WireError};
use crate::{DesignSupport, SimTime};

pub use connection::{Connection, REQUEST_LEN, STREAM_ID};
pub use stream::{Chunk, RecvStream, SendStream};

/// Initial receive window for connection and stream flow control.
pub const DEFAULT_INITIAL_WINDOW: u64 = 2 * 1024 * 1024;
/// Cap of the auto-tuned receive window.
pub const DEFAULT_MAX_WINDOW: u64 = 16 * 1024 * 1024;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConnectionConfig {
    /// Multipath designs this endpoint offers.
    pub multipath: DesignSupport,
    pub ack_policy: AckPolicy,
    pub cc: CcAlgorithm,
    /// Use the delay-based slow-start exit for CUBIC.
    pub picoquic_cubic: bool,
    pub transfer_size: u64,
    /// Number of network paths; the client tries to open all of them.
    pub n_paths: u64,
    pub initial_window: u64,
    pub max_window: u64,
    pub seed: u64,
}

impl Default for ConnectionConfig {
    fn default() -> Self {
        ConnectionConfig {
            multipath: DesignSupport::BOTH,
            ack_policy: AckPolicy::default(),
            cc: CcAlgorithm::Cubic,
            picoquic_cubic: true,
            transfer_size: 5 * 1024 * 1024,
            n_paths: 1,
            initial_window: DEFAULT_INITIAL_WINDOW,
            max_window: DEFAULT_MAX_WINDOW,
            seed: 0,
        }
    }
}

#[derive(Debug, Error)]
pub enum ConnectionError {
    #[error(transparent)]
    Send(#[from] SendError),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error(transparent)]
    Path(#[from] PathError),
}

/// A datagram ready to go out on `path`.
#[derive(Clone, Debug, PartialEq)]
pub struct Transmit {
    pub path: u64,
    pub packet: Packet,
    /// UDP payload length.
    pub udp_len: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ConnectionStats {
    pub packets_sent: u64,
    pub packets_received: u64,
    pub duplicates_received: u64,
    pub packets_lost: u64,
    pub spurious_losses: u64,
    pub ack_frames_sent: u64,
    pub ack_ranges_sent: u64,
    pub ack_frames_at_limit: u64,
    pub ack_bytes_sent: u64,
    pub retransmitted_bytes: u64,
    pub max_per_byte_retransmissions: u32,
    pub stream_bytes_delivered: u64,
    pub first_packet_at: Option<SimTime>,
    pub stream_completed_at: Option<SimTime>,
    pub transfer_complete_at: Option<SimTime>,
}

impl ConnectionStats {
    /// From the client's first packet to the receipt of CONNECTION_CLOSE.
    pub fn transfer_time(&self) -> Option<Duration> {
        Some(self.transfer_complete_at? - self.first_packet_at?)
    }
}
