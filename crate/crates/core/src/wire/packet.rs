//! Packets as header metadata plus a frame list, with fixed, documented
//! per-packet overhead.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::Frame;
use crate::DesignSupport;

/// Short header: 3 bytes of flags/version-independent fields, an 8-byte
/// destination CID and a 4-byte packet number.
pub const SHORT_HEADER_LEN: usize = 3 + ConnectionId::LEN + 4;
pub const AEAD_TAG_LEN: usize = 16;
/// Largest UDP payload a 1-RTT packet may occupy.
pub const MSS: usize = 1252;
/// Frame bytes available in a full-sized 1-RTT packet.
pub const MAX_FRAME_BYTES: usize = MSS - SHORT_HEADER_LEN - AEAD_TAG_LEN;
/// IPv4 + UDP headers, added to every datagram on the links.
pub const IP_UDP_OVERHEAD: usize = 28;
/// Handshake datagrams are padded to this UDP payload size.
pub const HANDSHAKE_DATAGRAM_LEN: usize = 1200;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ConnectionId([u8; ConnectionId::LEN]);

impl ConnectionId {
    pub const LEN: usize = 8;

    pub fn new(bytes: [u8; Self::LEN]) -> Self {
        ConnectionId(bytes)
    }

    /// Panics unless `bytes` is exactly [`ConnectionId::LEN`] long.
    pub fn from_slice(bytes: &[u8]) -> Self {
        let mut out = [0u8; Self::LEN];
        out.copy_from_slice(bytes);
        ConnectionId(out)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

impl fmt::Debug for ConnectionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

/// Handshake-time parameters each endpoint advertises.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TransportParameters {
    /// Packet number space designs offered through `enable_multipath`.
    pub multipath: DesignSupport,
    pub active_connection_id_limit: u64,
    pub initial_max_data: u64,
    pub initial_max_stream_data: u64,
    /// Whether ACK_FREQUENCY frames are understood.
    pub ack_frequency: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PacketKind {
    /// Client's first flight.
    Initial(TransportParameters),
    /// Server flight completing the abstract handshake. Frames are treated as
    /// a coalesced 1-RTT packet.
    Handshake(TransportParameters),
    OneRtt,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PacketHeader {
    /// Sequence number of the destination CID, which names the path.
    pub dcid_seq: u64,
    /// Packet number space (0 with a single space, the path id otherwise).
    pub space: u64,
    pub pn: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Packet {
    pub kind: PacketKind,
    pub header: PacketHeader,
    pub frames: Vec<Frame>,
}

impl Packet {
    pub fn one_rtt(header: PacketHeader, frames: Vec<Frame>) -> Self {
        Packet {
            kind: PacketKind::OneRtt,
            header,
            frames,
        }
    }

    pub fn payload_len(&self) -> usize {
        self.frames.iter().map(Frame::encoded_len).sum()
    }

    /// UDP payload size.
    pub fn udp_len(&self) -> usize {
        match self.kind {
            PacketKind::OneRtt => SHORT_HEADER_LEN + self.payload_len() + AEAD_TAG_LEN,
            _ => HANDSHAKE_DATAGRAM_LEN.max(SHORT_HEADER_LEN + self.payload_len() + AEAD_TAG_LEN),
        }
    }

    /// Bytes occupied on a link, IP and UDP headers included.
    pub fn wire_len(&self) -> usize {
        self.udp_len() + IP_UDP_OVERHEAD
    }

    pub fn is_ack_eliciting(&self) -> bool {
        self.frames.iter().any(Frame::is_ack_eliciting)
    }

    pub fn is_one_rtt(&self) -> bool {
        matches!(self.kind, PacketKind::OneRtt)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::wire::StreamFrame;

    #[test]
    fn overhead_constants() {
        assert_eq!(SHORT_HEADER_LEN, 15);
        assert_eq!(MAX_FRAME_BYTES, 1221);
    }

    #[test]
    fn full_packet_size() {
        let len = StreamFrame::max_payload(0, 5000, MAX_FRAME_BYTES).unwrap();
        let p = Packet::one_rtt(
            PacketHeader {
                dcid_seq: 0,
                space: 0,
                pn: 7,
            },
            vec![Frame::Stream(StreamFrame {
                stream_id: 0,
                offset: 5000,
                len,
                fin: false,
            })],
        );
        assert_eq!(p.udp_len(), MSS);
        assert_eq!(p.wire_len(), MSS + IP_UDP_OVERHEAD);
        assert!(p.is_ack_eliciting());
    }
}
