//! Sender-side packet numbering, sent-packet bookkeeping, nonce derivation,
//! RTT estimation, per-path RACK-style loss detection, probe timeouts and
//! retransmission accounting.

mod nonce;
mod recovery;
mod retransmit;
mod rtt;

use thiserror::Error;

pub use nonce::{compute_nonce, Nonce};
pub use recovery::{
    AckOutcome, LossTrigger, LostPacket, NumberSpace, PathAck, PathRecovery, RttSample,
    SentPacketRecord, SentTracker, TimeoutOutcome, PACKET_THRESHOLD,
};
pub use retransmit::{RetransmitLedger, RetransmitSegment, StreamRange};
pub use rtt::{RttEstimator, INITIAL_RTT};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SendError {
    #[error("unknown path {0}")]
    UnknownPath(u64),
    #[error("unknown packet number space {0}")]
    UnknownSpace(u64),
    #[error("acknowledgment of unsent packet {pn} in space {space}")]
    AckOfUnsent { space: u64, pn: u64 },
}
