//! Receiver-side acknowledgment machinery: received-packet range sets,
//! range selection under an ACK block budget, and the decision of when and
//! on which path(s) ACK/ACK_MP frames are sent.

mod policy;
mod range_set;
mod tracker;

use thiserror::Error;

pub use policy::{
    select_ranges, AbLimit, AckDispatch, AckPolicy, RangeSelection, DEFAULT_MAX_ACK_DELAY,
    DEFAULT_PACKET_THRESHOLD, REORDER_PACKET_THRESHOLD,
};
pub use range_set::RangeSet;
pub use tracker::{AckDecision, AckTracker, BuiltAck, ReceiveOutcome, RecvSpace};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum AckError {
    #[error("no packets to acknowledge")]
    NothingToAcknowledge,
}
