//! Byte-exact wire encoding: varints, frames and packet sizing.

mod frame;
mod packet;
mod varint;

use thiserror::Error;

pub use frame::{
    decode_frame, decode_frames, encode_frame, AckBlock, AckFrame, Frame, StreamFrame,
    ACK_DELAY_EXPONENT, ACK_FREQUENCY_TYPE, ACK_MP_TYPE, ACK_TYPE,
};
pub use packet::{
    ConnectionId, Packet, PacketHeader, PacketKind, TransportParameters, AEAD_TAG_LEN,
    HANDSHAKE_DATAGRAM_LEN, IP_UDP_OVERHEAD, MAX_FRAME_BYTES, MSS, SHORT_HEADER_LEN,
};
pub use varint::{encoded_len, varint_decode, varint_encode, VarInt, MAX_VARINT};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("value {0} does not fit in a variable-length integer")]
    VarIntRange(u64),
    #[error("input truncated")]
    Truncated,
    #[error("unknown frame type {0:#x}")]
    UnknownFrameType(u64),
    #[error("malformed frame: {0}")]
    Malformed(&'static str),
}
