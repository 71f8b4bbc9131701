//! Frame codec.
//!
//! STREAM frames carry only offsets and lengths; the payload is written as
//! zero bytes so encoded sizes are exact without moving application data
//! around the simulator.

use super::varint::{encode_into, encoded_len, varint_decode};
use super::{ConnectionId, WireError};

/// ACK delays are carried in units of `2^ACK_DELAY_EXPONENT` microseconds.
pub const ACK_DELAY_EXPONENT: u32 = 3;

pub const PADDING_TYPE: u64 = 0x00;
pub const PING_TYPE: u64 = 0x01;
pub const ACK_TYPE: u64 = 0x02;
pub const STREAM_TYPE_BASE: u64 = 0x08;
pub const MAX_DATA_TYPE: u64 = 0x10;
pub const MAX_STREAM_DATA_TYPE: u64 = 0x11;
pub const NEW_CONNECTION_ID_TYPE: u64 = 0x18;
pub const PATH_CHALLENGE_TYPE: u64 = 0x1a;
pub const PATH_RESPONSE_TYPE: u64 = 0x1b;
pub const CONNECTION_CLOSE_TYPE: u64 = 0x1c;
pub const HANDSHAKE_DONE_TYPE: u64 = 0x1e;
/// Experimental single-byte code for ACK_MP. Only its size matters here.
pub const ACK_MP_TYPE: u64 = 0x3e;
pub const ACK_FREQUENCY_TYPE: u64 = 0xaf;

const STREAM_OFF_BIT: u64 = 0x04;
const STREAM_LEN_BIT: u64 = 0x02;
const STREAM_FIN_BIT: u64 = 0x01;

/// One additional ACK range, relative to the previous (higher) one.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AckBlock {
    /// Number of unacknowledged packets between this range and the previous one, minus one.
    pub gap: u64,
    /// Number of packets in this range, minus one.
    pub len: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AckFrame {
    pub largest: u64,
    /// Encoded ack delay, see [`ACK_DELAY_EXPONENT`].
    pub ack_delay: u64,
    pub first_range: u64,
    pub blocks: Vec<AckBlock>,
}

impl AckFrame {
    /// Builds a frame from inclusive `(lo, hi)` ranges sorted by descending
    /// packet number.
    pub fn from_ranges(ranges: &[(u64, u64)], ack_delay_micros: u64) -> Result<Self, WireError> {
        let (&(lo, hi), rest) = ranges
            .split_first()
            .ok_or(WireError::Malformed("ACK frame without ranges"))?;
        if lo > hi {
            return Err(WireError::Malformed("inverted ACK range"));
        }
        let mut blocks = Vec::with_capacity(rest.len());
        let mut prev_lo = lo;
        for &(lo, hi) in rest {
            if lo > hi || hi + 2 > prev_lo {
                return Err(WireError::Malformed(
                    "ACK ranges not descending and disjoint",
                ));
            }
            blocks.push(AckBlock {
                gap: prev_lo - hi - 2,
                len: hi - lo,
            });
            prev_lo = lo;
        }
        Ok(AckFrame {
            largest: hi,
            ack_delay: ack_delay_micros >> ACK_DELAY_EXPONENT,
            first_range: hi - lo,
            blocks,
        })
    }

    /// Acknowledged ranges, descending, as inclusive `(lo, hi)` pairs.
    pub fn ranges(&self) -> Result<Vec<(u64, u64)>, WireError> {
        let bad = WireError::Malformed("ACK range underflow");
        let mut out = Vec::with_capacity(self.range_count());
        let lo = self
            .largest
            .checked_sub(self.first_range)
            .ok_or(bad.clone())?;
        out.push((lo, self.largest));
        let mut prev_lo = lo;
        for block in &self.blocks {
            let hi = prev_lo
                .checked_sub(block.gap)
                .and_then(|v| v.checked_sub(2))
                .ok_or(bad.clone())?;
            let lo = hi.checked_sub(block.len).ok_or(bad.clone())?;
            out.push((lo, hi));
            prev_lo = lo;
        }
        Ok(out)
    }

    pub fn range_count(&self) -> usize {
        1 + self.blocks.len()
    }

    pub fn ack_delay_micros(&self) -> u64 {
        self.ack_delay << ACK_DELAY_EXPONENT
    }

    fn body_len(&self) -> usize {
        encoded_len(self.largest)
            + encoded_len(self.ack_delay)
            + encoded_len(self.blocks.len() as u64)
            + encoded_len(self.first_range)
            + self
                .blocks
                .iter()
                .map(|b| encoded_len(b.gap) + encoded_len(b.len))
                .sum::<usize>()
    }

    fn encode_body(&self, buf: &mut Vec<u8>) -> Result<(), WireError> {
        encode_into(self.largest, buf)?;
        encode_into(self.ack_delay, buf)?;
        encode_into(self.blocks.len() as u64, buf)?;
        encode_into(self.first_range, buf)?;
        for b in &self.blocks {
            encode_into(b.gap, buf)?;
            encode_into(b.len, buf)?;
        }
        Ok(())
    }

    fn decode_body(r: &mut Reader<'_>) -> Result<Self, WireError> {
        let largest = r.varint()?;
        let ack_delay = r.varint()?;
        let count = r.varint()?;
        let first_range = r.varint()?;
        // Every block takes at least two bytes.
        if count > (r.remaining() / 2) as u64 {
            return Err(WireError::Truncated);
        }
        let mut blocks = Vec::with_capacity(count as usize);
        for _ in 0..count {
            let gap = r.varint()?;
            let len = r.varint()?;
            blocks.push(AckBlock { gap, len });
        }
        Ok(AckFrame {
            largest,
            ack_delay,
            first_range,
            blocks,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StreamFrame {
    pub stream_id: u64,
    pub offset: u64,
    pub len: u64,
    pub fin: bool,
}

impl StreamFrame {
    /// Encoded size of a frame at `offset` carrying `len` bytes, always with
    /// an explicit length field.
    pub fn overhead(stream_id: u64, offset: u64, len: u64) -> usize {
        1 + encoded_len(stream_id)
            + if offset > 0 { encoded_len(offset) } else { 0 }
            + encoded_len(len)
    }

    /// Largest payload that fits in `budget` bytes of frame space, if any.
    pub fn max_payload(stream_id: u64, offset: u64, budget: usize) -> Option<u64> {
        let fixed = 1 + encoded_len(stream_id) + if offset > 0 { encoded_len(offset) } else { 0 };
        // The length field grows with the payload, so take the best of each field width.
        [
            (1usize, 63u64),
            (2, 16_383),
            (4, (1 << 30) - 1),
            (8, u64::MAX),
        ]
        .iter()
        .filter_map(|&(len_field, cap)| {
            let room = budget.checked_sub(fixed + len_field)? as u64;
            Some(room.min(cap))
        })
        .max()
        .filter(|&len| len > 0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Frame {
    Padding {
        len: usize,
    },
    Ping,
    Ack(AckFrame),
    AckMp {
        path_id: u64,
        ack: AckFrame,
    },
    Stream(StreamFrame),
    MaxData {
        limit: u64,
    },
    MaxStreamData {
        stream_id: u64,
        limit: u64,
    },
    NewConnectionId {
        seq: u64,
        retire_prior_to: u64,
        cid: ConnectionId,
        reset_token: [u8; 16],
    },
    PathChallenge {
        data: [u8; 8],
    },
    PathResponse {
        data: [u8; 8],
    },
    ConnectionClose {
        error_code: u64,
        frame_type: u64,
    },
    HandshakeDone,
    AckFrequency {
        seq: u64,
        packet_threshold: u64,
        max_ack_delay_us: u64,
        ignore_reorder: bool,
    },
}

impl Frame {
    pub fn type_code(&self) -> u64 {
        match self {
            Frame::Padding { .. } => PADDING_TYPE,
            Frame::Ping => PING_TYPE,
            Frame::Ack(_) => ACK_TYPE,
            Frame::AckMp { .. } => ACK_MP_TYPE,
            Frame::Stream(s) => {
                let mut t = STREAM_TYPE_BASE | STREAM_LEN_BIT;
                if s.offset > 0 {
                    t |= STREAM_OFF_BIT;
                }
                if s.fin {
                    t |= STREAM_FIN_BIT;
                }
                t
            }
            Frame::MaxData { .. } => MAX_DATA_TYPE,
            Frame::MaxStreamData { .. } => MAX_STREAM_DATA_TYPE,
            Frame::NewConnectionId { .. } => NEW_CONNECTION_ID_TYPE,
            Frame::PathChallenge { .. } => PATH_CHALLENGE_TYPE,
            Frame::PathResponse { .. } => PATH_RESPONSE_TYPE,
            Frame::ConnectionClose { .. } => CONNECTION_CLOSE_TYPE,
            Frame::HandshakeDone => HANDSHAKE_DONE_TYPE,
            Frame::AckFrequency { .. } => ACK_FREQUENCY_TYPE,
        }
    }

    /// Whether receiving this frame obliges the peer to acknowledge the packet.
    pub fn is_ack_eliciting(&self) -> bool {
        !matches!(
            self,
            Frame::Padding { .. }
                | Frame::Ack(_)
                | Frame::AckMp { .. }
                | Frame::ConnectionClose { .. }
        )
    }

    pub fn is_ack(&self) -> bool {
        matches!(self, Frame::Ack(_) | Frame::AckMp { .. })
    }

    /// Exact number of bytes [`Frame::encode`] produces.
    pub fn encoded_len(&self) -> usize {
        if let Frame::Padding { len } = self {
            return *len;
        }
        let body = match self {
            Frame::Padding { .. } => unreachable!(),
            Frame::Ping | Frame::HandshakeDone => 0,
            Frame::Ack(ack) => ack.body_len(),
            Frame::AckMp { path_id, ack } => encoded_len(*path_id) + ack.body_len(),
            Frame::Stream(s) => {
                StreamFrame::overhead(s.stream_id, s.offset, s.len) - 1 + s.len as usize
            }
            Frame::MaxData { limit } => encoded_len(*limit),
            Frame::MaxStreamData { stream_id, limit } => {
                encoded_len(*stream_id) + encoded_len(*limit)
            }
            Frame::NewConnectionId {
                seq,
                retire_prior_to,
                ..
            } => encoded_len(*seq) + encoded_len(*retire_prior_to) + 1 + ConnectionId::LEN + 16,
            Frame::PathChallenge { .. } | Frame::PathResponse { .. } => 8,
            Frame::ConnectionClose {
                error_code,
                frame_type,
            } => encoded_len(*error_code) + encoded_len(*frame_type) + 1,
            Frame::AckFrequency {
                seq,
                packet_threshold,
                max_ack_delay_us,
                ..
            } => {
                encoded_len(*seq)
                    + encoded_len(*packet_threshold)
                    + encoded_len(*max_ack_delay_us)
                    + 1
            }
        };
        encoded_len(self.type_code()) + body
    }

    pub fn encode(&self, buf: &mut Vec<u8>) -> Result<(), WireError> {
        if let Frame::Padding { len } = self {
            buf.resize(buf.len() + len, 0);
            return Ok(());
        }
        encode_into(self.type_code(), buf)?;
        match self {
            Frame::Padding { .. } | Frame::Ping | Frame::HandshakeDone => {}
            Frame::Ack(ack) => ack.encode_body(buf)?,
            Frame::AckMp { path_id, ack } => {
                encode_into(*path_id, buf)?;
                ack.encode_body(buf)?;
            }
            Frame::Stream(s) => {
                encode_into(s.stream_id, buf)?;
                if s.offset > 0 {
                    encode_into(s.offset, buf)?;
                }
                encode_into(s.len, buf)?;
                buf.resize(buf.len() + s.len as usize, 0);
            }
            Frame::MaxData { limit } => encode_into(*limit, buf)?,
            Frame::MaxStreamData { stream_id, limit } => {
                encode_into(*stream_id, buf)?;
                encode_into(*limit, buf)?;
            }
            Frame::NewConnectionId {
                seq,
                retire_prior_to,
                cid,
                reset_token,
            } => {
                encode_into(*seq, buf)?;
                encode_into(*retire_prior_to, buf)?;
                buf.push(ConnectionId::LEN as u8);
                buf.extend_from_slice(cid.as_bytes());
                buf.extend_from_slice(reset_token);
            }
            Frame::PathChallenge { data } | Frame::PathResponse { data } => {
                buf.extend_from_slice(data)
            }
            Frame::ConnectionClose {
                error_code,
                frame_type,
            } => {
                encode_into(*error_code, buf)?;
                encode_into(*frame_type, buf)?;
                buf.push(0);
            }
            Frame::AckFrequency {
                seq,
                packet_threshold,
                max_ack_delay_us,
                ignore_reorder,
            } => {
                encode_into(*seq, buf)?;
                encode_into(*packet_threshold, buf)?;
                encode_into(*max_ack_delay_us, buf)?;
                buf.push(u8::from(*ignore_reorder));
            }
        }
        Ok(())
    }

    /// Decodes the frame at the front of `bytes`, returning it with the
    /// number of bytes consumed. Runs of PADDING collapse into one frame.
    pub fn decode(bytes: &[u8]) -> Result<(Frame, usize), WireError> {
        let mut r = Reader { bytes, pos: 0 };
        let ty = r.varint()?;
        let frame = match ty {
            PADDING_TYPE => {
                while r.bytes.get(r.pos) == Some(&0) {
                    r.pos += 1;
                }
                Frame::Padding { len: r.pos }
            }
            PING_TYPE => Frame::Ping,
            ACK_TYPE => Frame::Ack(AckFrame::decode_body(&mut r)?),
            ACK_MP_TYPE => {
                let path_id = r.varint()?;
                Frame::AckMp {
                    path_id,
                    ack: AckFrame::decode_body(&mut r)?,
                }
            }
            t if (STREAM_TYPE_BASE..=STREAM_TYPE_BASE | 0x07).contains(&t) => {
                let stream_id = r.varint()?;
                let offset = if t & STREAM_OFF_BIT != 0 {
                    r.varint()?
                } else {
                    0
                };
                let len = if t & STREAM_LEN_BIT != 0 {
                    r.varint()?
                } else {
                    r.remaining() as u64
                };
                r.take(usize::try_from(len).map_err(|_| WireError::Truncated)?)?;
                Frame::Stream(StreamFrame {
                    stream_id,
                    offset,
                    len,
                    fin: t & STREAM_FIN_BIT != 0,
                })
            }
            MAX_DATA_TYPE => Frame::MaxData { limit: r.varint()? },
            MAX_STREAM_DATA_TYPE => Frame::MaxStreamData {
                stream_id: r.varint()?,
                limit: r.varint()?,
            },
            NEW_CONNECTION_ID_TYPE => {
                let seq = r.varint()?;
                let retire_prior_to = r.varint()?;
                let len = r.take(1)?[0] as usize;
                if len != ConnectionId::LEN {
                    return Err(WireError::Malformed("unsupported connection ID length"));
                }
                let cid = ConnectionId::from_slice(r.take(len)?);
                let mut reset_token = [0u8; 16];
                reset_token.copy_from_slice(r.take(16)?);
                Frame::NewConnectionId {
                    seq,
                    retire_prior_to,
                    cid,
                    reset_token,
                }
            }
            PATH_CHALLENGE_TYPE | PATH_RESPONSE_TYPE => {
                let mut data = [0u8; 8];
                data.copy_from_slice(r.take(8)?);
                if ty == PATH_CHALLENGE_TYPE {
                    Frame::PathChallenge { data }
                } else {
                    Frame::PathResponse { data }
                }
            }
            CONNECTION_CLOSE_TYPE => {
                let error_code = r.varint()?;
                let frame_type = r.varint()?;
                let reason_len = r.varint()?;
                r.take(usize::try_from(reason_len).map_err(|_| WireError::Truncated)?)?;
                Frame::ConnectionClose {
                    error_code,
                    frame_type,
                }
            }
            HANDSHAKE_DONE_TYPE => Frame::HandshakeDone,
            ACK_FREQUENCY_TYPE => Frame::AckFrequency {
                seq: r.varint()?,
                packet_threshold: r.varint()?,
                max_ack_delay_us: r.varint()?,
                ignore_reorder: match r.take(1)?[0] {
                    0 => false,
                    1 => true,
                    _ => return Err(WireError::Malformed("ignore_order must be 0 or 1")),
                },
            },
            other => return Err(WireError::UnknownFrameType(other)),
        };
        Ok((frame, r.pos))
    }
}

pub fn encode_frame(frame: &Frame) -> Result<Vec<u8>, WireError> {
    let mut buf = Vec::with_capacity(frame.encoded_len());
    frame.encode(&mut buf)?;
    Ok(buf)
}

/// Decodes exactly one frame spanning all of `bytes`.
pub fn decode_frame(bytes: &[u8]) -> Result<Frame, WireError> {
    let (frame, used) = Frame::decode(bytes)?;
    if used != bytes.len() {
        return Err(WireError::Malformed("trailing bytes after frame"));
    }
    Ok(frame)
}

/// Decodes a whole packet payload into its frames.
pub fn decode_frames(mut bytes: &[u8]) -> Result<Vec<Frame>, WireError> {
    let mut frames = Vec::new();
    while !bytes.is_empty() {
        let (frame, used) = Frame::decode(bytes)?;
        frames.push(frame);
        bytes = &bytes[used..];
    }
    Ok(frames)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn varint(&mut self) -> Result<u64, WireError> {
        let (v, used) = varint_decode(&self.bytes[self.pos..])?;
        self.pos += used;
        Ok(v)
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        let end = self.pos.checked_add(n).ok_or(WireError::Truncated)?;
        let out = self.bytes.get(self.pos..end).ok_or(WireError::Truncated)?;
        self.pos = end;
        Ok(out)
    }

    fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}
