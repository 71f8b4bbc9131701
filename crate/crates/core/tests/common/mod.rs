//! Generators and reference implementations shared by the integration tests.
#![allow(dead_code)]

use mpquic_sim::acktrack::RangeSelection;
use mpquic_sim::wire::{AckBlock, AckFrame, ConnectionId, Frame, StreamFrame, MAX_VARINT};
use rand::Rng;

/// Encoded size of a QUIC variable-length integer, from the 2-bit prefix table.
pub fn varint_len_oracle(v: u64) -> usize {
    if v < 1 << 6 {
        1
    } else if v < 1 << 14 {
        2
    } else if v < 1 << 30 {
        4
    } else {
        8
    }
}

/// A value spread evenly over the four varint widths.
pub fn random_varint<R: Rng>(rng: &mut R) -> u64 {
    let cap = match rng.random_range(0..4) {
        0 => (1 << 6) - 1,
        1 => (1 << 14) - 1,
        2 => (1 << 30) - 1,
        _ => MAX_VARINT,
    };
    rng.random_range(0..=cap)
}

fn small<R: Rng>(rng: &mut R) -> u64 {
    rng.random_range(0..20_000)
}

fn random_ack<R: Rng>(rng: &mut R) -> AckFrame {
    let n = rng.random_range(0..40);
    AckFrame {
        largest: random_varint(rng),
        ack_delay: random_varint(rng),
        first_range: random_varint(rng),
        blocks: (0..n)
            .map(|_| AckBlock {
                gap: random_varint(rng),
                len: random_varint(rng),
            })
            .collect(),
    }
}

/// Any frame the codec supports, with field values across all varint widths.
pub fn random_frame<R: Rng>(rng: &mut R) -> Frame {
    match rng.random_range(0..14) {
        0 => Frame::Padding {
            len: rng.random_range(1..1200),
        },
        1 => Frame::Ping,
        2 => Frame::Ack(random_ack(rng)),
        3 => Frame::AckMp {
            path_id: random_varint(rng),
            ack: random_ack(rng),
        },
        4 | 5 => Frame::Stream(StreamFrame {
            stream_id: random_varint(rng),
            offset: if rng.random_bool(0.2) {
                0
            } else {
                random_varint(rng)
            },
            len: rng.random_range(0..1500),
            fin: rng.random_bool(0.5),
        }),
        6 => Frame::MaxData {
            limit: random_varint(rng),
        },
        7 => Frame::MaxStreamData {
            stream_id: random_varint(rng),
            limit: random_varint(rng),
        },
        8 => Frame::NewConnectionId {
            seq: random_varint(rng),
            retire_prior_to: random_varint(rng),
            cid: ConnectionId::new(rng.random()),
            reset_token: rng.random(),
        },
        9 => Frame::PathChallenge { data: rng.random() },
        10 => Frame::PathResponse { data: rng.random() },
        11 => Frame::ConnectionClose {
            error_code: random_varint(rng),
            frame_type: small(rng),
        },
        12 => Frame::HandshakeDone,
        _ => Frame::AckFrequency {
            seq: random_varint(rng),
            packet_threshold: random_varint(rng),
            max_ack_delay_us: random_varint(rng),
            ignore_reorder: rng.random_bool(0.5),
        },
    }
}

/// Maximal runs of set bits as ascending inclusive intervals.
pub fn runs_of(bits: &[bool]) -> Vec<(u64, u64)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &b) in bits.iter().chain(std::iter::once(&false)).enumerate() {
        match (b, start) {
            (true, None) => start = Some(i as u64),
            (false, Some(s)) => {
                out.push((s, i as u64 - 1));
                start = None;
            }
            _ => {}
        }
    }
    out
}

/// Ranges to advertise, computed by sorting the intervals and slicing.
pub fn select_oracle(
    ascending: &[(u64, u64)],
    max_ranges: usize,
    selection: RangeSelection,
) -> Vec<(u64, u64)> {
    let mut desc = ascending.to_vec();
    desc.sort_by(|a, b| b.1.cmp(&a.1));
    let k = max_ranges.min(desc.len());
    match selection {
        RangeSelection::LargestFirst => desc[..k].to_vec(),
        RangeSelection::LowestFirst => {
            let mut out = vec![desc[0]];
            let mut asc = ascending.to_vec();
            asc.sort();
            let mut low: Vec<_> = asc.into_iter().take(k - 1).collect();
            low.reverse();
            out.extend(low);
            out
        }
    }
}
