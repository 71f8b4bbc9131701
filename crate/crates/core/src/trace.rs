//! JSON-lines event traces.
//!
//! Each line is one object with a `time_us` timestamp (microseconds, with
//! nanosecond fractions), an optional `side` naming the endpoint that logged
//! it, an `event` tag and event-specific fields. ACK_MP frames are encoded
//! with frame type `0x3e` and ACK_FREQUENCY with `0xaf`.

use std::io::{self, BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::{Design, Side, SimTime};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum TraceEvent {
    PacketSent {
        path: u64,
        space: u64,
        pn: u64,
        bytes: u64,
        ack_eliciting: bool,
        stream_bytes: u64,
        /// 96-bit AEAD nonce input, hex encoded.
        nonce: String,
    },
    PacketReceived {
        path: u64,
        space: u64,
        pn: u64,
        bytes: u64,
    },
    DuplicateReceived {
        path: u64,
        space: u64,
        pn: u64,
    },
    AckGenerated {
        path: u64,
        space: u64,
        n_ranges: u64,
        at_limit: bool,
        bytes: u64,
        largest: u64,
    },
    RttSample {
        path: u64,
        latest_us: u64,
        srtt_us: u64,
        min_rtt_us: u64,
    },
    PacketLost {
        path: u64,
        space: u64,
        pn: u64,
        trigger: String,
    },
    SpuriousLoss {
        path: u64,
        space: u64,
        pn: u64,
    },
    StreamRetransmit {
        stream_id: u64,
        offset: u64,
        len: u64,
        nth_time: u32,
    },
    CcState {
        path: u64,
        cwnd: u64,
        pacing_rate: Option<f64>,
        mode: String,
    },
    PathChallengeSent {
        path: u64,
    },
    PathValidated {
        path: u64,
    },
    HandshakeComplete {
        multipath: Option<Design>,
    },
    TransferStarted {},
    TransferComplete {
        seconds: f64,
    },
    MaxDataSent {
        limit: u64,
    },
    LinkEnqueue {
        path: u64,
        to: Side,
        bytes: u64,
    },
    LinkDeliver {
        path: u64,
        to: Side,
        bytes: u64,
    },
    BufferDrop {
        path: u64,
        to: Side,
        bytes: u64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub time_us: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side: Option<Side>,
    #[serde(flatten)]
    pub event: TraceEvent,
}

impl TraceRecord {
    pub fn new(time: SimTime, side: Option<Side>, event: TraceEvent) -> Self {
        TraceRecord {
            time_us: time.as_micros_f64(),
            side,
            event,
        }
    }

    pub fn time(&self) -> SimTime {
        SimTime::from_micros_f64(self.time_us)
    }
}

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("trace I/O: {0}")]
    Io(#[from] io::Error),
    #[error("trace line {line}: {source}")]
    Parse {
        line: usize,
        source: serde_json::Error,
    },
}

/// Writes one JSON object per line.
pub fn write_jsonl<W: Write>(records: &[TraceRecord], mut w: W) -> Result<(), TraceError> {
    for r in records {
        serde_json::to_writer(&mut w, r).map_err(io::Error::from)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn to_jsonl_string(records: &[TraceRecord]) -> String {
    let mut buf = Vec::new();
    write_jsonl(records, &mut buf).expect("writing to memory cannot fail");
    String::from_utf8(buf).expect("JSON is UTF-8")
}

pub fn read_jsonl<R: BufRead>(r: R) -> Result<Vec<TraceRecord>, TraceError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|source| TraceError::Parse {
            line: i + 1,
            source,
        })?;
        out.push(rec);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_shape() {
        let r = TraceRecord::new(
            SimTime::from_nanos(1_500),
            Some(Side::Client),
            TraceEvent::AckGenerated {
                path: 1,
                space: 0,
                n_ranges: 2,
                at_limit: false,
                bytes: 7,
                largest: 5,
            },
        );
        let s = to_jsonl_string(std::slice::from_ref(&r));
        assert_eq!(
            s,
            "{\"time_us\":1.5,\"side\":\"client\",\"event\":\"ack_generated\",\"path\":1,\"space\":0,\"n_ranges\":2,\"at_limit\":false,\"bytes\":7,\"largest\":5}\n"
        );
        let back = read_jsonl(s.as_bytes()).unwrap();
        assert_eq!(back, vec![r]);
        assert_eq!(back[0].time(), SimTime::from_nanos(1_500));
    }

    #[test]
    fn unit_like_and_sideless_events() {
        let recs = vec![
            TraceRecord::new(
                SimTime::ZERO,
                Some(Side::Client),
                TraceEvent::TransferStarted {},
            ),
            TraceRecord::new(
                SimTime::from_millis(3),
                None,
                TraceEvent::BufferDrop {
                    path: 0,
                    to: Side::Client,
                    bytes: 1280,
                },
            ),
        ];
        let s = to_jsonl_string(&recs);
        assert_eq!(read_jsonl(s.as_bytes()).unwrap(), recs);
    }

    #[test]
    fn parse_error_names_line() {
        let err =
            read_jsonl("{\"time_us\":0,\"event\":\"transfer_started\"}\nnot json\n".as_bytes())
                .unwrap_err();
        assert!(matches!(err, TraceError::Parse { line: 2, .. }));
    }

    #[test]
    fn timestamps_survive_round_trip() {
        for ns in [0u64, 1, 999, 123_456_789, 98_765_432_101] {
            let r = TraceRecord::new(
                SimTime::from_nanos(ns),
                None,
                TraceEvent::TransferStarted {},
            );
            let back = read_jsonl(to_jsonl_string(&[r]).as_bytes()).unwrap();
            assert_eq!(back[0].time().as_nanos(), ns);
        }
    }
}
