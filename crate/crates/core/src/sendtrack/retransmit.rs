use std::collections::BTreeMap;

use crate::acktrack::RangeSet;

/// Stream bytes carried by a packet.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct StreamRange {
    pub stream_id: u64,
    pub offset: u64,
    pub len: u64,
    pub fin: bool,
}

impl StreamRange {
    pub fn end(&self) -> u64 {
        self.offset + self.len
    }
}

/// A stretch of bytes queued for retransmission, all resent for the same
/// `nth_time`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RetransmitSegment {
    pub stream_id: u64,
    pub offset: u64,
    pub len: u64,
    pub nth_time: u32,
}

#[derive(Clone, Debug, Default)]
struct StreamLedger {
    acked: RangeSet,
    // start -> (end exclusive, count); disjoint
    counts: BTreeMap<u64, (u64, u32)>,
}

impl StreamLedger {
    /// Increments the counter over `[start, end)` and returns the resulting
    /// `(start, end, count)` pieces.
    fn bump(&mut self, start: u64, end: u64) -> Vec<(u64, u64, u32)> {
        // Split any piece straddling the boundaries so every touched piece
        // lies fully inside [start, end).
        for cut in [start, end] {
            if let Some((&s, &(e, c))) = self.counts.range(..cut).next_back() {
                if e > cut {
                    self.counts.insert(s, (cut, c));
                    self.counts.insert(cut, (e, c));
                }
            }
        }
        let existing: Vec<(u64, u64, u32)> = self
            .counts
            .range(start..end)
            .map(|(&s, &(e, c))| (s, e, c))
            .collect();
        let mut out = Vec::new();
        let mut cursor = start;
        for (s, e, c) in existing {
            if s > cursor {
                self.counts.insert(cursor, (s, 1));
                out.push((cursor, s, 1));
            }
            self.counts.insert(s, (e, c + 1));
            out.push((s, e, c + 1));
            cursor = e;
        }
        if cursor < end {
            self.counts.insert(cursor, (end, 1));
            out.push((cursor, end, 1));
        }
        out
    }
}

/// Tracks acknowledged stream bytes and how often each byte was queued for
/// retransmission.
#[derive(Clone, Debug, Default)]
pub struct RetransmitLedger {
    streams: BTreeMap<u64, StreamLedger>,
    total_bytes: u64,
    max_count: u32,
}

impl RetransmitLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn on_acked(&mut self, range: &StreamRange) {
        if range.len == 0 {
            return;
        }
        self.streams
            .entry(range.stream_id)
            .or_default()
            .acked
            .insert_range(range.offset, range.end() - 1);
    }

    pub fn is_acked(&self, stream_id: u64, offset: u64, len: u64) -> bool {
        len > 0
            && self
                .streams
                .get(&stream_id)
                .is_some_and(|s| s.acked.uncovered(offset, offset + len - 1).is_empty())
    }

    /// Bytes of the lost `ranges` still unacknowledged, split by how many
    /// times they have now been queued for retransmission.
    pub fn mark_retransmission(&mut self, ranges: &[StreamRange]) -> Vec<RetransmitSegment> {
        let mut out = Vec::new();
        for r in ranges {
            if r.len == 0 {
                continue;
            }
            let ledger = self.streams.entry(r.stream_id).or_default();
            for (lo, hi) in ledger.acked.uncovered(r.offset, r.end() - 1) {
                for (s, e, c) in ledger.bump(lo, hi + 1) {
                    self.total_bytes += e - s;
                    self.max_count = self.max_count.max(c);
                    out.push(RetransmitSegment {
                        stream_id: r.stream_id,
                        offset: s,
                        len: e - s,
                        nth_time: c,
                    });
                }
            }
        }
        out
    }

    /// Total bytes queued for retransmission so far.
    pub fn total_bytes(&self) -> u64 {
        self.total_bytes
    }

    /// Largest number of times any single byte was queued.
    pub fn max_count(&self) -> u32 {
        self.max_count
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn range(offset: u64, len: u64) -> StreamRange {
        StreamRange {
            stream_id: 0,
            offset,
            len,
            fin: false,
        }
    }

    #[test]
    fn lost_range_resent_whole() {
        let mut l = RetransmitLedger::new();
        let segs = l.mark_retransmission(&[range(1000, 1200)]);
        assert_eq!(
            segs,
            vec![RetransmitSegment {
                stream_id: 0,
                offset: 1000,
                len: 1200,
                nth_time: 1
            }]
        );
    }

    #[test]
    fn acked_bytes_not_resent() {
        let mut l = RetransmitLedger::new();
        l.on_acked(&range(1000, 1200));
        assert!(l.mark_retransmission(&[range(1000, 1200)]).is_empty());
        assert_eq!(l.total_bytes(), 0);
    }

    #[test]
    fn counts_accumulate_per_byte() {
        let mut l = RetransmitLedger::new();
        l.mark_retransmission(&[range(0, 100)]);
        let segs = l.mark_retransmission(&[range(50, 100)]);
        assert_eq!(
            segs.iter()
                .map(|s| (s.offset, s.len, s.nth_time))
                .collect::<Vec<_>>(),
            vec![(50, 50, 2), (100, 50, 1)]
        );
        assert_eq!(l.max_count(), 2);
        assert_eq!(l.total_bytes(), 200);
    }
}
