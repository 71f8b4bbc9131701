use crate::acktrack::RangeSet;
use crate::SimTime;

/// Sending half of the bulk stream.
#[derive(Clone, Debug)]
pub struct SendStream {
    pub id: u64,
    total: u64,
    /// Next never-sent offset.
    next_offset: u64,
    /// Byte ranges (inclusive) awaiting retransmission.
    retransmit: RangeSet,
    acked: RangeSet,
    fin_acked: bool,
    /// A fin-only frame must be repeated.
    fin_pending: bool,
    /// Peer limits.
    max_data: u64,
    max_stream_data: u64,
}

/// A chunk the scheduler may place in a STREAM frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Chunk {
    pub offset: u64,
    pub len: u64,
    pub fin: bool,
    pub retransmission: bool,
}

impl SendStream {
    pub fn new(id: u64, total: u64, max_data: u64, max_stream_data: u64) -> Self {
        SendStream {
            id,
            total,
            next_offset: 0,
            retransmit: RangeSet::new(),
            acked: RangeSet::new(),
            fin_acked: false,
            fin_pending: total == 0,
            max_data,
            max_stream_data,
        }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn next_offset(&self) -> u64 {
        self.next_offset
    }

    fn credit(&self) -> u64 {
        self.max_data
            .min(self.max_stream_data)
            .saturating_sub(self.next_offset)
    }

    pub fn flow_blocked(&self) -> bool {
        self.next_offset < self.total && self.credit() == 0
    }

    pub fn has_data(&self) -> bool {
        !self.retransmit.is_empty()
            || self.fin_pending
            || (self.next_offset < self.total && self.credit() > 0)
    }

    pub fn has_retransmit(&self) -> bool {
        !self.retransmit.is_empty() || self.fin_pending
    }

    pub fn update_max_data(&mut self, limit: u64) {
        self.max_data = self.max_data.max(limit);
    }

    pub fn update_max_stream_data(&mut self, limit: u64) {
        self.max_stream_data = self.max_stream_data.max(limit);
    }

    /// Takes the next chunk of at most `max_len` bytes: queued
    /// retransmissions first, then new data within flow control.
    pub fn next_chunk(&mut self, max_len: impl Fn(u64) -> Option<u64>) -> Option<Chunk> {
        let first = self.retransmit.iter().next();
        if let Some((lo, hi)) = first {
            let room = max_len(lo)?;
            let len = (hi - lo + 1).min(room);
            self.retransmit.remove_range(lo, lo + len - 1);
            let fin = lo + len == self.total;
            if fin {
                self.fin_pending = false;
            }
            return Some(Chunk {
                offset: lo,
                len,
                fin,
                retransmission: true,
            });
        }
        if self.fin_pending && self.next_offset >= self.total {
            self.fin_pending = false;
            return Some(Chunk {
                offset: self.total,
                len: 0,
                fin: true,
                retransmission: true,
            });
        }
        let credit = self.credit().min(self.total - self.next_offset);
        if credit == 0 {
            return None;
        }
        let len = credit.min(max_len(self.next_offset)?);
        let offset = self.next_offset;
        self.next_offset += len;
        Some(Chunk {
            offset,
            len,
            fin: self.next_offset == self.total,
            retransmission: false,
        })
    }

    /// Queues `[offset, offset+len)` to be sent again; a lost fin with no
    /// bytes left to carry it is resent alone.
    pub fn queue_retransmit(&mut self, offset: u64, len: u64) {
        if len > 0 {
            self.retransmit.insert_range(offset, offset + len - 1);
        }
    }

    pub fn on_fin_lost(&mut self) {
        if !self.fin_acked && !self.retransmit.iter().any(|(_, hi)| hi + 1 == self.total) {
            self.fin_pending = true;
        }
    }

    pub fn on_acked(&mut self, offset: u64, len: u64, fin: bool) {
        if len > 0 {
            self.acked.insert_range(offset, offset + len - 1);
        }
        if fin {
            self.fin_acked = true;
        }
    }

    /// Every byte and the fin acknowledged.
    pub fn is_complete(&self) -> bool {
        self.fin_acked && (self.total == 0 || self.acked.iter().next() == Some((0, self.total - 1)))
    }
}

/// Receiving half of the bulk stream with flow-control window management.
#[derive(Clone, Debug)]
pub struct RecvStream {
    pub id: u64,
    received: RangeSet,
    /// End of the contiguous prefix, read by the application immediately.
    consumed: u64,
    fin_offset: Option<u64>,
    delivered: u64,
    window: u64,
    max_window: u64,
    limit: u64,
    last_update: Option<SimTime>,
}

impl RecvStream {
    pub fn new(id: u64, window: u64, max_window: u64) -> Self {
        RecvStream {
            id,
            received: RangeSet::new(),
            consumed: 0,
            fin_offset: None,
            delivered: 0,
            window,
            max_window: max_window.max(window),
            limit: window,
            last_update: None,
        }
    }

    /// Records a STREAM frame and returns how many bytes were new.
    pub fn on_data(&mut self, offset: u64, len: u64, fin: bool) -> u64 {
        if fin {
            self.fin_offset = Some(offset + len);
        }
        if len == 0 {
            return 0;
        }
        let new: u64 = self
            .received
            .uncovered(offset, offset + len - 1)
            .iter()
            .map(|(lo, hi)| hi - lo + 1)
            .sum();
        self.received.insert_range(offset, offset + len - 1);
        if let Some((0, hi)) = self.received.iter().next() {
            self.consumed = hi + 1;
        }
        self.delivered += new;
        new
    }

    pub fn consumed(&self) -> u64 {
        self.consumed
    }

    /// Stream bytes received, each counted once.
    pub fn delivered(&self) -> u64 {
        self.delivered
    }

    pub fn is_complete(&self) -> bool {
        self.fin_offset == Some(self.consumed)
    }

    pub fn window(&self) -> u64 {
        self.window
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    /// New limit to advertise once half the window has been consumed. The
    /// window doubles (up to the maximum) when updates come less than `rtt` apart.
    pub fn poll_window_update(&mut self, now: SimTime, rtt: std::time::Duration) -> Option<u64> {
        if self.is_complete() || self.limit.saturating_sub(self.consumed) > self.window / 2 {
            return None;
        }
        if self
            .last_update
            .is_some_and(|t| now.saturating_duration_since(t) < rtt)
        {
            self.window = (self.window * 2).min(self.max_window);
        }
        self.last_update = Some(now);
        self.limit = self.consumed + self.window;
        Some(self.limit)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::time::Duration;

    fn budget(n: u64) -> impl Fn(u64) -> Option<u64> {
        move |_| Some(n)
    }

    #[test]
    fn retransmissions_precede_new_data() {
        let mut s = SendStream::new(0, 10_000, 1 << 20, 1 << 20);
        let a = s.next_chunk(budget(1000)).unwrap();
        let b = s.next_chunk(budget(1000)).unwrap();
        assert_eq!((a.offset, b.offset), (0, 1000));
        s.queue_retransmit(0, 1000);
        let c = s.next_chunk(budget(600)).unwrap();
        assert_eq!((c.offset, c.len, c.retransmission), (0, 600, true));
        let d = s.next_chunk(budget(1000)).unwrap();
        assert_eq!((d.offset, d.len, d.retransmission), (600, 400, true));
        let e = s.next_chunk(budget(1000)).unwrap();
        assert_eq!((e.offset, e.retransmission), (2000, false));
    }

    #[test]
    fn flow_control_blocks() {
        let mut s = SendStream::new(0, 10_000, 1500, 1 << 20);
        s.next_chunk(budget(1000)).unwrap();
        assert_eq!(s.next_chunk(budget(1000)).unwrap().len, 500);
        assert!(s.next_chunk(budget(1000)).is_none());
        assert!(s.flow_blocked());
        s.update_max_data(3000);
        assert!(s.has_data());
    }

    #[test]
    fn fin_on_last_chunk_and_completion() {
        let mut s = SendStream::new(0, 1500, 1 << 20, 1 << 20);
        s.next_chunk(budget(1000)).unwrap();
        let last = s.next_chunk(budget(1000)).unwrap();
        assert!(last.fin);
        s.on_acked(0, 1000, false);
        assert!(!s.is_complete());
        s.on_acked(1000, 500, true);
        assert!(s.is_complete());
    }

    #[test]
    fn empty_stream_sends_bare_fin() {
        let mut s = SendStream::new(0, 0, 1 << 20, 1 << 20);
        let c = s.next_chunk(budget(1000)).unwrap();
        assert_eq!((c.len, c.fin), (0, true));
        assert!(s.next_chunk(budget(1000)).is_none());
        s.on_acked(0, 0, true);
        assert!(s.is_complete());
    }

    #[test]
    fn receive_counts_bytes_once() {
        let mut r = RecvStream::new(0, 1000, 4000);
        assert_eq!(r.on_data(100, 100, false), 100);
        assert_eq!(r.on_data(150, 100, false), 50);
        assert_eq!(r.consumed(), 0);
        assert_eq!(r.on_data(0, 100, false), 100);
        assert_eq!(r.consumed(), 250);
        assert_eq!(r.delivered(), 250);
        r.on_data(250, 0, true);
        assert!(r.is_complete());
    }

    #[test]
    fn window_update_and_autotune() {
        let mut r = RecvStream::new(0, 1000, 4000);
        let rtt = Duration::from_millis(100);
        r.on_data(0, 400, false);
        assert_eq!(r.poll_window_update(SimTime::from_millis(1), rtt), None);
        r.on_data(400, 200, false);
        assert_eq!(
            r.poll_window_update(SimTime::from_millis(2), rtt),
            Some(1600)
        );
        r.on_data(600, 600, false);
        // Second update within an RTT doubles the window.
        assert_eq!(
            r.poll_window_update(SimTime::from_millis(50), rtt),
            Some(1200 + 2000)
        );
        assert_eq!(r.window(), 2000);
    }
}
