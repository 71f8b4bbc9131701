use std::collections::BTreeMap;
use std::time::Duration;

use super::{RttEstimator, SendError, StreamRange};
use crate::acktrack::DEFAULT_MAX_ACK_DELAY;
use crate::wire::Frame;
use crate::{Design, SimTime};

/// Same-path packets acknowledged after a packet before it is declared lost.
pub const PACKET_THRESHOLD: u64 = 3;
/// Numerator and denominator of the RACK time threshold (9/8 RTT).
const TIME_THRESHOLD: (u32, u32) = (9, 8);
const GRANULARITY: Duration = Duration::from_millis(1);

/// Why a packet was declared lost.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LossTrigger {
    Threshold,
    Time,
    Pto,
}

impl LossTrigger {
    pub fn as_str(self) -> &'static str {
        match self {
            LossTrigger::Threshold => "threshold",
            LossTrigger::Time => "time",
            LossTrigger::Pto => "pto",
        }
    }
}

/// Bookkeeping for one sent packet.
#[derive(Clone, Debug, PartialEq)]
pub struct SentPacketRecord {
    pub pn: u64,
    pub space: u64,
    pub path_id: u64,
    /// Position of the packet in its path's send order.
    pub path_seq: u64,
    pub sent_time: SimTime,
    /// UDP payload bytes.
    pub bytes: u64,
    pub ack_eliciting: bool,
    /// Counts toward bytes in flight.
    pub in_flight: bool,
    pub stream_ranges: Vec<StreamRange>,
    /// Ranges advertised by the ACK frames carried, per acknowledged space.
    pub acks: Vec<(u64, Vec<(u64, u64)>)>,
    /// Control frames that must be repeated if the packet is lost.
    pub control: Vec<Frame>,
    /// Path delivery counters at send time, for delivery-rate samples.
    pub delivered: u64,
    pub delivered_time: SimTime,
}

impl SentPacketRecord {
    pub fn new(pn: u64, space: u64, path_id: u64, sent_time: SimTime, bytes: u64) -> Self {
        SentPacketRecord {
            pn,
            space,
            path_id,
            path_seq: 0,
            sent_time,
            bytes,
            ack_eliciting: false,
            in_flight: false,
            stream_ranges: Vec::new(),
            acks: Vec::new(),
            control: Vec::new(),
            delivered: 0,
            delivered_time: sent_time,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LostPacket {
    pub record: SentPacketRecord,
    pub trigger: LossTrigger,
}

/// Acknowledgment feedback for one path, as consumed by congestion control.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathAck {
    pub path: u64,
    pub acked_bytes: u64,
    /// Send time of the most recently sent packet acknowledged.
    pub newest_sent_time: SimTime,
    /// Path delivered counter when that packet was sent.
    pub prior_delivered: u64,
    /// Path delivered counter after this acknowledgment.
    pub delivered: u64,
    /// Delivery rate in bytes per second.
    pub delivery_rate: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RttSample {
    pub path: u64,
    pub latest: Duration,
    pub ack_delay: Duration,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct AckOutcome {
    pub newly_acked: Vec<SentPacketRecord>,
    pub rtt_sample: Option<RttSample>,
    pub lost: Vec<LostPacket>,
    /// `(pn, path)` of packets acknowledged after having been declared lost.
    pub spurious: Vec<(u64, u64)>,
    pub paths: Vec<PathAck>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TimeoutOutcome {
    pub lost: Vec<LostPacket>,
    /// Paths whose probe timeout fired; each may send one probe packet.
    pub probes: Vec<u64>,
}

/// Loss recovery state of a single path.
#[derive(Clone, Debug, Default)]
pub struct PathRecovery {
    pub rtt: RttEstimator,
    next_seq: u64,
    largest_acked_seq: Option<u64>,
    bytes_in_flight: u64,
    ack_eliciting_in_flight: u64,
    last_ack_eliciting_sent: Option<SimTime>,
    pto_count: u32,
    delivered: u64,
    delivered_time: SimTime,
}

impl PathRecovery {
    pub fn bytes_in_flight(&self) -> u64 {
        self.bytes_in_flight
    }

    pub fn pto_count(&self) -> u32 {
        self.pto_count
    }

    pub fn delivered(&self) -> u64 {
        self.delivered
    }

    fn time_threshold(&self) -> Duration {
        let base = self.rtt.smoothed().max(self.rtt.latest());
        (base * TIME_THRESHOLD.0 / TIME_THRESHOLD.1).max(GRANULARITY)
    }
}

/// Sender-side state of one packet number space.
#[derive(Clone, Debug, Default)]
pub struct NumberSpace {
    next_pn: u64,
    sent: BTreeMap<u64, SentPacketRecord>,
    largest_acked: Option<u64>,
    // pn -> path of packets declared lost
    declared_lost: BTreeMap<u64, u64>,
    loss_time: Option<SimTime>,
}

impl NumberSpace {
    pub fn next_pn(&self) -> u64 {
        self.next_pn
    }

    pub fn largest_acked(&self) -> Option<u64> {
        self.largest_acked
    }

    pub fn in_flight(&self) -> impl Iterator<Item = &SentPacketRecord> {
        self.sent.values()
    }
}

/// Packet numbering, RTT estimation and loss detection for a connection.
#[derive(Clone, Debug)]
pub struct SentTracker {
    design: Design,
    max_ack_delay: Duration,
    spaces: Vec<NumberSpace>,
    paths: BTreeMap<u64, PathRecovery>,
}

impl SentTracker {
    pub fn new(design: Design) -> Self {
        SentTracker {
            design,
            max_ack_delay: DEFAULT_MAX_ACK_DELAY,
            spaces: Vec::new(),
            paths: BTreeMap::new(),
        }
    }

    pub fn design(&self) -> Design {
        self.design
    }

    pub fn set_design(&mut self, design: Design) {
        self.design = design;
    }

    /// Peer's maximum ACK delay, used when computing probe timeouts.
    pub fn set_max_ack_delay(&mut self, d: Duration) {
        self.max_ack_delay = d;
    }

    pub fn add_path(&mut self, path_id: u64) {
        self.paths.entry(path_id).or_default();
        let space = self.design.space_for(path_id) as usize;
        if self.spaces.len() <= space {
            self.spaces.resize_with(space + 1, NumberSpace::default);
        }
    }

    pub fn has_path(&self, path_id: u64) -> bool {
        self.paths.contains_key(&path_id)
    }

    pub fn path(&self, path_id: u64) -> Option<&PathRecovery> {
        self.paths.get(&path_id)
    }

    pub fn path_mut(&mut self, path_id: u64) -> Option<&mut PathRecovery> {
        self.paths.get_mut(&path_id)
    }

    pub fn space(&self, id: u64) -> Option<&NumberSpace> {
        self.spaces.get(id as usize)
    }

    /// Allocates the next packet number for a packet sent on `path_id`.
    pub fn assign_pn(&mut self, path_id: u64) -> Result<(u64, u64), SendError> {
        if !self.paths.contains_key(&path_id) {
            return Err(SendError::UnknownPath(path_id));
        }
        let space = self.design.space_for(path_id);
        let s = &mut self.spaces[space as usize];
        let pn = s.next_pn;
        s.next_pn += 1;
        Ok((space, pn))
    }

    /// Registers a packet whose number came from [`assign_pn`](Self::assign_pn).
    /// Fills in the path sequence and delivery fields.
    pub fn on_packet_sent(&mut self, mut rec: SentPacketRecord) {
        let path = self
            .paths
            .get_mut(&rec.path_id)
            .expect("packet sent on unknown path");
        let space = &mut self.spaces[rec.space as usize];
        assert!(
            rec.pn < space.next_pn,
            "packet number {} was never assigned",
            rec.pn
        );
        assert!(
            space
                .sent
                .keys()
                .next_back()
                .is_none_or(|&last| last < rec.pn),
            "packet number {} reused or out of order",
            rec.pn
        );
        rec.path_seq = path.next_seq;
        path.next_seq += 1;
        if path.bytes_in_flight == 0 {
            path.delivered_time = rec.sent_time;
        }
        rec.delivered = path.delivered;
        rec.delivered_time = path.delivered_time;
        if rec.in_flight {
            path.bytes_in_flight += rec.bytes;
        }
        if rec.ack_eliciting {
            path.ack_eliciting_in_flight += 1;
            path.last_ack_eliciting_sent = Some(rec.sent_time);
        }
        space.sent.insert(rec.pn, rec);
    }

    fn remove_from_flight(path: &mut PathRecovery, rec: &SentPacketRecord) {
        if rec.in_flight {
            path.bytes_in_flight -= rec.bytes;
        }
        if rec.ack_eliciting {
            path.ack_eliciting_in_flight -= 1;
        }
    }

    /// Processes the ranges (descending) of an ACK or ACK_MP frame for `space`.
    pub fn on_ack_received(
        &mut self,
        space_id: u64,
        ranges: &[(u64, u64)],
        ack_delay: Duration,
        now: SimTime,
    ) -> Result<AckOutcome, SendError> {
        let space = self
            .spaces
            .get_mut(space_id as usize)
            .ok_or(SendError::UnknownSpace(space_id))?;
        let Some(&(_, largest)) = ranges.first() else {
            return Ok(AckOutcome::default());
        };
        if largest >= space.next_pn {
            return Err(SendError::AckOfUnsent {
                space: space_id,
                pn: largest,
            });
        }
        let mut out = AckOutcome::default();
        for &(lo, hi) in ranges {
            let acked: Vec<u64> = space.sent.range(lo..=hi).map(|(&pn, _)| pn).collect();
            for pn in acked {
                out.newly_acked
                    .push(space.sent.remove(&pn).expect("listed above"));
            }
            let spurious: Vec<(u64, u64)> = space
                .declared_lost
                .range(lo..=hi)
                .map(|(&pn, &p)| (pn, p))
                .collect();
            for (pn, path) in spurious {
                space.declared_lost.remove(&pn);
                out.spurious.push((pn, path));
            }
        }
        out.newly_acked.sort_by_key(|r| r.pn);
        space.largest_acked = Some(space.largest_acked.map_or(largest, |l| l.max(largest)));

        if let Some(rec) = out.newly_acked.iter().find(|r| r.pn == largest) {
            if rec.ack_eliciting {
                let sample = now - rec.sent_time;
                let path = self
                    .paths
                    .get_mut(&rec.path_id)
                    .expect("record path exists");
                path.rtt.update(sample, ack_delay);
                out.rtt_sample = Some(RttSample {
                    path: rec.path_id,
                    latest: sample,
                    ack_delay,
                });
            }
        }

        for rec in &out.newly_acked {
            let path = self
                .paths
                .get_mut(&rec.path_id)
                .expect("record path exists");
            Self::remove_from_flight(path, rec);
            path.pto_count = 0;
            path.largest_acked_seq = Some(
                path.largest_acked_seq
                    .map_or(rec.path_seq, |s| s.max(rec.path_seq)),
            );
            path.delivered += rec.bytes;
            let entry = match out.paths.iter_mut().position(|p| p.path == rec.path_id) {
                Some(i) => &mut out.paths[i],
                None => {
                    out.paths.push(PathAck {
                        path: rec.path_id,
                        acked_bytes: 0,
                        newest_sent_time: rec.sent_time,
                        prior_delivered: rec.delivered,
                        delivered: 0,
                        delivery_rate: None,
                    });
                    out.paths.last_mut().expect("just pushed")
                }
            };
            entry.acked_bytes += rec.bytes;
            if rec.sent_time >= entry.newest_sent_time {
                entry.newest_sent_time = rec.sent_time;
                entry.prior_delivered = rec.delivered;
                let interval = now
                    .saturating_duration_since(rec.delivered_time)
                    .as_secs_f64();
                entry.delivery_rate =
                    (interval > 0.0).then(|| (path.delivered - rec.delivered) as f64 / interval);
            }
        }
        for p in &mut out.paths {
            let path = &mut self.paths.get_mut(&p.path).expect("path exists");
            p.delivered = path.delivered;
            path.delivered_time = now;
        }
        out.lost = self.detect_losses(space_id, now);
        Ok(out)
    }

    /// Declares lost every in-flight packet of `space_id` that a later
    /// same-path acknowledgment condemns, by packet count or elapsed time.
    pub fn detect_losses(&mut self, space_id: u64, now: SimTime) -> Vec<LostPacket> {
        let Some(space) = self.spaces.get_mut(space_id as usize) else {
            return Vec::new();
        };
        space.loss_time = None;
        let Some(largest) = space.largest_acked else {
            return Vec::new();
        };
        let mut lost = Vec::new();
        let mut loss_time: Option<SimTime> = None;
        for (&pn, rec) in space.sent.range(..largest) {
            let path = &self.paths[&rec.path_id];
            let Some(acked_seq) = path.largest_acked_seq.filter(|&s| s > rec.path_seq) else {
                continue;
            };
            let deadline = rec.sent_time + path.time_threshold();
            if acked_seq - rec.path_seq >= PACKET_THRESHOLD {
                lost.push((pn, LossTrigger::Threshold));
            } else if deadline <= now {
                lost.push((pn, LossTrigger::Time));
            } else {
                loss_time = Some(loss_time.map_or(deadline, |t| t.min(deadline)));
            }
        }
        space.loss_time = loss_time;
        let mut out = Vec::with_capacity(lost.len());
        for (pn, trigger) in lost {
            let record = space.sent.remove(&pn).expect("listed above");
            space.declared_lost.insert(pn, record.path_id);
            let path = self
                .paths
                .get_mut(&record.path_id)
                .expect("record path exists");
            Self::remove_from_flight(path, &record);
            out.push(LostPacket { record, trigger });
        }
        out
    }

    fn pto_duration(&self, path: &PathRecovery) -> Duration {
        let rtt = &path.rtt;
        let base = (rtt.smoothed() * 3)
            .max(rtt.smoothed() + (rtt.var() * 4).max(GRANULARITY) + self.max_ack_delay);
        base * 2u32.saturating_pow(path.pto_count.min(16))
    }

    /// Probe timeout deadline of `path_id`, if it has ack-eliciting data in flight.
    pub fn pto_deadline(&self, path_id: u64) -> Option<SimTime> {
        let path = self.paths.get(&path_id)?;
        if path.ack_eliciting_in_flight == 0 {
            return None;
        }
        Some(path.last_ack_eliciting_sent? + self.pto_duration(path))
    }

    /// Earliest loss-time or probe-timeout deadline.
    pub fn next_timeout(&self) -> Option<SimTime> {
        let loss = self.spaces.iter().filter_map(|s| s.loss_time);
        let pto = self.paths.keys().filter_map(|&p| self.pto_deadline(p));
        loss.chain(pto).min()
    }

    pub fn on_timeout(&mut self, now: SimTime) -> TimeoutOutcome {
        let mut out = TimeoutOutcome::default();
        for id in 0..self.spaces.len() {
            if self.spaces[id].loss_time.is_some_and(|t| t <= now) {
                out.lost.extend(self.detect_losses(id as u64, now));
            }
        }
        let expired: Vec<u64> = self
            .paths
            .keys()
            .copied()
            .filter(|&p| self.pto_deadline(p).is_some_and(|t| t <= now))
            .collect();
        for path_id in expired {
            let space_id = self.design.space_for(path_id);
            let space = &mut self.spaces[space_id as usize];
            let oldest = space
                .sent
                .values()
                .find(|r| r.path_id == path_id && r.ack_eliciting)
                .map(|r| r.pn);
            let path = self.paths.get_mut(&path_id).expect("listed above");
            path.pto_count += 1;
            if let Some(pn) = oldest {
                let record = space.sent.remove(&pn).expect("found above");
                space.declared_lost.insert(pn, path_id);
                Self::remove_from_flight(path, &record);
                out.lost.push(LostPacket {
                    record,
                    trigger: LossTrigger::Pto,
                });
            }
            // The probe restarts the timer; until it is sent, measure from now.
            path.last_ack_eliciting_sent = Some(now);
            out.probes.push(path_id);
        }
        out
    }

    /// Total bytes in flight over all paths.
    pub fn bytes_in_flight(&self) -> u64 {
        self.paths.values().map(|p| p.bytes_in_flight).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ms(v: u64) -> SimTime {
        SimTime::from_millis(v)
    }

    fn send(t: &mut SentTracker, path: u64, at: SimTime) -> (u64, u64) {
        let (space, pn) = t.assign_pn(path).unwrap();
        let mut rec = SentPacketRecord::new(pn, space, path, at, 1000);
        rec.ack_eliciting = true;
        rec.in_flight = true;
        t.on_packet_sent(rec);
        (space, pn)
    }

    fn two_paths(design: Design) -> SentTracker {
        let mut t = SentTracker::new(design);
        t.add_path(0);
        t.add_path(1);
        t
    }

    #[test]
    fn round_robin_numbering() {
        let mut t = two_paths(Design::Spns);
        let got: Vec<_> = (0..6).map(|i| send(&mut t, i % 2, ms(i))).collect();
        assert_eq!(got, vec![(0, 0), (0, 1), (0, 2), (0, 3), (0, 4), (0, 5)]);

        let mut t = two_paths(Design::Mpns);
        let got: Vec<_> = (0..6).map(|i| send(&mut t, i % 2, ms(i))).collect();
        assert_eq!(got, vec![(0, 0), (1, 0), (0, 1), (1, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn unknown_path_rejected() {
        let mut t = SentTracker::new(Design::Mpns);
        assert_eq!(t.assign_pn(2), Err(SendError::UnknownPath(2)));
    }

    #[test]
    fn rtt_sample_goes_to_sending_path() {
        let mut t = two_paths(Design::Spns);
        for i in 0..6 {
            send(&mut t, if i % 2 == 0 { 0 } else { 1 }, ms(i));
        }
        let out = t
            .on_ack_received(0, &[(5, 5)], Duration::ZERO, ms(50))
            .unwrap();
        let sample = out.rtt_sample.unwrap();
        assert_eq!(sample.path, 1);
        assert_eq!(sample.latest, Duration::from_millis(45));
        assert!(t.path(1).unwrap().rtt.has_sample());
        assert!(!t.path(0).unwrap().rtt.has_sample());
    }

    #[test]
    fn repeated_ack_is_inert() {
        let mut t = two_paths(Design::Mpns);
        send(&mut t, 0, ms(0));
        t.on_ack_received(0, &[(0, 0)], Duration::ZERO, ms(10))
            .unwrap();
        let out = t
            .on_ack_received(0, &[(0, 0)], Duration::ZERO, ms(20))
            .unwrap();
        assert!(out.newly_acked.is_empty());
        assert!(out.rtt_sample.is_none());
    }

    #[test]
    fn ack_of_unsent_is_error() {
        let mut t = two_paths(Design::Mpns);
        send(&mut t, 0, ms(0));
        assert_eq!(
            t.on_ack_received(0, &[(3, 3)], Duration::ZERO, ms(1)),
            Err(SendError::AckOfUnsent { space: 0, pn: 3 })
        );
    }

    #[test]
    fn packet_threshold_loss() {
        let mut t = two_paths(Design::Mpns);
        for i in 0..4 {
            send(&mut t, 0, ms(i));
        }
        let out = t
            .on_ack_received(0, &[(1, 3)], Duration::ZERO, ms(10))
            .unwrap();
        assert_eq!(out.lost.len(), 1);
        assert_eq!(out.lost[0].record.pn, 0);
        assert_eq!(out.lost[0].trigger, LossTrigger::Threshold);
    }

    #[test]
    fn recent_packet_not_yet_lost() {
        let mut t = two_paths(Design::Mpns);
        send(&mut t, 0, ms(0));
        send(&mut t, 0, ms(1));
        let out = t
            .on_ack_received(0, &[(1, 1)], Duration::ZERO, ms(10))
            .unwrap();
        assert!(out.lost.is_empty());
        assert_eq!(t.space(0).unwrap().in_flight().count(), 1);
        // Time threshold is 9/8 of the 9 ms sample.
        let deadline = t.next_timeout().unwrap();
        assert_eq!(deadline, ms(0) + Duration::from_micros(10_125));
        let out = t.on_timeout(deadline);
        assert_eq!(out.lost.len(), 1);
        assert_eq!(out.lost[0].trigger, LossTrigger::Time);
    }

    #[test]
    fn single_space_losses_are_per_path() {
        let mut t = two_paths(Design::Spns);
        for i in 0..8 {
            send(&mut t, i % 2, ms(i));
        }
        // pn 0 on path 0 unacked; 1,3,5,7 on path 1 acked.
        let out = t
            .on_ack_received(0, &[(7, 7), (5, 5), (3, 3), (1, 1)], Duration::ZERO, ms(10))
            .unwrap();
        assert!(out.lost.is_empty());
    }

    #[test]
    fn spurious_loss_detected() {
        let mut t = two_paths(Design::Mpns);
        for i in 0..4 {
            send(&mut t, 0, ms(i));
        }
        t.on_ack_received(0, &[(1, 3)], Duration::ZERO, ms(10))
            .unwrap();
        let out = t
            .on_ack_received(0, &[(0, 3)], Duration::ZERO, ms(11))
            .unwrap();
        assert_eq!(out.spurious, vec![(0, 0)]);
        assert!(out.newly_acked.is_empty());
    }

    #[test]
    fn pto_declares_oldest_and_backs_off() {
        let mut t = two_paths(Design::Mpns);
        send(&mut t, 0, ms(0));
        send(&mut t, 0, ms(1));
        let first = t.pto_deadline(0).unwrap();
        let out = t.on_timeout(first);
        assert_eq!(out.probes, vec![0]);
        assert_eq!(out.lost[0].record.pn, 0);
        assert_eq!(out.lost[0].trigger, LossTrigger::Pto);
        assert_eq!(t.path(0).unwrap().pto_count(), 1);
        let second = t.pto_deadline(0).unwrap();
        assert_eq!(second - first, (first - ms(1)) * 2);
    }

    #[test]
    fn delivery_rate_sample() {
        let mut t = two_paths(Design::Mpns);
        send(&mut t, 0, ms(0));
        send(&mut t, 0, ms(0));
        let out = t
            .on_ack_received(0, &[(0, 1)], Duration::ZERO, ms(10))
            .unwrap();
        let p = out.paths[0];
        assert_eq!(p.acked_bytes, 2000);
        assert_eq!(p.delivered, 2000);
        assert!((p.delivery_rate.unwrap() - 200_000.0).abs() < 1e-6);
    }
}
