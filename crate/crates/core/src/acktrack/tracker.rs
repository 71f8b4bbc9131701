use std::time::Duration;

use super::{select_ranges, AckPolicy, RangeSet, REORDER_PACKET_THRESHOLD};
use crate::wire::{AckFrame, Frame, MAX_FRAME_BYTES};
use crate::{Design, SimTime};

/// Room left for other frames when a single acknowledgment frame is built.
const MAX_ACK_FRAME_BYTES: usize = MAX_FRAME_BYTES / 2;

/// What the receiver should do after a packet arrives.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AckDecision {
    SendNow,
    Schedule(SimTime),
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ReceiveOutcome {
    pub decision: AckDecision,
    pub duplicate: bool,
    /// The packet arrived out of order or opened a gap.
    pub reordered: bool,
}

/// Receive state of one packet number space.
#[derive(Clone, Debug, Default)]
pub struct RecvSpace {
    /// Received numbers still advertised.
    ranges: RangeSet,
    /// Every number ever received, pruned or not.
    seen: RangeSet,
    largest: Option<u64>,
    largest_rx_time: SimTime,
    largest_ack_eliciting: Option<u64>,
    /// Ack-eliciting packets received since this space was last acknowledged.
    pending: u64,
    deadline: Option<SimTime>,
    duplicates: u64,
}

impl RecvSpace {
    pub fn ranges(&self) -> &RangeSet {
        &self.ranges
    }

    pub fn largest(&self) -> Option<u64> {
        self.largest
    }

    pub fn largest_rx_time(&self) -> SimTime {
        self.largest_rx_time
    }

    pub fn duplicates(&self) -> u64 {
        self.duplicates
    }

    pub fn pending(&self) -> u64 {
        self.pending
    }

    pub fn seen(&self) -> &RangeSet {
        &self.seen
    }

    /// Drops `confirmed` ranges (carried in an ACK the peer acknowledged),
    /// always keeping the largest received packet number. Pruned numbers
    /// are remembered so a second copy is never re-added.
    pub fn prune_acknowledged(&mut self, confirmed: &[(u64, u64)]) {
        let Some(largest) = self.ranges.max() else {
            return;
        };
        for &(lo, hi) in confirmed {
            self.ranges.remove_range(lo, hi);
        }
        self.ranges.insert(largest);
    }
}

/// An acknowledgment frame ready to be sent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BuiltAck {
    pub path: u64,
    pub space: u64,
    pub frame: Frame,
    /// Ranges carried, descending.
    pub ranges: Vec<(u64, u64)>,
    pub at_limit: bool,
}

/// Receiver-side acknowledgment machinery for every packet number space of a
/// connection.
#[derive(Clone, Debug)]
pub struct AckTracker {
    design: Design,
    policy: AckPolicy,
    packet_threshold: u64,
    max_ack_delay: Duration,
    ignore_reorder: bool,
    last_ack_frequency_seq: Option<u64>,
    spaces: Vec<RecvSpace>,
    last_rx_path: u64,
    send_now: bool,
}

impl AckTracker {
    pub fn new(design: Design, policy: AckPolicy) -> Self {
        AckTracker {
            design,
            policy,
            packet_threshold: policy.packet_threshold.max(1),
            max_ack_delay: policy.max_ack_delay,
            ignore_reorder: false,
            last_ack_frequency_seq: None,
            spaces: Vec::new(),
            last_rx_path: 0,
            send_now: false,
        }
    }

    pub fn policy(&self) -> &AckPolicy {
        &self.policy
    }

    pub fn set_design(&mut self, design: Design) {
        self.design = design;
    }

    pub fn packet_threshold(&self) -> u64 {
        self.packet_threshold
    }

    pub fn ignores_reorder(&self) -> bool {
        self.ignore_reorder
    }

    pub fn space(&self, id: u64) -> Option<&RecvSpace> {
        self.spaces.get(id as usize)
    }

    pub fn spaces(&self) -> impl Iterator<Item = (u64, &RecvSpace)> {
        self.spaces.iter().enumerate().map(|(i, s)| (i as u64, s))
    }

    fn space_mut(&mut self, id: u64) -> &mut RecvSpace {
        let idx = id as usize;
        if self.spaces.len() <= idx {
            self.spaces.resize_with(idx + 1, RecvSpace::default);
        }
        &mut self.spaces[idx]
    }

    pub fn last_rx_path(&self) -> u64 {
        self.last_rx_path
    }

    /// Records packet `pn` of `space`, received on `path`, and decides when it
    /// must be acknowledged.
    pub fn on_packet_received(
        &mut self,
        space: u64,
        pn: u64,
        path: u64,
        ack_eliciting: bool,
        now: SimTime,
    ) -> ReceiveOutcome {
        self.last_rx_path = path;
        let threshold = self.packet_threshold;
        let max_ack_delay = self.max_ack_delay;
        let honour_reorder = !self.ignore_reorder;
        let s = self.space_mut(space);
        if !s.seen.insert(pn) {
            s.duplicates += 1;
            return ReceiveOutcome {
                decision: AckDecision::None,
                duplicate: true,
                reordered: false,
            };
        }
        s.ranges.insert(pn);
        if s.largest.is_none_or(|l| pn > l) {
            s.largest = Some(pn);
            s.largest_rx_time = now;
        }
        if !ack_eliciting {
            return ReceiveOutcome {
                decision: AckDecision::None,
                duplicate: false,
                reordered: false,
            };
        }
        let reordered = match s.largest_ack_eliciting {
            Some(l) if pn < l => true,
            Some(l) => {
                let (lo, _) = s.ranges.interval_of(pn).expect("just inserted");
                lo > l + 1
            }
            None => false,
        };
        if s.largest_ack_eliciting.is_none_or(|l| pn > l) {
            s.largest_ack_eliciting = Some(pn);
        }
        s.pending += 1;
        let decision = if (reordered && honour_reorder) || s.pending >= threshold {
            AckDecision::SendNow
        } else {
            let at = *s.deadline.get_or_insert(now + max_ack_delay);
            AckDecision::Schedule(at)
        };
        if decision == AckDecision::SendNow {
            self.send_now = true;
        }
        ReceiveOutcome {
            decision,
            duplicate: false,
            reordered,
        }
    }

    /// Acknowledges every space with pending packets at the next opportunity.
    pub fn request_immediate(&mut self) {
        if self.spaces.iter().any(|s| s.pending > 0) {
            self.send_now = true;
        }
    }

    /// Earliest delayed-ACK deadline across spaces.
    pub fn next_deadline(&self) -> Option<SimTime> {
        self.spaces.iter().filter_map(|s| s.deadline).min()
    }

    /// Whether acknowledgments are due at `now`.
    pub fn wants_send(&self, now: SimTime) -> bool {
        self.send_now || self.next_deadline().is_some_and(|d| d <= now)
    }

    /// Applies an ACK_FREQUENCY request from the peer. Stale sequence numbers are ignored.
    pub fn on_ack_frequency(
        &mut self,
        seq: u64,
        packet_threshold: u64,
        max_ack_delay: Duration,
        ignore_reorder: bool,
    ) {
        if !self.policy.ack_frequency || self.last_ack_frequency_seq.is_some_and(|s| seq <= s) {
            return;
        }
        self.last_ack_frequency_seq = Some(seq);
        self.packet_threshold = packet_threshold.max(1);
        self.max_ack_delay = max_ack_delay;
        self.ignore_reorder = ignore_reorder;
    }

    /// Builds the frames owed to the peer and resets pending state.
    ///
    /// `active_paths` lists the paths a copy may be sent on under duplicate
    /// dispatch; on-path dispatch uses the path of the latest reception.
    pub fn build_ack_frames(&mut self, now: SimTime, active_paths: &[u64]) -> Vec<BuiltAck> {
        self.send_now = false;
        let pquic = self.policy.pquic_mode;
        let mut frames = Vec::new();
        for (id, s) in self.spaces.iter_mut().enumerate() {
            let include = if pquic {
                !s.ranges.is_empty()
            } else {
                s.pending > 0
            };
            if !include {
                continue;
            }
            s.pending = 0;
            s.deadline = None;
            let mut ranges = select_ranges(&s.ranges, self.policy.ab_limit, self.policy.selection)
                .expect("space with pending packets has ranges");
            let delay = now.saturating_duration_since(s.largest_rx_time);
            let mut ack = AckFrame::from_ranges(&ranges, delay.as_micros() as u64)
                .expect("selected ranges are descending and disjoint");
            // Without a block limit the frame must still fit in a packet.
            while Frame::Ack(ack.clone()).encoded_len() > MAX_ACK_FRAME_BYTES {
                ranges.pop();
                ack = AckFrame::from_ranges(&ranges, delay.as_micros() as u64)
                    .expect("prefix stays valid");
            }
            let frame = match self.design {
                Design::Spns => Frame::Ack(ack),
                Design::Mpns => Frame::AckMp {
                    path_id: id as u64,
                    ack,
                },
            };
            frames.push((id as u64, frame, ranges));
        }
        let targets: Vec<u64> = match self.policy.dispatch {
            super::AckDispatch::OnPath => vec![self.last_rx_path],
            super::AckDispatch::Duplicate if active_paths.is_empty() => vec![self.last_rx_path],
            super::AckDispatch::Duplicate => active_paths.to_vec(),
        };
        let mut out = Vec::with_capacity(frames.len() * targets.len());
        for &path in &targets {
            for (space, frame, ranges) in &frames {
                out.push(BuiltAck {
                    path,
                    space: *space,
                    frame: frame.clone(),
                    at_limit: self.policy.ab_limit.is_saturated_by(ranges.len()),
                    ranges: ranges.clone(),
                });
            }
        }
        out
    }

    /// Forgets ranges the peer has confirmed seeing.
    pub fn prune_acknowledged(&mut self, space: u64, confirmed: &[(u64, u64)]) {
        if let Some(s) = self.spaces.get_mut(space as usize) {
            s.prune_acknowledged(confirmed);
        }
    }

    /// ACK_FREQUENCY parameters a data sender requests once it sees reordering.
    pub fn reorder_request(&self) -> (u64, Duration, bool) {
        (REORDER_PACKET_THRESHOLD, self.policy.max_ack_delay, true)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acktrack::{AbLimit, AckDispatch};

    fn ms(v: u64) -> SimTime {
        SimTime::from_millis(v)
    }

    #[test]
    fn threshold_two_schedules_then_sends() {
        let mut t = AckTracker::new(Design::Spns, AckPolicy::default());
        let first = t.on_packet_received(0, 0, 0, true, ms(10));
        assert_eq!(first.decision, AckDecision::Schedule(ms(35)));
        let second = t.on_packet_received(0, 1, 0, true, ms(11));
        assert_eq!(second.decision, AckDecision::SendNow);
        assert!(t.wants_send(ms(11)));
    }

    #[test]
    fn non_eliciting_is_not_acknowledged() {
        let mut t = AckTracker::new(Design::Spns, AckPolicy::default());
        let out = t.on_packet_received(0, 0, 0, false, ms(1));
        assert_eq!(out.decision, AckDecision::None);
        assert!(t.next_deadline().is_none());
        assert!(t.build_ack_frames(ms(2), &[0]).is_empty());
    }

    #[test]
    fn reordering_triggers_immediate_ack_until_ignored() {
        let mut t = AckTracker::new(Design::Spns, AckPolicy::default());
        t.on_packet_received(0, 0, 0, true, ms(1));
        t.build_ack_frames(ms(1), &[0]);
        let gap = t.on_packet_received(0, 2, 0, true, ms(2));
        assert!(gap.reordered);
        assert_eq!(gap.decision, AckDecision::SendNow);
        t.build_ack_frames(ms(2), &[0]);

        t.on_ack_frequency(0, 10, Duration::from_millis(25), true);
        let late = t.on_packet_received(0, 1, 0, true, ms(3));
        assert!(late.reordered);
        assert_eq!(late.decision, AckDecision::Schedule(ms(28)));
    }

    #[test]
    fn ack_frequency_ignored_when_disabled_or_stale() {
        let policy = AckPolicy {
            ack_frequency: false,
            ..AckPolicy::default()
        };
        let mut t = AckTracker::new(Design::Spns, policy);
        t.on_ack_frequency(0, 10, Duration::from_millis(5), true);
        assert_eq!(t.packet_threshold(), 2);

        let mut t = AckTracker::new(Design::Spns, AckPolicy::default());
        t.on_ack_frequency(3, 10, Duration::from_millis(5), true);
        t.on_ack_frequency(2, 4, Duration::from_millis(5), false);
        assert_eq!(t.packet_threshold(), 10);
        assert!(t.ignores_reorder());
    }

    #[test]
    fn figure_one_ack_on_path() {
        let policy = AckPolicy {
            packet_threshold: 1,
            ..AckPolicy::default()
        };
        let mut t = AckTracker::new(Design::Spns, policy);
        for (pn, path) in [(1, 1), (3, 1), (5, 1), (0, 0), (2, 0)] {
            t.on_packet_received(0, pn, path, true, ms(pn));
        }
        let acks = t.build_ack_frames(ms(6), &[0, 1]);
        assert_eq!(acks.len(), 1);
        assert_eq!(acks[0].path, 0);
        assert_eq!(acks[0].ranges, vec![(5, 5), (0, 3)]);
        // Delay measured from the reception of packet 5.
        match &acks[0].frame {
            Frame::Ack(ack) => assert_eq!(ack.ack_delay_micros(), 1000),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn duplicate_dispatch_copies_every_space() {
        let policy = AckPolicy {
            dispatch: AckDispatch::Duplicate,
            ..AckPolicy::default()
        };
        let mut t = AckTracker::new(Design::Mpns, policy);
        t.on_packet_received(0, 0, 0, true, ms(1));
        t.on_packet_received(1, 0, 1, true, ms(1));
        let acks = t.build_ack_frames(ms(2), &[0, 1]);
        assert_eq!(acks.len(), 4);
        for path in [0, 1] {
            let on_path: Vec<_> = acks.iter().filter(|a| a.path == path).collect();
            assert_eq!(on_path.len(), 2);
            for a in on_path {
                assert!(matches!(a.frame, Frame::AckMp { path_id, .. } if path_id == a.space));
            }
        }
    }

    #[test]
    fn pquic_mode_acks_all_spaces() {
        let policy = AckPolicy {
            pquic_mode: true,
            ack_frequency: false,
            ..AckPolicy::default()
        };
        let mut t = AckTracker::new(Design::Mpns, policy);
        t.on_packet_received(1, 0, 1, true, ms(1));
        t.build_ack_frames(ms(1), &[0, 1]);
        t.on_packet_received(0, 0, 0, true, ms(2));
        assert_eq!(
            t.on_packet_received(0, 1, 0, true, ms(3)).decision,
            AckDecision::SendNow
        );
        let acks = t.build_ack_frames(ms(3), &[0, 1]);
        let spaces: Vec<u64> = acks.iter().map(|a| a.space).collect();
        assert_eq!(spaces, vec![0, 1]);
    }

    #[test]
    fn at_limit_flag() {
        let policy = AckPolicy {
            ab_limit: AbLimit::Limited(4),
            packet_threshold: 100,
            ..AckPolicy::default()
        };
        let mut t = AckTracker::new(Design::Spns, policy);
        t.on_ack_frequency(0, 100, Duration::from_millis(25), true);
        for pn in (0..14).step_by(2) {
            t.on_packet_received(0, pn, 0, true, ms(pn));
        }
        let acks = t.build_ack_frames(ms(20), &[0]);
        assert_eq!(acks[0].ranges.len(), 5);
        assert!(acks[0].at_limit);
    }

    #[test]
    fn pruning_rules() {
        let mut s = RecvSpace::default();
        s.ranges.insert_range(0, 9);
        s.prune_acknowledged(&[(0, 9)]);
        assert_eq!(s.ranges.iter().collect::<Vec<_>>(), vec![(9, 9)]);

        let mut s = RecvSpace::default();
        s.ranges = [0, 1, 2, 3, 5].into_iter().collect();
        let before = s.ranges.clone();
        s.prune_acknowledged(&[]);
        assert_eq!(s.ranges, before);
        s.prune_acknowledged(&[(0, 3)]);
        assert_eq!(s.ranges.iter().collect::<Vec<_>>(), vec![(5, 5)]);
    }

    #[test]
    fn pruned_numbers_are_duplicates() {
        let mut t = AckTracker::new(Design::Spns, AckPolicy::default());
        for pn in 0..10 {
            t.on_packet_received(0, pn, 0, true, ms(pn));
        }
        t.prune_acknowledged(0, &[(0, 9)]);
        assert!(t.on_packet_received(0, 3, 0, true, ms(20)).duplicate);
        assert!(!t.on_packet_received(0, 10, 0, true, ms(21)).duplicate);
        assert_eq!(t.space(0).unwrap().duplicates(), 1);
        assert_eq!(
            t.space(0).unwrap().ranges().iter().collect::<Vec<_>>(),
            vec![(9, 10)]
        );
    }

    #[test]
    fn late_hole_fill_after_pruning_is_accepted() {
        let mut t = AckTracker::new(Design::Spns, AckPolicy::default());
        for pn in [0, 1, 2, 3, 5, 7] {
            t.on_packet_received(0, pn, 0, true, ms(pn));
        }
        t.prune_acknowledged(0, &[(5, 5), (0, 3)]);
        assert!(!t.on_packet_received(0, 4, 1, true, ms(30)).duplicate);
        assert_eq!(
            t.space(0).unwrap().ranges().iter().collect::<Vec<_>>(),
            vec![(4, 4), (7, 7)]
        );
    }

    #[test]
    fn unlimited_frames_fit_a_packet() {
        let policy = AckPolicy {
            ab_limit: crate::acktrack::AbLimit::Unlimited,
            ..AckPolicy::default()
        };
        let mut t = AckTracker::new(Design::Spns, policy);
        for pn in (0..4000).step_by(2) {
            t.on_packet_received(0, pn, 0, true, ms(1));
        }
        let acks = t.build_ack_frames(ms(2), &[0]);
        assert!(acks[0].frame.encoded_len() <= MAX_ACK_FRAME_BYTES);
        assert_eq!(acks[0].ranges[0], (3998, 3998));
        assert!(!acks[0].at_limit);
    }
}
