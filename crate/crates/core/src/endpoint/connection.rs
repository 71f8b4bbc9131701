use std::collections::{BTreeMap, VecDeque};
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::stream::{RecvStream, SendStream};
use super::{ConnectionConfig, ConnectionError, ConnectionStats, Transmit};
use crate::acktrack::{AckTracker, BuiltAck, REORDER_PACKET_THRESHOLD};
use crate::cc::{Controller, Pacer};
use crate::path::{negotiate, CidRegistry, PathManager};
use crate::sendtrack::{
    compute_nonce, LossTrigger, LostPacket, RetransmitLedger, SentPacketRecord, SentTracker,
    StreamRange,
};
use crate::trace::TraceEvent;
use crate::wire::{
    AckFrame, ConnectionId, Frame, Packet, PacketHeader, PacketKind, StreamFrame,
    TransportParameters, HANDSHAKE_DATAGRAM_LEN, MAX_FRAME_BYTES, MSS,
};
use crate::{Design, Side, SimTime};

/// The bulk download stream.
pub const STREAM_ID: u64 = 0;
/// Size of the client's request.
pub const REQUEST_LEN: u64 = 64;
/// Frame space under which a data packet is considered full.
const MIN_USEFUL_SPACE: usize = 32;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum State {
    /// Client before its first flight, server before the client's.
    Initial,
    /// Handshake flight sent, awaiting the peer.
    Handshaking,
    Established,
    Closed,
}

#[derive(Clone, Debug)]
struct PathCc {
    controller: Controller,
    pacer: Pacer,
    last_mode: String,
}

/// One endpoint of a simulated connection, driven without I/O: feed it
/// datagrams and timeouts, then drain packets with [`poll_transmit`](Self::poll_transmit).
#[derive(Clone, Debug)]
pub struct Connection {
    side: Side,
    cfg: ConnectionConfig,
    state: State,
    design: Option<Design>,
    peer_tp: Option<TransportParameters>,
    rng: ChaCha8Rng,
    peer_cids: CidRegistry,
    paths: PathManager,
    sent: SentTracker,
    acks: AckTracker,
    cc: BTreeMap<u64, PathCc>,
    /// Path validation frames to send on a specific path.
    path_frames: BTreeMap<u64, Vec<Frame>>,
    /// Validation replies waiting for the peer's CID of that path.
    blocked_path_frames: BTreeMap<u64, Vec<Frame>>,
    control: Vec<Frame>,
    pending_acks: VecDeque<(u64, Vec<BuiltAck>)>,
    probes: VecDeque<u64>,
    send: Option<SendStream>,
    recv: Option<RecvStream>,
    ledger: RetransmitLedger,
    handshake_pending: bool,
    handshake_sent_at: Option<SimTime>,
    ack_frequency_sent: bool,
    close_pending: bool,
    rr_last: Option<u64>,
    last_ack_eliciting_sent: Option<SimTime>,
    trace: Vec<(SimTime, TraceEvent)>,
    stats: ConnectionStats,
}

impl Connection {
    pub fn client(cfg: ConnectionConfig) -> Self {
        let mut c = Self::new(Side::Client, cfg);
        c.handshake_pending = true;
        c
    }

    pub fn server(cfg: ConnectionConfig) -> Self {
        Self::new(Side::Server, cfg)
    }

    fn new(side: Side, cfg: ConnectionConfig) -> Self {
        let seed = cfg.seed
            ^ if side == Side::Client {
                0x636c_6965_6e74
            } else {
                0x7365_7276_6572
            };
        Connection {
            side,
            state: State::Initial,
            design: None,
            peer_tp: None,
            rng: ChaCha8Rng::seed_from_u64(seed),
            peer_cids: CidRegistry::new(cfg.n_paths + 1),
            paths: PathManager::new(seed.rotate_left(17)),
            sent: SentTracker::new(Design::Spns),
            acks: AckTracker::new(Design::Spns, cfg.ack_policy),
            cc: BTreeMap::new(),
            path_frames: BTreeMap::new(),
            blocked_path_frames: BTreeMap::new(),
            control: Vec::new(),
            pending_acks: VecDeque::new(),
            probes: VecDeque::new(),
            send: None,
            recv: None,
            ledger: RetransmitLedger::new(),
            handshake_pending: false,
            handshake_sent_at: None,
            ack_frequency_sent: false,
            close_pending: false,
            rr_last: None,
            last_ack_eliciting_sent: None,
            trace: Vec::new(),
            stats: ConnectionStats::default(),
            cfg,
        }
    }

    pub fn side(&self) -> Side {
        self.side
    }

    pub fn config(&self) -> &ConnectionConfig {
        &self.cfg
    }

    /// Negotiated design; `None` before the handshake or when multipath is disabled.
    pub fn design(&self) -> Option<Design> {
        self.design
    }

    fn effective_design(&self) -> Design {
        self.design.unwrap_or(Design::Spns)
    }

    pub fn is_established(&self) -> bool {
        self.state == State::Established
    }

    pub fn is_closed(&self) -> bool {
        self.state == State::Closed
    }

    pub fn stats(&self) -> ConnectionStats {
        let mut s = self.stats.clone();
        s.retransmitted_bytes = self.ledger.total_bytes();
        s.max_per_byte_retransmissions = self.ledger.max_count();
        s.stream_bytes_delivered = self.recv.as_ref().map_or(0, RecvStream::delivered);
        s
    }

    pub fn sent_tracker(&self) -> &SentTracker {
        &self.sent
    }

    pub fn ack_tracker(&self) -> &AckTracker {
        &self.acks
    }

    pub fn path_manager(&self) -> &PathManager {
        &self.paths
    }

    pub fn controller(&self, path: u64) -> Option<&Controller> {
        self.cc.get(&path).map(|c| &c.controller)
    }

    /// Trace events logged since the last call.
    pub fn drain_trace(&mut self) -> Vec<(SimTime, TraceEvent)> {
        std::mem::take(&mut self.trace)
    }

    fn log(&mut self, now: SimTime, event: TraceEvent) {
        self.trace.push((now, event));
    }

    fn local_tp(&self) -> TransportParameters {
        TransportParameters {
            multipath: self.cfg.multipath,
            active_connection_id_limit: self.cfg.n_paths + 1,
            initial_max_data: self.cfg.initial_window,
            initial_max_stream_data: self.cfg.initial_window,
            ack_frequency: self.cfg.ack_policy.ack_frequency,
        }
    }

    fn random_cid(&mut self) -> ConnectionId {
        let mut b = [0u8; ConnectionId::LEN];
        self.rng.fill(&mut b);
        ConnectionId::new(b)
    }

    fn new_cid_frames(&mut self, limit: u64) -> Vec<Frame> {
        let count = (self.cfg.n_paths + 1).min(limit);
        (1..count)
            .map(|seq| {
                let cid = self.random_cid();
                let mut reset_token = [0u8; 16];
                self.rng.fill(&mut reset_token);
                Frame::NewConnectionId {
                    seq,
                    retire_prior_to: 0,
                    cid,
                    reset_token,
                }
            })
            .collect()
    }

    fn add_path(&mut self, path: u64, now: SimTime) {
        if self.sent.has_path(path) {
            return;
        }
        self.sent.add_path(path);
        let controller = Controller::new(self.cfg.cc, self.cfg.picoquic_cubic);
        let last_mode = controller.mode();
        self.cc.insert(
            path,
            PathCc {
                controller,
                pacer: Pacer::new(),
                last_mode,
            },
        );
        self.trace_cc(now, path, true);
    }

    fn seed_rtt(&mut self, path: u64, sample: Duration) {
        if let Some(p) = self.sent.path_mut(path) {
            if !p.rtt.has_sample() {
                p.rtt.update(sample, Duration::ZERO);
            }
        }
    }

    fn trace_cc(&mut self, now: SimTime, path: u64, force: bool) {
        let Some(c) = self.cc.get_mut(&path) else {
            return;
        };
        let mode = c.controller.mode();
        if !force && mode == c.last_mode {
            return;
        }
        c.last_mode = mode.clone();
        let cwnd = c.controller.cwnd();
        let rtt = self.sent.path(path).map(|p| p.rtt).unwrap_or_default();
        let pacing_rate = c.controller.pacing_rate(&rtt);
        self.log(
            now,
            TraceEvent::CcState {
                path,
                cwnd,
                pacing_rate,
                mode,
            },
        );
    }

    fn max_srtt(&self) -> Duration {
        self.paths
            .validated_paths()
            .iter()
            .filter_map(|&p| self.sent.path(p))
            .map(|p| p.rtt.smoothed())
            .max()
            .unwrap_or(crate::sendtrack::INITIAL_RTT)
    }

    /// Validated path with the smallest smoothed RTT.
    fn fastest_path(&self) -> u64 {
        self.paths
            .validated_paths()
            .into_iter()
            .filter(|&p| self.can_send_on(p))
            .min_by_key(|&p| self.sent.path(p).map(|r| r.rtt.smoothed()))
            .unwrap_or(0)
    }

    fn can_send_on(&self, path: u64) -> bool {
        self.peer_cids.contains(path) && self.sent.has_path(path)
    }

    // ---------------------------------------------------------------- input

    /// Processes a datagram that arrived on the link of `path`.
    pub fn handle_datagram(&mut self, now: SimTime, packet: Packet) -> Result<(), ConnectionError> {
        if self.state == State::Closed {
            return Ok(());
        }
        self.stats.packets_received += 1;
        match &packet.kind {
            PacketKind::Initial(tp) => {
                let tp = *tp;
                self.on_initial(now, tp);
                Ok(())
            }
            PacketKind::Handshake(tp) => {
                let tp = *tp;
                self.on_handshake(now, tp, &packet.frames)
            }
            PacketKind::OneRtt => self.on_one_rtt(now, packet),
        }
    }

    fn on_initial(&mut self, now: SimTime, tp: TransportParameters) {
        if self.side != Side::Server || self.state != State::Initial {
            return;
        }
        self.peer_tp = Some(tp);
        self.design = negotiate(tp.multipath, self.cfg.multipath);
        let design = self.effective_design();
        self.sent.set_design(design);
        self.acks.set_design(design);
        let cid = self.random_cid();
        self.peer_cids
            .issue(0, cid)
            .expect("first CID fits any limit");
        self.peer_cids.mark_used(0);
        self.paths.add_initial_path(0);
        self.add_path(0, now);
        self.handshake_pending = true;
    }

    fn on_handshake(
        &mut self,
        now: SimTime,
        tp: TransportParameters,
        frames: &[Frame],
    ) -> Result<(), ConnectionError> {
        if self.side != Side::Client || self.state != State::Handshaking {
            return Ok(());
        }
        self.peer_tp = Some(tp);
        self.design = negotiate(self.cfg.multipath, tp.multipath);
        let design = self.effective_design();
        self.sent.set_design(design);
        self.acks.set_design(design);
        let cid = self.random_cid();
        self.peer_cids.issue(0, cid)?;
        self.peer_cids.mark_used(0);
        for f in frames {
            if let Frame::NewConnectionId { seq, cid, .. } = f {
                self.peer_cids.issue(*seq, *cid)?;
            }
        }
        self.paths.add_initial_path(0);
        self.add_path(0, now);
        if let Some(sent_at) = self.handshake_sent_at {
            self.seed_rtt(0, now - sent_at);
        }
        self.state = State::Established;
        self.log(
            now,
            TraceEvent::HandshakeComplete {
                multipath: self.design,
            },
        );
        self.recv = Some(RecvStream::new(
            STREAM_ID,
            self.cfg.initial_window,
            self.cfg.max_window,
        ));

        self.control.push(Frame::Stream(StreamFrame {
            stream_id: STREAM_ID,
            offset: 0,
            len: REQUEST_LEN,
            fin: true,
        }));
        if self.design.is_some() {
            let ncids = self.new_cid_frames(tp.active_connection_id_limit);
            self.control.extend(ncids);
            // Every other path is opened as soon as the handshake completes.
            for _ in 1..self.cfg.n_paths {
                let (path, challenge) =
                    match self
                        .paths
                        .start_path_validation(&mut self.peer_cids, true, now)
                    {
                        Ok(v) => v,
                        Err(_) => break,
                    };
                self.add_path(path, now);
                self.path_frames.entry(path).or_default().push(challenge);
            }
        }
        Ok(())
    }

    fn on_one_rtt(&mut self, now: SimTime, packet: Packet) -> Result<(), ConnectionError> {
        let path = packet.header.dcid_seq;
        let space = packet.header.space;
        let pn = packet.header.pn;
        let bytes = packet.udp_len() as u64;
        if self.side == Side::Server && self.state == State::Handshaking {
            // Any 1-RTT packet from the client completes the handshake; a
            // challenge on a fast new path may overtake the first packet on path 0.
            self.state = State::Established;
            self.log(
                now,
                TraceEvent::HandshakeComplete {
                    multipath: self.design,
                },
            );
        }
        if self.side == Side::Server && path == 0 {
            if let Some(sent_at) = self.handshake_sent_at.take() {
                self.seed_rtt(0, now - sent_at);
            }
        }
        if self.state != State::Established {
            return Ok(());
        }
        let outcome = self
            .acks
            .on_packet_received(space, pn, path, packet.is_ack_eliciting(), now);
        if outcome.duplicate {
            self.stats.duplicates_received += 1;
            self.log(now, TraceEvent::DuplicateReceived { path, space, pn });
            return Ok(());
        }
        self.log(
            now,
            TraceEvent::PacketReceived {
                path,
                space,
                pn,
                bytes,
            },
        );

        for frame in packet.frames {
            match frame {
                Frame::Padding { .. } | Frame::Ping | Frame::HandshakeDone => {}
                Frame::Ack(ack) => self.on_ack_frame(now, 0, &ack)?,
                Frame::AckMp { path_id, ack } => self.on_ack_frame(now, path_id, &ack)?,
                Frame::Stream(sf) => self.on_stream(now, sf),
                Frame::MaxData { limit } => {
                    if let Some(s) = self.send.as_mut() {
                        s.update_max_data(limit);
                    }
                }
                Frame::MaxStreamData { limit, .. } => {
                    if let Some(s) = self.send.as_mut() {
                        s.update_max_stream_data(limit);
                    }
                }
                Frame::NewConnectionId { seq, cid, .. } => {
                    // CIDs beyond our limit are ignored rather than fatal.
                    if self.peer_cids.issue(seq, cid).is_ok() {
                        self.peer_cids.mark_used(seq);
                        if let Some(blocked) = self.blocked_path_frames.remove(&seq) {
                            self.path_frames.entry(seq).or_default().extend(blocked);
                        }
                    }
                }
                f @ (Frame::PathChallenge { .. } | Frame::PathResponse { .. }) => {
                    self.on_path_frame(now, path, &f)
                }
                Frame::ConnectionClose { .. } => self.on_close(now),
                Frame::AckFrequency {
                    seq,
                    packet_threshold,
                    max_ack_delay_us,
                    ignore_reorder,
                } => self.acks.on_ack_frequency(
                    seq,
                    packet_threshold,
                    Duration::from_micros(max_ack_delay_us),
                    ignore_reorder,
                ),
            }
        }

        let rtt = self.max_srtt();
        if let Some(recv) = self.recv.as_mut() {
            if let Some(limit) = recv.poll_window_update(now, rtt) {
                self.control
                    .retain(|f| !matches!(f, Frame::MaxData { .. } | Frame::MaxStreamData { .. }));
                self.control.push(Frame::MaxData { limit });
                self.control.push(Frame::MaxStreamData {
                    stream_id: STREAM_ID,
                    limit,
                });
                self.log(now, TraceEvent::MaxDataSent { limit });
            }
        }
        Ok(())
    }

    fn on_stream(&mut self, now: SimTime, sf: StreamFrame) {
        match self.side {
            Side::Server => {
                if sf.fin && self.send.is_none() {
                    let tp = self.peer_tp.expect("handshake done");
                    self.send = Some(SendStream::new(
                        STREAM_ID,
                        self.cfg.transfer_size,
                        tp.initial_max_data,
                        tp.initial_max_stream_data,
                    ));
                }
            }
            Side::Client => {
                let Some(recv) = self.recv.as_mut() else {
                    return;
                };
                let was_complete = recv.is_complete();
                recv.on_data(sf.offset, sf.len, sf.fin);
                if !was_complete && recv.is_complete() {
                    // The last byte is acknowledged without delay.
                    self.acks.request_immediate();
                    self.stats.stream_completed_at = Some(now);
                }
            }
        }
    }

    fn on_path_frame(&mut self, now: SimTime, path: u64, frame: &Frame) {
        self.add_path(path, now);
        let out = self.paths.on_path_frame(frame, path, now);
        if out.validated {
            if let Some(rtt) = out.rtt {
                self.seed_rtt(path, rtt);
            }
            self.log(now, TraceEvent::PathValidated { path });
        }
        if out.replies.is_empty() {
            return;
        }
        let queue = if self.peer_cids.contains(path) {
            &mut self.path_frames
        } else {
            &mut self.blocked_path_frames
        };
        queue.entry(path).or_default().extend(out.replies);
    }

    fn on_close(&mut self, now: SimTime) {
        if self.side == Side::Client {
            let start = self.stats.first_packet_at.unwrap_or(SimTime::ZERO);
            let seconds = (now - start).as_secs_f64();
            self.stats.transfer_complete_at = Some(now);
            self.log(now, TraceEvent::TransferComplete { seconds });
        }
        self.state = State::Closed;
    }

    fn on_ack_frame(
        &mut self,
        now: SimTime,
        space: u64,
        ack: &AckFrame,
    ) -> Result<(), ConnectionError> {
        let ranges = ack.ranges()?;
        let ack_delay =
            Duration::from_micros(ack.ack_delay_micros()).min(self.cfg.ack_policy.max_ack_delay);
        let out = self.sent.on_ack_received(space, &ranges, ack_delay, now)?;

        for rec in &out.newly_acked {
            for r in &rec.stream_ranges {
                self.ledger.on_acked(r);
                if let Some(s) = self.send.as_mut() {
                    s.on_acked(r.offset, r.len, r.fin);
                }
            }
            for (space, confirmed) in &rec.acks {
                self.acks.prune_acknowledged(*space, confirmed);
            }
        }
        if let Some(sample) = out.rtt_sample {
            let rtt = self
                .sent
                .path(sample.path)
                .expect("sampled path exists")
                .rtt;
            self.log(
                now,
                TraceEvent::RttSample {
                    path: sample.path,
                    latest_us: sample.latest.as_micros() as u64,
                    srtt_us: rtt.smoothed().as_micros() as u64,
                    min_rtt_us: rtt.min().as_micros() as u64,
                },
            );
        }
        for p in &out.paths {
            let recovery = self.sent.path(p.path).expect("acked path exists");
            let rtt = recovery.rtt;
            let in_flight = recovery.bytes_in_flight();
            let sample = out.rtt_sample.as_ref().filter(|s| s.path == p.path);
            if let Some(c) = self.cc.get_mut(&p.path) {
                c.controller.on_ack(p, sample, &rtt, in_flight, now);
            }
            self.trace_cc(now, p.path, false);
        }
        for &(pn, path) in &out.spurious {
            self.stats.spurious_losses += 1;
            self.log(now, TraceEvent::SpuriousLoss { path, space, pn });
        }
        self.on_lost(now, out.lost);

        if self.side == Side::Server
            && !self.ack_frequency_sent
            && ranges.len() > 1
            && self.cfg.ack_policy.ack_frequency
            && self.peer_tp.is_some_and(|tp| tp.ack_frequency)
        {
            self.ack_frequency_sent = true;
            let (threshold, delay, ignore_reorder) = (
                REORDER_PACKET_THRESHOLD,
                self.cfg.ack_policy.max_ack_delay,
                true,
            );
            self.control.push(Frame::AckFrequency {
                seq: 0,
                packet_threshold: threshold,
                max_ack_delay_us: delay.as_micros() as u64,
                ignore_reorder,
            });
        }
        if self.send.as_ref().is_some_and(SendStream::is_complete)
            && !self.close_pending
            && self.state != State::Closed
        {
            self.close_pending = true;
        }
        Ok(())
    }

    fn on_lost(&mut self, now: SimTime, lost: Vec<LostPacket>) {
        for LostPacket { record, trigger } in lost {
            self.stats.packets_lost += 1;
            self.log(
                now,
                TraceEvent::PacketLost {
                    path: record.path_id,
                    space: record.space,
                    pn: record.pn,
                    trigger: trigger.as_str().to_owned(),
                },
            );
            let segments = self.ledger.mark_retransmission(&record.stream_ranges);
            for seg in segments {
                if let Some(s) = self.send.as_mut() {
                    s.queue_retransmit(seg.offset, seg.len);
                }
                self.log(
                    now,
                    TraceEvent::StreamRetransmit {
                        stream_id: seg.stream_id,
                        offset: seg.offset,
                        len: seg.len,
                        nth_time: seg.nth_time,
                    },
                );
            }
            if record.stream_ranges.iter().any(|r| r.fin) {
                if let Some(s) = self.send.as_mut() {
                    s.on_fin_lost();
                }
            }
            for frame in &record.control {
                self.requeue_control(now, record.path_id, frame);
            }
            if trigger != LossTrigger::Pto && record.in_flight {
                let reduced = self
                    .cc
                    .get_mut(&record.path_id)
                    .is_some_and(|c| c.controller.on_congestion_event(record.sent_time, now));
                if reduced {
                    self.trace_cc(now, record.path_id, true);
                }
            }
        }
    }

    fn requeue_control(&mut self, now: SimTime, path: u64, frame: &Frame) {
        match frame {
            Frame::MaxData { .. } | Frame::MaxStreamData { .. } => {
                let Some(limit) = self.recv.as_ref().map(RecvStream::limit) else {
                    return;
                };
                let refreshed = match frame {
                    Frame::MaxData { .. } => Frame::MaxData { limit },
                    _ => Frame::MaxStreamData {
                        stream_id: STREAM_ID,
                        limit,
                    },
                };
                if !self.control.contains(&refreshed) {
                    self.control.push(refreshed);
                }
            }
            Frame::PathChallenge { .. } => {
                if let Some(f) = self.paths.repeat_challenge(path, now) {
                    self.path_frames.entry(path).or_default().push(f);
                }
            }
            Frame::NewConnectionId { .. }
            | Frame::AckFrequency { .. }
            | Frame::Stream(_)
            | Frame::HandshakeDone
            | Frame::ConnectionClose { .. } => self.control.push(frame.clone()),
            _ => {}
        }
    }

    /// Processes expired loss and probe timers.
    pub fn handle_timeout(&mut self, now: SimTime) {
        if self.state == State::Closed {
            return;
        }
        let out = self.sent.on_timeout(now);
        self.on_lost(now, out.lost);
        for p in out.probes {
            if !self.probes.contains(&p) {
                self.probes.push_back(p);
            }
        }
    }

    /// Earliest time at which [`handle_timeout`](Self::handle_timeout) or
    /// [`poll_transmit`](Self::poll_transmit) has work to do.
    pub fn poll_timeout(&self) -> Option<SimTime> {
        if self.state == State::Closed {
            return None;
        }
        let mut t = [self.acks.next_deadline(), self.sent.next_timeout()]
            .into_iter()
            .flatten()
            .min();
        if self.data_ready() {
            for p in self.data_paths() {
                let c = &self.cc[&p];
                let in_flight = self.sent.path(p).map_or(0, |r| r.bytes_in_flight());
                if in_flight + MSS as u64 <= c.controller.cwnd() {
                    let next = c.pacer.next_send();
                    t = Some(t.map_or(next, |x| x.min(next)));
                }
            }
        }
        t
    }

    // --------------------------------------------------------------- output

    /// Next packet to send at `now`, if any.
    pub fn poll_transmit(&mut self, now: SimTime) -> Option<Transmit> {
        if self.state == State::Closed {
            return None;
        }
        if self.handshake_pending {
            return Some(self.send_handshake(now));
        }
        if self.state != State::Established {
            return None;
        }
        if self.close_pending {
            return Some(self.send_close(now));
        }
        if self.pending_acks.is_empty() && self.acks.wants_send(now) {
            self.queue_acks(now);
        }
        if let Some((path, acks)) = self.pending_acks.pop_front() {
            return Some(self.send_ack_packet(now, path, acks));
        }
        if !self.control.is_empty() {
            let path = self.control_path();
            let frames = std::mem::take(&mut self.control);
            return Some(self.finish_packet(now, path, frames, Vec::new(), false));
        }
        if let Some(&path) = self.path_frames.keys().next() {
            let frames = self.path_frames.remove(&path).expect("key listed");
            return Some(self.finish_packet(now, path, frames, Vec::new(), false));
        }
        while let Some(path) = self.probes.pop_front() {
            if self.can_send_on(path) {
                return Some(self.send_probe(now, path));
            }
        }
        self.send_data(now)
    }

    fn send_handshake(&mut self, now: SimTime) -> Transmit {
        self.handshake_pending = false;
        self.handshake_sent_at = Some(now);
        self.state = State::Handshaking;
        let tp = self.local_tp();
        let (kind, frames) = match self.side {
            Side::Client => {
                self.stats.first_packet_at = Some(now);
                self.log(now, TraceEvent::TransferStarted {});
                (PacketKind::Initial(tp), Vec::new())
            }
            Side::Server => {
                let mut frames = Vec::new();
                if self.design.is_some() {
                    let limit = self.peer_tp.map_or(1, |t| t.active_connection_id_limit);
                    frames = self.new_cid_frames(limit);
                }
                frames.push(Frame::HandshakeDone);
                (PacketKind::Handshake(tp), frames)
            }
        };
        let packet = Packet {
            kind,
            header: PacketHeader {
                dcid_seq: 0,
                space: u64::MAX,
                pn: 0,
            },
            frames,
        };
        let udp_len = packet.udp_len();
        debug_assert_eq!(udp_len, HANDSHAKE_DATAGRAM_LEN);
        self.stats.packets_sent += 1;
        Transmit {
            path: 0,
            packet,
            udp_len,
        }
    }

    fn send_close(&mut self, now: SimTime) -> Transmit {
        self.close_pending = false;
        let path = self.fastest_path();
        let t = self.finish_packet(
            now,
            path,
            vec![Frame::ConnectionClose {
                error_code: 0,
                frame_type: 0,
            }],
            Vec::new(),
            false,
        );
        self.state = State::Closed;
        t
    }

    fn control_path(&self) -> u64 {
        match self.side {
            Side::Client => {
                let p = self.acks.last_rx_path();
                if self.can_send_on(p) {
                    p
                } else {
                    0
                }
            }
            Side::Server => self.fastest_path(),
        }
    }

    fn queue_acks(&mut self, now: SimTime) {
        let active: Vec<u64> = self
            .paths
            .validated_paths()
            .into_iter()
            .filter(|&p| self.can_send_on(p))
            .collect();
        let built = self.acks.build_ack_frames(now, &active);
        for ack in built {
            let path = if self.can_send_on(ack.path) {
                ack.path
            } else {
                0
            };
            match self.pending_acks.iter_mut().find(|(p, _)| *p == path) {
                Some((_, group)) => {
                    if !group.iter().any(|a| a.space == ack.space) {
                        group.push(ack);
                    }
                }
                None => self.pending_acks.push_back((path, vec![ack])),
            }
        }
    }

    fn send_ack_packet(&mut self, now: SimTime, path: u64, acks: Vec<BuiltAck>) -> Transmit {
        let mut frames = Vec::with_capacity(acks.len() + 2);
        let mut carried = Vec::with_capacity(acks.len());
        for a in acks {
            let bytes = a.frame.encoded_len() as u64;
            let largest = a.ranges[0].1;
            if self.side == Side::Client {
                self.stats.ack_frames_sent += 1;
                self.stats.ack_ranges_sent += a.ranges.len() as u64;
                self.stats.ack_frames_at_limit += u64::from(a.at_limit);
                self.stats.ack_bytes_sent += bytes;
            }
            self.log(
                now,
                TraceEvent::AckGenerated {
                    path,
                    space: a.space,
                    n_ranges: a.ranges.len() as u64,
                    at_limit: a.at_limit,
                    bytes,
                    largest,
                },
            );
            frames.push(a.frame);
            carried.push((a.space, a.ranges));
        }
        let room = MAX_FRAME_BYTES.saturating_sub(frames.iter().map(Frame::encoded_len).sum());
        let control_len: usize = self.control.iter().map(Frame::encoded_len).sum();
        if !self.control.is_empty() && control_len <= room {
            frames.append(&mut self.control);
        }
        // Acknowledgments are themselves acknowledged about once per RTT, so
        // the peer's confirmations let old ranges be pruned.
        let srtt = self
            .sent
            .path(path)
            .map_or(Duration::ZERO, |p| p.rtt.smoothed());
        let needs_ping = self
            .last_ack_eliciting_sent
            .is_none_or(|t| now.saturating_duration_since(t) >= srtt);
        if self.side == Side::Client && needs_ping && !frames.iter().any(Frame::is_ack_eliciting) {
            frames.push(Frame::Ping);
        }
        self.finish_packet(now, path, frames, carried, false)
    }

    fn send_probe(&mut self, now: SimTime, path: u64) -> Transmit {
        let has_data = self.send.as_ref().is_some_and(SendStream::has_data);
        if has_data {
            if let Some(t) = self.build_data_packet(now, path) {
                return t;
            }
        }
        self.finish_packet(now, path, vec![Frame::Ping], Vec::new(), false)
    }

    fn data_ready(&self) -> bool {
        self.side == Side::Server && self.send.as_ref().is_some_and(SendStream::has_data)
    }

    fn data_paths(&self) -> Vec<u64> {
        self.paths
            .validated_paths()
            .into_iter()
            .filter(|&p| self.can_send_on(p))
            .collect()
    }

    fn send_data(&mut self, now: SimTime) -> Option<Transmit> {
        if !self.data_ready() {
            return None;
        }
        let paths = self.data_paths();
        if paths.is_empty() {
            return None;
        }
        // Round robin: start after the path used last.
        let start = self
            .rr_last
            .map_or(0, |last| paths.iter().position(|&p| p > last).unwrap_or(0));
        for i in 0..paths.len() {
            let path = paths[(start + i) % paths.len()];
            let c = &self.cc[&path];
            let in_flight = self.sent.path(path).map_or(0, |r| r.bytes_in_flight());
            if in_flight + MSS as u64 > c.controller.cwnd() || c.pacer.allow(now).is_some() {
                continue;
            }
            if let Some(t) = self.build_data_packet(now, path) {
                self.rr_last = Some(path);
                return Some(t);
            }
        }
        None
    }

    fn build_data_packet(&mut self, now: SimTime, path: u64) -> Option<Transmit> {
        let send = self.send.as_mut()?;
        let mut frames = Vec::new();
        let mut budget = MAX_FRAME_BYTES;
        while budget >= MIN_USEFUL_SPACE {
            let Some(chunk) =
                send.next_chunk(|offset| StreamFrame::max_payload(STREAM_ID, offset, budget))
            else {
                break;
            };
            let f = Frame::Stream(StreamFrame {
                stream_id: STREAM_ID,
                offset: chunk.offset,
                len: chunk.len,
                fin: chunk.fin,
            });
            budget -= f.encoded_len();
            frames.push(f);
        }
        if frames.is_empty() {
            return None;
        }
        let t = self.finish_packet(now, path, frames, Vec::new(), true);
        self.paths.set_active(path);
        Some(t)
    }

    fn finish_packet(
        &mut self,
        now: SimTime,
        path: u64,
        mut frames: Vec<Frame>,
        acks: Vec<(u64, Vec<(u64, u64)>)>,
        paced: bool,
    ) -> Transmit {
        let validation = frames
            .iter()
            .any(|f| matches!(f, Frame::PathChallenge { .. } | Frame::PathResponse { .. }));
        if validation {
            // Probing datagrams are padded to the minimum QUIC datagram size.
            let used = Packet::one_rtt(
                PacketHeader {
                    dcid_seq: path,
                    space: 0,
                    pn: 0,
                },
                frames.clone(),
            )
            .udp_len();
            if used < HANDSHAKE_DATAGRAM_LEN {
                frames.push(Frame::Padding {
                    len: HANDSHAKE_DATAGRAM_LEN - used,
                });
            }
            for f in &frames {
                if matches!(f, Frame::PathChallenge { .. }) {
                    self.log(now, TraceEvent::PathChallengeSent { path });
                }
            }
        }
        let (space, pn) = self
            .sent
            .assign_pn(path)
            .expect("sending on a registered path");
        let packet = Packet::one_rtt(
            PacketHeader {
                dcid_seq: path,
                space,
                pn,
            },
            frames,
        );
        let udp_len = packet.udp_len();
        let ack_eliciting = packet.is_ack_eliciting();

        let mut rec = SentPacketRecord::new(pn, space, path, now, udp_len as u64);
        rec.ack_eliciting = ack_eliciting;
        rec.in_flight = ack_eliciting;
        rec.acks = acks;
        let mut stream_bytes = 0;
        for f in &packet.frames {
            match f {
                Frame::Stream(sf) if self.side == Side::Server => {
                    stream_bytes += sf.len;
                    rec.stream_ranges.push(StreamRange {
                        stream_id: sf.stream_id,
                        offset: sf.offset,
                        len: sf.len,
                        fin: sf.fin,
                    });
                }
                Frame::Stream(_)
                | Frame::MaxData { .. }
                | Frame::MaxStreamData { .. }
                | Frame::NewConnectionId { .. }
                | Frame::PathChallenge { .. }
                | Frame::AckFrequency { .. }
                | Frame::HandshakeDone => rec.control.push(f.clone()),
                _ => {}
            }
        }
        self.sent.on_packet_sent(rec);
        if ack_eliciting {
            self.last_ack_eliciting_sent = Some(now);
        }
        if paced {
            let rtt = self.sent.path(path).map(|p| p.rtt).unwrap_or_default();
            let c = self.cc.get_mut(&path).expect("path has a controller");
            let rate = c.controller.pacing_rate(&rtt);
            c.pacer.on_send(now, udp_len as u64, rate);
        }
        let nonce = compute_nonce(self.effective_design(), path, pn).to_bytes();
        self.stats.packets_sent += 1;
        self.log(
            now,
            TraceEvent::PacketSent {
                path,
                space,
                pn,
                bytes: udp_len as u64,
                ack_eliciting,
                stream_bytes,
                nonce: hex::encode(nonce),
            },
        );
        Transmit {
            path,
            packet,
            udp_len,
        }
    }
}
