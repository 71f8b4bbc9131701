use std::time::Duration;

use crate::wire::MSS;
use crate::SimTime;

pub const CUBIC_C: f64 = 0.4;
pub const CUBIC_BETA: f64 = 0.7;
pub const INITIAL_WINDOW: u64 = 10 * MSS as u64;
pub const MINIMUM_WINDOW: u64 = 2 * MSS as u64;
/// Slow start ends once the RTT exceeds the minimum by this factor (picoquic variant).
pub const SLOW_START_RTT_FACTOR: f64 = 1.25;

const MSS_F: f64 = MSS as f64;

/// Cubic congestion window in bytes, with the cubic curve evaluated in MSS units.
#[derive(Clone, Debug, PartialEq)]
pub struct Cubic {
    cwnd: f64,
    ssthresh: f64,
    w_max: f64,
    k: f64,
    epoch_start: Option<SimTime>,
    recovery_start: Option<SimTime>,
    w_est: f64,
    picoquic_variant: bool,
}

impl Cubic {
    pub fn new(picoquic_variant: bool) -> Self {
        Cubic {
            cwnd: INITIAL_WINDOW as f64,
            ssthresh: f64::INFINITY,
            w_max: 0.0,
            k: 0.0,
            epoch_start: None,
            recovery_start: None,
            w_est: 0.0,
            picoquic_variant,
        }
    }

    pub fn cwnd(&self) -> u64 {
        self.cwnd as u64
    }

    pub fn ssthresh(&self) -> f64 {
        self.ssthresh
    }

    pub fn in_slow_start(&self) -> bool {
        self.cwnd < self.ssthresh
    }

    pub fn w_max(&self) -> f64 {
        self.w_max
    }

    /// Time in seconds for the curve to climb back to `w_max` after a reduction.
    pub fn k(&self) -> f64 {
        self.k
    }

    /// Cubic window `C(t-K)^3 + W_max` in bytes, `t` seconds into the epoch.
    pub fn w_cubic(&self, t: f64) -> f64 {
        MSS_F * (CUBIC_C * (t - self.k).powi(3) + self.w_max / MSS_F)
    }

    /// Starts a congestion-avoidance epoch anchored at `w_max`.
    fn start_epoch(&mut self, now: SimTime, w_max: f64) {
        self.w_max = w_max;
        self.k = (w_max / MSS_F * (1.0 - CUBIC_BETA) / CUBIC_C).cbrt();
        self.epoch_start = Some(now);
        self.w_est = self.cwnd;
    }

    /// Growth on `acked` newly acknowledged bytes. `newest_sent` is the send
    /// time of the most recent packet acknowledged and `rtt_sample` the
    /// ack-delay-adjusted sample this acknowledgment produced, if any.
    pub fn on_ack(
        &mut self,
        acked: u64,
        newest_sent: SimTime,
        rtt_sample: Option<Duration>,
        min_rtt: Duration,
        srtt: Duration,
        now: SimTime,
    ) {
        if acked == 0 || self.recovery_start.is_some_and(|r| newest_sent <= r) {
            return;
        }
        if self.in_slow_start() {
            if self.picoquic_variant
                && rtt_sample.is_some_and(|s| {
                    s.as_secs_f64() > SLOW_START_RTT_FACTOR * min_rtt.as_secs_f64()
                })
            {
                self.ssthresh = self.cwnd;
                // The curve starts flat at the current window.
                self.w_max = self.cwnd;
                self.k = 0.0;
                self.epoch_start = Some(now);
                self.w_est = self.cwnd;
                return;
            }
            self.cwnd += acked as f64;
            return;
        }
        let epoch = *self.epoch_start.get_or_insert(now);
        let t = (now - epoch).as_secs_f64() + srtt.as_secs_f64();
        let friendly = 3.0 * (1.0 - CUBIC_BETA) / (1.0 + CUBIC_BETA);
        self.w_est += friendly * MSS_F * acked as f64 / self.cwnd;
        let target = self.w_cubic(t).max(self.w_est).min(1.5 * self.cwnd);
        if target > self.cwnd {
            self.cwnd += (target - self.cwnd) / self.cwnd * acked as f64;
        }
    }

    /// Multiplicative decrease for a loss of a packet sent at `lost_sent`;
    /// returns false when the loss falls in the current recovery round.
    pub fn on_congestion_event(&mut self, lost_sent: SimTime, now: SimTime) -> bool {
        if self.recovery_start.is_some_and(|r| lost_sent <= r) {
            return false;
        }
        self.recovery_start = Some(now);
        let w_max = self.cwnd;
        self.cwnd = (self.cwnd * CUBIC_BETA).max(MINIMUM_WINDOW as f64);
        self.ssthresh = self.cwnd;
        self.start_epoch(now, w_max);
        true
    }

    /// Pacing rate in bytes per second.
    pub fn pacing_rate(&self, srtt: Duration) -> Option<f64> {
        let gain = if self.in_slow_start() { 2.0 } else { 1.25 };
        let s = srtt.as_secs_f64();
        (s > 0.0).then(|| gain * self.cwnd / s)
    }
}
