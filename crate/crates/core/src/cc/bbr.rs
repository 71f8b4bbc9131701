use std::collections::VecDeque;
use std::fmt;
use std::time::Duration;

use crate::wire::MSS;
use crate::SimTime;

pub const STARTUP_GAIN: f64 = 2.89;
pub const PROBE_BW_GAINS: [f64; 8] = [1.25, 0.75, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0];
pub const PROBE_BW_CWND_GAIN: f64 = 2.0;
/// Rounds over which the bottleneck bandwidth maximum is kept.
pub const BW_WINDOW_ROUNDS: u64 = 10;
pub const MIN_RTT_WINDOW: Duration = Duration::from_secs(10);
pub const PROBE_RTT_DURATION: Duration = Duration::from_millis(200);
pub const MIN_CWND: u64 = 4 * MSS as u64;
const INITIAL_CWND: f64 = 10.0 * MSS as f64;
/// Bandwidth growth under which a round counts toward leaving startup.
const FULL_BW_GROWTH: f64 = 1.25;
const FULL_BW_ROUNDS: u32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BbrMode {
    Startup,
    Drain,
    ProbeBw,
    ProbeRtt,
}

impl fmt::Display for BbrMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BbrMode::Startup => "startup",
            BbrMode::Drain => "drain",
            BbrMode::ProbeBw => "probe_bw",
            BbrMode::ProbeRtt => "probe_rtt",
        })
    }
}

/// One acknowledgment as seen by BBR.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BbrSample {
    pub acked: u64,
    /// Path delivered counter when the newest acknowledged packet was sent.
    pub prior_delivered: u64,
    /// Path delivered counter now.
    pub delivered: u64,
    /// Bytes per second.
    pub delivery_rate: Option<f64>,
    pub rtt: Option<Duration>,
    pub bytes_in_flight: u64,
}

/// Simplified BBRv1 without randomised probing.
#[derive(Clone, Debug, PartialEq)]
pub struct Bbr {
    mode: BbrMode,
    cwnd: f64,
    bw_samples: VecDeque<(u64, f64)>,
    btl_bw: f64,
    min_rtt: Option<Duration>,
    min_rtt_stamp: SimTime,
    round_count: u64,
    next_round_delivered: u64,
    full_bw: f64,
    full_bw_count: u32,
    filled_pipe: bool,
    pacing_gain: f64,
    cwnd_gain: f64,
    cycle_index: usize,
    cycle_stamp: SimTime,
    probe_rtt_done: Option<SimTime>,
    prior_cwnd: f64,
}

impl Default for Bbr {
    fn default() -> Self {
        Self::new()
    }
}

impl Bbr {
    pub fn new() -> Self {
        Bbr {
            mode: BbrMode::Startup,
            cwnd: INITIAL_CWND,
            bw_samples: VecDeque::new(),
            btl_bw: 0.0,
            min_rtt: None,
            min_rtt_stamp: SimTime::ZERO,
            round_count: 0,
            next_round_delivered: 0,
            full_bw: 0.0,
            full_bw_count: 0,
            filled_pipe: false,
            pacing_gain: STARTUP_GAIN,
            cwnd_gain: STARTUP_GAIN,
            cycle_index: 0,
            cycle_stamp: SimTime::ZERO,
            probe_rtt_done: None,
            prior_cwnd: 0.0,
        }
    }

    pub fn mode(&self) -> BbrMode {
        self.mode
    }

    pub fn cwnd(&self) -> u64 {
        self.cwnd as u64
    }

    /// Bottleneck bandwidth estimate in bytes per second.
    pub fn btl_bw(&self) -> f64 {
        self.btl_bw
    }

    pub fn min_rtt(&self) -> Option<Duration> {
        self.min_rtt
    }

    pub fn pacing_gain(&self) -> f64 {
        self.pacing_gain
    }

    pub fn cwnd_gain(&self) -> f64 {
        self.cwnd_gain
    }

    pub fn round_count(&self) -> u64 {
        self.round_count
    }

    /// `cwnd_gain · btl_bw · min_rtt` in bytes.
    pub fn target_cwnd(&self) -> Option<f64> {
        let rtt = self.min_rtt?;
        (self.btl_bw > 0.0).then(|| self.cwnd_gain * self.btl_bw * rtt.as_secs_f64())
    }

    /// Pacing rate in bytes per second; before any bandwidth sample the
    /// initial window is spread over `srtt`.
    pub fn pacing_rate(&self, srtt: Duration) -> Option<f64> {
        if self.btl_bw > 0.0 {
            return Some(self.pacing_gain * self.btl_bw);
        }
        let rtt = self.min_rtt.unwrap_or(srtt).as_secs_f64();
        (rtt > 0.0).then(|| self.pacing_gain * INITIAL_CWND / rtt)
    }

    fn set_gains(&mut self) {
        (self.pacing_gain, self.cwnd_gain) = match self.mode {
            BbrMode::Startup => (STARTUP_GAIN, STARTUP_GAIN),
            BbrMode::Drain => (1.0 / STARTUP_GAIN, STARTUP_GAIN),
            BbrMode::ProbeBw => (PROBE_BW_GAINS[self.cycle_index], PROBE_BW_CWND_GAIN),
            BbrMode::ProbeRtt => (1.0, 1.0),
        };
    }

    fn enter_probe_bw(&mut self, now: SimTime) {
        self.mode = BbrMode::ProbeBw;
        self.cycle_index = 0;
        self.cycle_stamp = now;
        self.set_gains();
    }

    pub fn update(&mut self, s: &BbrSample, now: SimTime) {
        let round_start = s.prior_delivered >= self.next_round_delivered;
        if round_start {
            self.next_round_delivered = s.delivered;
            self.round_count += 1;
        }
        if let Some(rate) = s.delivery_rate.filter(|r| r.is_finite() && *r > 0.0) {
            self.bw_samples.push_back((self.round_count, rate));
        }
        while self
            .bw_samples
            .front()
            .is_some_and(|&(r, _)| r + BW_WINDOW_ROUNDS <= self.round_count)
        {
            self.bw_samples.pop_front();
        }
        self.btl_bw = self.bw_samples.iter().map(|&(_, b)| b).fold(0.0, f64::max);

        if !self.filled_pipe && round_start && self.btl_bw > 0.0 {
            if self.btl_bw >= self.full_bw * FULL_BW_GROWTH {
                self.full_bw = self.btl_bw;
                self.full_bw_count = 0;
            } else {
                self.full_bw_count += 1;
                self.filled_pipe = self.full_bw_count >= FULL_BW_ROUNDS;
            }
        }

        let expired = self.min_rtt.is_some() && now > self.min_rtt_stamp + MIN_RTT_WINDOW;
        if let Some(rtt) = s.rtt {
            if self.min_rtt.is_none_or(|m| rtt <= m) || expired {
                self.min_rtt = Some(rtt);
                self.min_rtt_stamp = now;
            }
        }

        match self.mode {
            BbrMode::Startup if self.filled_pipe => {
                self.mode = BbrMode::Drain;
                self.set_gains();
            }
            BbrMode::Drain => {
                let bdp = self.btl_bw * self.min_rtt.unwrap_or_default().as_secs_f64();
                if (s.bytes_in_flight as f64) <= bdp {
                    self.enter_probe_bw(now);
                }
            }
            BbrMode::ProbeBw => {
                if self.min_rtt.is_some_and(|m| now > self.cycle_stamp + m) {
                    self.cycle_index = (self.cycle_index + 1) % PROBE_BW_GAINS.len();
                    self.cycle_stamp = now;
                    self.set_gains();
                }
            }
            _ => {}
        }
        if expired && self.mode != BbrMode::ProbeRtt {
            self.prior_cwnd = self.cwnd;
            self.mode = BbrMode::ProbeRtt;
            self.probe_rtt_done = None;
            self.set_gains();
        }
        if self.mode == BbrMode::ProbeRtt {
            match self.probe_rtt_done {
                None if s.bytes_in_flight <= MIN_CWND => {
                    self.probe_rtt_done = Some(now + PROBE_RTT_DURATION)
                }
                Some(done) if now >= done => {
                    self.min_rtt_stamp = now;
                    if self.filled_pipe {
                        self.enter_probe_bw(now);
                    } else {
                        self.mode = BbrMode::Startup;
                        self.set_gains();
                    }
                    self.cwnd = self.cwnd.max(self.prior_cwnd);
                }
                _ => {}
            }
        }

        if self.mode == BbrMode::ProbeRtt {
            self.cwnd = MIN_CWND as f64;
            return;
        }
        match self.target_cwnd() {
            Some(target) if self.filled_pipe => self.cwnd = target,
            Some(target) => {
                if self.cwnd < target || (s.delivered as f64) < INITIAL_CWND {
                    self.cwnd += s.acked as f64;
                }
            }
            None => {}
        }
        self.cwnd = self.cwnd.max(MIN_CWND as f64);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(delivered: u64, rate: f64, rtt_ms: u64) -> BbrSample {
        BbrSample {
            acked: MSS as u64,
            prior_delivered: delivered,
            delivered: delivered + MSS as u64,
            delivery_rate: Some(rate),
            rtt: Some(Duration::from_millis(rtt_ms)),
            bytes_in_flight: 0,
        }
    }

    #[test]
    fn startup_pacing_gain() {
        let mut b = Bbr::new();
        b.update(&sample(0, 10e6 / 8.0, 20), SimTime::from_millis(20));
        let rate_bits = b.pacing_rate(Duration::from_millis(20)).unwrap() * 8.0;
        assert!((rate_bits - 28.9e6).abs() < 1.0);
    }

    #[test]
    fn plateau_leaves_startup_and_reaches_probe_bw() {
        let mut b = Bbr::new();
        let mut delivered = 0;
        let mut now = SimTime::ZERO;
        for _ in 0..6 {
            now = now + Duration::from_millis(20);
            b.update(&sample(delivered, 1e6, 20), now);
            delivered += MSS as u64;
        }
        assert_ne!(b.mode(), BbrMode::Startup);
        now = now + Duration::from_millis(20);
        b.update(&sample(delivered, 1e6, 20), now);
        assert_eq!(b.mode(), BbrMode::ProbeBw);
        assert_eq!(b.cwnd() as f64, b.target_cwnd().unwrap().floor());
    }

    #[test]
    fn gain_cycle_mean_is_one() {
        let mean: f64 = PROBE_BW_GAINS.iter().sum::<f64>() / PROBE_BW_GAINS.len() as f64;
        assert!((mean - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wrong_min_rtt_inflates_window() {
        let mk = |rtt| {
            let mut b = Bbr::new();
            b.btl_bw = 1e6;
            b.min_rtt = Some(Duration::from_millis(rtt));
            b.enter_probe_bw(SimTime::ZERO);
            b.target_cwnd().unwrap()
        };
        assert!((mk(180) / mk(20) - 9.0).abs() < 1e-9);
    }

    #[test]
    fn probe_rtt_after_window_expiry() {
        let mut b = Bbr::new();
        b.update(&sample(0, 1e6, 20), SimTime::from_millis(20));
        let later = SimTime::from_millis(20) + MIN_RTT_WINDOW + Duration::from_millis(1);
        let mut s = sample(MSS as u64, 1e6, 30);
        s.bytes_in_flight = 0;
        b.update(&s, later);
        assert_eq!(b.mode(), BbrMode::ProbeRtt);
        assert_eq!(b.cwnd(), MIN_CWND);
        b.update(&s, later + PROBE_RTT_DURATION);
        assert_ne!(b.mode(), BbrMode::ProbeRtt);
    }
}
