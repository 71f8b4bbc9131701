//! Per-path congestion control (Cubic and a simplified BBRv1) and pacing.

mod bbr;
mod cubic;
mod pacer;

use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

pub use bbr::{
    Bbr, BbrMode, BbrSample, BW_WINDOW_ROUNDS, MIN_CWND as BBR_MIN_CWND, MIN_RTT_WINDOW,
    PROBE_BW_CWND_GAIN, PROBE_BW_GAINS, PROBE_RTT_DURATION, STARTUP_GAIN,
};
pub use cubic::{
    Cubic, CUBIC_BETA, CUBIC_C, INITIAL_WINDOW, MINIMUM_WINDOW, SLOW_START_RTT_FACTOR,
};
pub use pacer::Pacer;

use crate::sendtrack::{PathAck, RttEstimator, RttSample};
use crate::SimTime;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CcAlgorithm {
    #[default]
    Cubic,
    Bbr,
}

impl fmt::Display for CcAlgorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CcAlgorithm::Cubic => "cubic",
            CcAlgorithm::Bbr => "bbr",
        })
    }
}

impl FromStr for CcAlgorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "cubic" => Ok(CcAlgorithm::Cubic),
            "bbr" => Ok(CcAlgorithm::Bbr),
            other => Err(format!("unknown congestion controller `{other}`")),
        }
    }
}

/// Congestion controller of one path.
#[derive(Clone, Debug, PartialEq)]
pub enum Controller {
    Cubic(Cubic),
    Bbr(Bbr),
}

impl Controller {
    pub fn new(algorithm: CcAlgorithm, picoquic_variant: bool) -> Self {
        match algorithm {
            CcAlgorithm::Cubic => Controller::Cubic(Cubic::new(picoquic_variant)),
            CcAlgorithm::Bbr => Controller::Bbr(Bbr::new()),
        }
    }

    pub fn cwnd(&self) -> u64 {
        match self {
            Controller::Cubic(c) => c.cwnd(),
            Controller::Bbr(b) => b.cwnd(),
        }
    }

    pub fn mode(&self) -> String {
        match self {
            Controller::Cubic(c) if c.in_slow_start() => "slow_start".to_owned(),
            Controller::Cubic(_) => "congestion_avoidance".to_owned(),
            Controller::Bbr(b) => b.mode().to_string(),
        }
    }

    /// Bytes per second, `None` when unpaced.
    pub fn pacing_rate(&self, rtt: &RttEstimator) -> Option<f64> {
        match self {
            Controller::Cubic(c) => c.pacing_rate(rtt.smoothed()),
            Controller::Bbr(b) => b.pacing_rate(rtt.smoothed()),
        }
    }

    /// Feeds acknowledgment feedback for this path. `sample` is the RTT
    /// sample the same acknowledgment produced for this path, if any.
    pub fn on_ack(
        &mut self,
        ack: &PathAck,
        sample: Option<&RttSample>,
        rtt: &RttEstimator,
        bytes_in_flight: u64,
        now: SimTime,
    ) {
        match self {
            Controller::Cubic(c) => {
                let adjusted = sample.map(|s| {
                    if s.latest >= rtt.min() + s.ack_delay {
                        s.latest - s.ack_delay
                    } else {
                        s.latest
                    }
                });
                c.on_ack(
                    ack.acked_bytes,
                    ack.newest_sent_time,
                    adjusted,
                    rtt.min(),
                    rtt.smoothed(),
                    now,
                );
            }
            Controller::Bbr(b) => b.update(
                &BbrSample {
                    acked: ack.acked_bytes,
                    prior_delivered: ack.prior_delivered,
                    delivered: ack.delivered,
                    delivery_rate: ack.delivery_rate,
                    rtt: sample.map(|s| s.latest),
                    bytes_in_flight,
                },
                now,
            ),
        }
    }

    /// Reacts to a loss of a packet sent at `lost_sent`. Returns true when
    /// the window was reduced.
    pub fn on_congestion_event(&mut self, lost_sent: SimTime, now: SimTime) -> bool {
        match self {
            Controller::Cubic(c) => c.on_congestion_event(lost_sent, now),
            Controller::Bbr(_) => false,
        }
    }

    /// Minimum round-trip estimate used by the controller, when it keeps one.
    pub fn min_rtt(&self) -> Option<Duration> {
        match self {
            Controller::Cubic(_) => None,
            Controller::Bbr(b) => b.min_rtt(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_algorithm() {
        assert_eq!("BBR".parse::<CcAlgorithm>().unwrap(), CcAlgorithm::Bbr);
        assert!("reno".parse::<CcAlgorithm>().is_err());
    }

    #[test]
    fn bbr_ignores_loss() {
        let mut c = Controller::new(CcAlgorithm::Bbr, false);
        let before = c.cwnd();
        assert!(!c.on_congestion_event(SimTime::ZERO, SimTime::from_millis(1)));
        assert_eq!(c.cwnd(), before);
    }
}
