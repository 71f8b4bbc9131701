use std::time::Duration;

use crate::SimTime;

/// Leaky-bucket pacer allowing a one-packet burst.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Pacer {
    next_send: SimTime,
}

impl Pacer {
    pub fn new() -> Self {
        Self::default()
    }

    /// `None` when a packet may leave at `now`, otherwise the earliest time it may.
    pub fn allow(&self, now: SimTime) -> Option<SimTime> {
        (self.next_send > now).then_some(self.next_send)
    }

    /// Accounts for `bytes` sent at `now` with `rate` in bytes per second;
    /// `None` disables pacing.
    pub fn on_send(&mut self, now: SimTime, bytes: u64, rate: Option<f64>) {
        match rate {
            Some(r) if r > 0.0 && r.is_finite() => {
                let gap = Duration::from_secs_f64(bytes as f64 / r);
                self.next_send = self.next_send.max(now) + gap;
            }
            _ => self.next_send = now,
        }
    }

    pub fn next_send(&self) -> SimTime {
        self.next_send
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_packet_goes() {
        assert_eq!(Pacer::new().allow(SimTime::from_millis(3)), None);
    }

    #[test]
    fn spacing_is_bytes_over_rate() {
        let mut p = Pacer::new();
        let t = SimTime::from_millis(10);
        p.on_send(t, 1252, Some(1_252_000.0));
        assert_eq!(p.allow(t), Some(SimTime::from_millis(11)));
        assert_eq!(p.allow(SimTime::from_millis(11)), None);
    }

    #[test]
    fn unpaced_always_sends() {
        let mut p = Pacer::new();
        let t = SimTime::from_millis(1);
        for _ in 0..100 {
            p.on_send(t, 1252, None);
            assert_eq!(p.allow(t), None);
        }
    }
}
