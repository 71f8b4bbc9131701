use std::time::Duration;

/// Round-trip estimate before any sample is available.
pub const INITIAL_RTT: Duration = Duration::from_millis(333);

/// Smoothed RTT estimator with the usual 1/8 and 1/4 gains.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RttEstimator {
    latest: Duration,
    smoothed: Duration,
    var: Duration,
    min: Duration,
    has_sample: bool,
}

impl Default for RttEstimator {
    fn default() -> Self {
        RttEstimator {
            latest: INITIAL_RTT,
            smoothed: INITIAL_RTT,
            var: INITIAL_RTT / 2,
            min: INITIAL_RTT,
            has_sample: false,
        }
    }
}

impl RttEstimator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Feeds one sample. `ack_delay` is subtracted unless doing so would go
    /// below the minimum RTT.
    pub fn update(&mut self, sample: Duration, ack_delay: Duration) {
        self.latest = sample;
        if !self.has_sample {
            self.has_sample = true;
            self.min = sample;
            self.smoothed = sample;
            self.var = sample / 2;
            return;
        }
        self.min = self.min.min(sample);
        let adjusted = if sample >= self.min + ack_delay {
            sample - ack_delay
        } else {
            sample
        };
        let diff = self.smoothed.abs_diff(adjusted);
        self.var = (self.var * 3 + diff) / 4;
        self.smoothed = (self.smoothed * 7 + adjusted) / 8;
    }

    pub fn has_sample(&self) -> bool {
        self.has_sample
    }

    pub fn latest(&self) -> Duration {
        self.latest
    }

    pub fn smoothed(&self) -> Duration {
        self.smoothed
    }

    pub fn var(&self) -> Duration {
        self.var
    }

    pub fn min(&self) -> Duration {
        self.min
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ms(v: u64) -> Duration {
        Duration::from_millis(v)
    }

    #[test]
    fn first_sample_initialises() {
        let mut r = RttEstimator::new();
        r.update(ms(100), ms(10));
        assert_eq!(r.smoothed(), ms(100));
        assert_eq!(r.var(), ms(50));
        assert_eq!(r.min(), ms(100));
    }

    #[test]
    fn ewma_step() {
        let mut r = RttEstimator::new();
        r.update(ms(100), Duration::ZERO);
        r.update(ms(60), Duration::ZERO);
        assert_eq!(r.smoothed(), ms(95));
        assert_eq!(r.min(), ms(60));
    }

    #[test]
    fn ack_delay_not_subtracted_below_min() {
        let mut r = RttEstimator::new();
        r.update(ms(50), Duration::ZERO);
        r.update(ms(58), ms(10));
        // 58 - 10 < 50, so the raw sample is used.
        assert_eq!(r.smoothed(), (ms(50) * 7 + ms(58)) / 8);
        r.update(ms(80), ms(10));
        let before = (ms(50) * 7 + ms(58)) / 8;
        assert_eq!(r.smoothed(), (before * 7 + ms(70)) / 8);
    }
}
