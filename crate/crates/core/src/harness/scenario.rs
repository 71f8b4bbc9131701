use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netsim::PathLinks;

pub const HETERO2_TOTAL_BANDWIDTH_MBPS: f64 = 100.0;
pub const HETERO2_TOTAL_RTT_MS: f64 = 200.0;
pub const HETERO3_TOTAL_BANDWIDTH_MBPS: f64 = 100.0;
pub const HETERO3_TOTAL_RTT_MS: f64 = 300.0;
/// Range of balances and weights in the heterogeneous families.
pub const WEIGHT_RANGE: (f64, f64) = (0.1, 0.9);

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ScenarioError {
    #[error("{family} points have {expected} coordinates, got {got}")]
    Dimension {
        family: Family,
        expected: usize,
        got: usize,
    },
    #[error("coordinate {index} = {value} outside [{lo}, {hi}]")]
    OutOfBounds {
        index: usize,
        value: f64,
        lo: f64,
        hi: f64,
    },
}

/// Bandwidth and round-trip time of one path, identical in both directions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    pub bandwidth_mbps: f64,
    pub rtt_ms: f64,
}

impl PathSpec {
    pub fn new(bandwidth_mbps: f64, rtt_ms: f64) -> Self {
        PathSpec {
            bandwidth_mbps,
            rtt_ms,
        }
    }

    pub fn rtt(&self) -> Duration {
        Duration::from_secs_f64(self.rtt_ms / 1e3)
    }

    pub fn links(&self) -> PathLinks {
        PathLinks::symmetric(self.bandwidth_mbps, self.rtt())
    }
}

impl fmt::Display for PathSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3}Mbps/{:.3}ms", self.bandwidth_mbps, self.rtt_ms)
    }
}

/// The three network families of the experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Two identical paths: bandwidth in [2.5, 100] Mbps, RTT in [5, 100] ms.
    Homo2,
    /// Two paths sharing 100 Mbps and 200 ms by a bandwidth and an RTT balance.
    Hetero2,
    /// Three paths sharing 100 Mbps and 300 ms by per-path weights.
    Hetero3,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Homo2, Family::Hetero2, Family::Hetero3];

    pub fn n_paths(self) -> usize {
        match self {
            Family::Homo2 | Family::Hetero2 => 2,
            Family::Hetero3 => 3,
        }
    }

    /// Box bounds of the design space, one pair per coordinate.
    pub fn bounds(self) -> Vec<(f64, f64)> {
        match self {
            Family::Homo2 => vec![(2.5, 100.0), (5.0, 100.0)],
            Family::Hetero2 => vec![WEIGHT_RANGE; 2],
            Family::Hetero3 => vec![WEIGHT_RANGE; 6],
        }
    }

    /// Coordinate names, in point order.
    pub fn coordinate_names(self) -> &'static [&'static str] {
        match self {
            Family::Homo2 => &["bandwidth_mbps", "rtt_ms"],
            Family::Hetero2 => &["bal_bw", "bal_rtt"],
            Family::Hetero3 => &["w_bw1", "w_bw2", "w_bw3", "w_rtt1", "w_rtt2", "w_rtt3"],
        }
    }

    /// Paths of the scenario at `point`.
    pub fn paths(self, point: &[f64]) -> Result<Vec<PathSpec>, ScenarioError> {
        let bounds = self.bounds();
        if point.len() != bounds.len() {
            return Err(ScenarioError::Dimension {
                family: self,
                expected: bounds.len(),
                got: point.len(),
            });
        }
        for (index, (&value, &(lo, hi))) in point.iter().zip(&bounds).enumerate() {
            // Tolerate rounding from text round trips.
            let slack = 1e-9 * (hi - lo);
            if !(lo - slack..=hi + slack).contains(&value) {
                return Err(ScenarioError::OutOfBounds {
                    index,
                    value,
                    lo,
                    hi,
                });
            }
        }
        Ok(match self {
            Family::Homo2 => vec![PathSpec::new(point[0], point[1]); 2],
            Family::Hetero2 => hetero2_paths(point[0], point[1]).to_vec(),
            Family::Hetero3 => hetero3_paths(
                [point[0], point[1], point[2]],
                [point[3], point[4], point[5]],
            )
            .to_vec(),
        })
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Family::Homo2 => "homo2",
            Family::Hetero2 => "hetero2",
            Family::Hetero3 => "hetero3",
        })
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Family::ALL
            .into_iter()
            .find(|f| f.to_string() == s)
            .ok_or_else(|| format!("unknown family `{s}`"))
    }
}

/// Splits the 2-path budgets: the first path gets the given share of the
/// bandwidth and of the RTT, the second path the rest.
pub fn hetero2_paths(bal_bw: f64, bal_rtt: f64) -> [PathSpec; 2] {
    [
        PathSpec::new(
            bal_bw * HETERO2_TOTAL_BANDWIDTH_MBPS,
            bal_rtt * HETERO2_TOTAL_RTT_MS,
        ),
        PathSpec::new(
            (1.0 - bal_bw) * HETERO2_TOTAL_BANDWIDTH_MBPS,
            (1.0 - bal_rtt) * HETERO2_TOTAL_RTT_MS,
        ),
    ]
}

/// Splits the 3-path budgets proportionally to the weights.
pub fn hetero3_paths(weights_bw: [f64; 3], weights_rtt: [f64; 3]) -> [PathSpec; 3] {
    let sbw: f64 = weights_bw.iter().sum();
    let srtt: f64 = weights_rtt.iter().sum();
    std::array::from_fn(|i| {
        PathSpec::new(
            weights_bw[i] / sbw * HETERO3_TOTAL_BANDWIDTH_MBPS,
            weights_rtt[i] / srtt * HETERO3_TOTAL_RTT_MS,
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-9 * b.abs().max(1.0)
    }

    #[test]
    fn hetero2_examples() {
        let [a, b] = hetero2_paths(0.9, 0.1);
        assert!(close(a.bandwidth_mbps, 90.0) && close(a.rtt_ms, 20.0));
        assert!(close(b.bandwidth_mbps, 10.0) && close(b.rtt_ms, 180.0));
        let [a, b] = hetero2_paths(0.5, 0.5);
        assert_eq!(a, b);
        assert!(close(a.bandwidth_mbps, 50.0) && close(a.rtt_ms, 100.0));
        let [a, b] = hetero2_paths(0.1, 0.9);
        assert!(close(a.bandwidth_mbps, 10.0) && close(a.rtt_ms, 180.0));
        assert!(close(b.bandwidth_mbps, 90.0) && close(b.rtt_ms, 20.0));
    }

    #[test]
    fn hetero3_examples() {
        let p = hetero3_paths([0.5; 3], [0.5, 0.25, 0.75]);
        for (got, want) in p.iter().zip([100.0, 50.0, 150.0]) {
            assert!(close(got.rtt_ms, want));
        }
        let p = hetero3_paths([0.9; 3], [0.3; 3]);
        for s in p {
            assert!(close(s.bandwidth_mbps, 100.0 / 3.0));
            assert!(close(s.rtt_ms, 100.0));
        }
    }

    #[test]
    fn points_are_checked() {
        assert!(matches!(
            Family::Hetero3.paths(&[0.5; 2]),
            Err(ScenarioError::Dimension {
                expected: 6,
                got: 2,
                ..
            })
        ));
        assert!(matches!(
            Family::Homo2.paths(&[1.0, 50.0]),
            Err(ScenarioError::OutOfBounds { index: 0, .. })
        ));
        assert_eq!(
            Family::Homo2.paths(&[10.0, 40.0]).unwrap(),
            vec![PathSpec::new(10.0, 40.0); 2]
        );
    }

    #[test]
    fn family_names_round_trip() {
        for f in Family::ALL {
            assert_eq!(f.to_string().parse::<Family>().unwrap(), f);
        }
    }

    proptest! {
        #[test]
        fn hetero_budgets_are_exact(w in prop::collection::vec(0.1f64..=0.9, 6)) {
            let p2 = Family::Hetero2.paths(&w[..2]).unwrap();
            let p3 = Family::Hetero3.paths(&w).unwrap();
            for (paths, bw, rtt) in [(p2, HETERO2_TOTAL_BANDWIDTH_MBPS, HETERO2_TOTAL_RTT_MS), (p3, HETERO3_TOTAL_BANDWIDTH_MBPS, HETERO3_TOTAL_RTT_MS)] {
                let sbw: f64 = paths.iter().map(|p| p.bandwidth_mbps).sum();
                let srtt: f64 = paths.iter().map(|p| p.rtt_ms).sum();
                prop_assert!(close(sbw, bw), "{sbw}");
                prop_assert!(close(srtt, rtt), "{srtt}");
                prop_assert!(paths.iter().all(|p| p.bandwidth_mbps > 0.0 && p.rtt_ms > 0.0));
            }
        }
    }
}
