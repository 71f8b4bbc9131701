use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{AckError, RangeSet};

/// Cap on additional ACK blocks per ACK(_MP) frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum AbLimit {
    Limited(u32),
    Unlimited,
}

impl AbLimit {
    /// Maximum ranges a frame may carry (the first range plus the blocks).
    pub fn max_ranges(self) -> usize {
        match self {
            AbLimit::Limited(n) => n as usize + 1,
            AbLimit::Unlimited => usize::MAX,
        }
    }

    pub fn is_saturated_by(self, n_ranges: usize) -> bool {
        matches!(self, AbLimit::Limited(n) if n_ranges == n as usize + 1)
    }
}

impl Default for AbLimit {
    fn default() -> Self {
        AbLimit::Limited(32)
    }
}

impl fmt::Display for AbLimit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AbLimit::Limited(n) => write!(f, "{n}"),
            AbLimit::Unlimited => f.write_str("inf"),
        }
    }
}

impl FromStr for AbLimit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "inf" | "unlimited" => Ok(AbLimit::Unlimited),
            n => n
                .parse()
                .map(AbLimit::Limited)
                .map_err(|_| format!("invalid ACK block limit `{n}`")),
        }
    }
}

impl From<AbLimit> for String {
    fn from(v: AbLimit) -> String {
        v.to_string()
    }
}

impl TryFrom<String> for AbLimit {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        s.parse()
    }
}

/// Which ranges fill the slots left after the mandatory largest range.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RangeSelection {
    /// Ranges closest to the largest acknowledged packet number.
    #[default]
    LargestFirst,
    /// The lowest ranges.
    LowestFirst,
}

impl fmt::Display for RangeSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RangeSelection::LargestFirst => "largest-first",
            RangeSelection::LowestFirst => "lowest-first",
        })
    }
}

impl FromStr for RangeSelection {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "largest-first" => Ok(RangeSelection::LargestFirst),
            "lowest-first" => Ok(RangeSelection::LowestFirst),
            other => Err(format!("unknown range strategy `{other}`")),
        }
    }
}

/// Which path(s) carry the acknowledgment frames.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AckDispatch {
    /// The path the most recent packet arrived on.
    #[default]
    OnPath,
    /// A copy on every active path.
    Duplicate,
}

impl fmt::Display for AckDispatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AckDispatch::OnPath => "on-path",
            AckDispatch::Duplicate => "duplicate",
        })
    }
}

impl FromStr for AckDispatch {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "on-path" => Ok(AckDispatch::OnPath),
            "duplicate" | "duplicate-all-paths" => Ok(AckDispatch::Duplicate),
            other => Err(format!("unknown ACK dispatch `{other}`")),
        }
    }
}

pub const DEFAULT_MAX_ACK_DELAY: Duration = Duration::from_millis(25);
pub const DEFAULT_PACKET_THRESHOLD: u64 = 2;
/// Packet threshold requested through ACK_FREQUENCY once reordering is seen.
pub const REORDER_PACKET_THRESHOLD: u64 = 10;

/// Receiver acknowledgment strategy.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AckPolicy {
    pub ab_limit: AbLimit,
    pub selection: RangeSelection,
    pub dispatch: AckDispatch,
    /// Ack-eliciting packets per space that force an immediate ACK.
    pub packet_threshold: u64,
    #[serde(with = "duration_micros")]
    pub max_ack_delay: Duration,
    /// Acknowledge every path's space whenever two new packets arrive on any path.
    pub pquic_mode: bool,
    /// Accept (as receiver) and send (as data sender) ACK_FREQUENCY frames.
    pub ack_frequency: bool,
}

impl Default for AckPolicy {
    fn default() -> Self {
        AckPolicy {
            ab_limit: AbLimit::default(),
            selection: RangeSelection::default(),
            dispatch: AckDispatch::default(),
            packet_threshold: DEFAULT_PACKET_THRESHOLD,
            max_ack_delay: DEFAULT_MAX_ACK_DELAY,
            pquic_mode: false,
            ack_frequency: true,
        }
    }
}

mod duration_micros {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_micros() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_micros)
    }
}

/// Picks at most `ab_limit + 1` ranges to advertise, returned in descending
/// packet number order as the wire format requires.
///
/// The range holding the largest received packet number is always present so
/// the frame's Largest Acknowledged stays truthful.
pub fn select_ranges(
    set: &RangeSet,
    ab_limit: AbLimit,
    selection: RangeSelection,
) -> Result<Vec<(u64, u64)>, AckError> {
    let top = set
        .iter()
        .next_back()
        .ok_or(AckError::NothingToAcknowledge)?;
    let slots = ab_limit.max_ranges().min(set.len());
    let mut out = Vec::with_capacity(slots);
    out.push(top);
    match selection {
        RangeSelection::LargestFirst => {
            out.extend(set.iter().rev().skip(1).take(slots - 1));
        }
        RangeSelection::LowestFirst => {
            let mut lowest: Vec<_> = set.iter().take(slots - 1).collect();
            lowest.reverse();
            out.extend(lowest);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn figure_one_set() -> RangeSet {
        [0, 1, 2, 3, 5, 7].into_iter().collect()
    }

    #[test]
    fn largest_first_takes_top_ranges() {
        let got = select_ranges(
            &figure_one_set(),
            AbLimit::Limited(1),
            RangeSelection::LargestFirst,
        )
        .unwrap();
        assert_eq!(got, vec![(7, 7), (5, 5)]);
    }

    #[test]
    fn lowest_first_keeps_largest_then_lowest() {
        let got = select_ranges(
            &figure_one_set(),
            AbLimit::Limited(1),
            RangeSelection::LowestFirst,
        )
        .unwrap();
        assert_eq!(got, vec![(7, 7), (0, 3)]);
    }

    #[test]
    fn single_range_either_strategy() {
        let mut set = RangeSet::new();
        set.insert_range(0, 9);
        for sel in [RangeSelection::LargestFirst, RangeSelection::LowestFirst] {
            assert_eq!(
                select_ranges(&set, AbLimit::Limited(0), sel).unwrap(),
                vec![(0, 9)]
            );
        }
    }

    #[test]
    fn empty_set_errors() {
        assert_eq!(
            select_ranges(
                &RangeSet::new(),
                AbLimit::Unlimited,
                RangeSelection::LargestFirst
            ),
            Err(AckError::NothingToAcknowledge)
        );
    }

    #[test]
    fn unlimited_takes_everything_descending() {
        let got = select_ranges(
            &figure_one_set(),
            AbLimit::Unlimited,
            RangeSelection::LowestFirst,
        )
        .unwrap();
        assert_eq!(got, vec![(7, 7), (5, 5), (0, 3)]);
    }

    #[test]
    fn ab_limit_parse_and_display() {
        assert_eq!("inf".parse::<AbLimit>().unwrap(), AbLimit::Unlimited);
        assert_eq!("4".parse::<AbLimit>().unwrap(), AbLimit::Limited(4));
        assert!("four".parse::<AbLimit>().is_err());
        assert_eq!(AbLimit::Limited(32).to_string(), "32");
        assert_eq!(AbLimit::Limited(32).max_ranges(), 33);
        assert!(AbLimit::Limited(4).is_saturated_by(5));
        assert!(!AbLimit::Unlimited.is_saturated_by(5));
    }
}
