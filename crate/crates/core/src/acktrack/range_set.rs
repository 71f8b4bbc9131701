use std::collections::BTreeMap;
use std::ops::Bound::{Excluded, Included, Unbounded};

/// Ordered set of disjoint, non-adjacent inclusive `[lo, hi]` intervals.
///
/// Used for received packet numbers and for stream byte offsets alike.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RangeSet {
    // lo -> hi
    map: BTreeMap<u64, u64>,
}

impl RangeSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Number of intervals.
    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn min(&self) -> Option<u64> {
        self.map.keys().next().copied()
    }

    pub fn max(&self) -> Option<u64> {
        self.map.values().next_back().copied()
    }

    pub fn contains(&self, v: u64) -> bool {
        self.interval_of(v).is_some()
    }

    /// The interval holding `v`.
    pub fn interval_of(&self, v: u64) -> Option<(u64, u64)> {
        self.map
            .range(..=v)
            .next_back()
            .filter(|(_, &hi)| hi >= v)
            .map(|(&lo, &hi)| (lo, hi))
    }

    /// Inserts `v`; returns false if it was already present.
    pub fn insert(&mut self, v: u64) -> bool {
        self.insert_range(v, v)
    }

    /// Inserts `[lo, hi]`; returns false if it was already fully covered.
    pub fn insert_range(&mut self, lo: u64, hi: u64) -> bool {
        assert!(lo <= hi, "inverted range [{lo}, {hi}]");
        let mut new_lo = lo;
        let mut new_hi = hi;
        if let Some((&s, &e)) = self.map.range(..=lo).next_back() {
            if e >= hi {
                return false;
            }
            if e.saturating_add(1) >= lo {
                new_lo = s;
                new_hi = new_hi.max(e);
                self.map.remove(&s);
            }
        }
        let upper = hi.saturating_add(1);
        let absorbed: Vec<u64> = self
            .map
            .range((Included(lo), Included(upper)))
            .map(|(&s, _)| s)
            .collect();
        for s in absorbed {
            let e = self.map.remove(&s).expect("key just listed");
            new_hi = new_hi.max(e);
        }
        self.map.insert(new_lo, new_hi);
        true
    }

    /// Removes every value in `[lo, hi]`.
    pub fn remove_range(&mut self, lo: u64, hi: u64) {
        assert!(lo <= hi, "inverted range [{lo}, {hi}]");
        if let Some((&s, &e)) = self.map.range(..lo).next_back() {
            if e >= lo {
                self.map.insert(s, lo - 1);
                if e > hi {
                    self.map.insert(hi + 1, e);
                    return;
                }
            }
        }
        let inside: Vec<u64> = self
            .map
            .range((Included(lo), Included(hi)))
            .map(|(&s, _)| s)
            .collect();
        for s in inside {
            let e = self.map.remove(&s).expect("key just listed");
            if e > hi {
                self.map.insert(hi + 1, e);
            }
        }
    }

    /// Parts of `[lo, hi]` not covered by the set, ascending.
    pub fn uncovered(&self, lo: u64, hi: u64) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        let mut cursor = lo;
        let start = match self.map.range(..=lo).next_back() {
            Some((&s, _)) => Included(s),
            None => Unbounded,
        };
        for (&s, &e) in self.map.range((start, Included(hi))) {
            if e < cursor {
                continue;
            }
            if s > cursor {
                out.push((cursor, s - 1));
            }
            if e >= hi {
                return out;
            }
            cursor = e + 1;
        }
        out.push((cursor, hi));
        out
    }

    /// Total number of values covered.
    pub fn covered(&self) -> u64 {
        self.map.iter().map(|(&lo, &hi)| hi - lo + 1).sum()
    }

    /// Intervals in ascending order.
    pub fn iter(&self) -> impl DoubleEndedIterator<Item = (u64, u64)> + '_ {
        self.map.iter().map(|(&lo, &hi)| (lo, hi))
    }

    /// Intervals strictly above `v`, ascending.
    pub fn iter_above(&self, v: u64) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.map
            .range((Excluded(v), Unbounded))
            .map(|(&lo, &hi)| (lo, hi))
    }
}

impl FromIterator<u64> for RangeSet {
    fn from_iter<I: IntoIterator<Item = u64>>(iter: I) -> Self {
        let mut set = RangeSet::new();
        for v in iter {
            set.insert(v);
        }
        set
    }
}
