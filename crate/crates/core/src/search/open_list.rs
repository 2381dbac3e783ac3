use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use super::{NodeId, SearchError};
use crate::dac::ListFeatures;
use crate::heuristics::HeuristicValue;

/// A queued node. Ordered by `(h, seq)`, so equal values pop first-in-first-out.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct OpenListEntry {
    pub h: u64,
    pub seq: u64,
    pub node: NodeId,
}

/// Multiset of the finite values of the live entries in one open list.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct OpenListStats {
    values: BTreeMap<u64, u64>,
    count: u64,
    sum: u128,
    sum_of_squares: u128,
}

impl OpenListStats {
    pub fn insert(&mut self, h: u64) {
        *self.values.entry(h).or_insert(0) += 1;
        self.count += 1;
        self.sum += h as u128;
        self.sum_of_squares += (h as u128) * (h as u128);
    }

    /// Removes one occurrence of `h`; false if it was not present.
    pub fn remove(&mut self, h: u64) -> bool {
        match self.values.get_mut(&h) {
            None => false,
            Some(c) => {
                *c -= 1;
                if *c == 0 {
                    self.values.remove(&h);
                }
                self.count -= 1;
                self.sum -= h as u128;
                self.sum_of_squares -= (h as u128) * (h as u128);
                true
            }
        }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn min(&self) -> Option<u64> {
        self.values.keys().next().copied()
    }

    pub fn max(&self) -> Option<u64> {
        self.values.keys().next_back().copied()
    }

    pub fn sum(&self) -> u128 {
        self.sum
    }

    pub fn sum_of_squares(&self) -> u128 {
        self.sum_of_squares
    }

    /// Max, min, mean, population variance and count; zeros when empty.
    pub fn features(&self) -> ListFeatures {
        if self.count == 0 {
            return ListFeatures::default();
        }
        let n = self.count as u128;
        // n * Σh² - (Σh)² is exact and never negative
        let spread = n * self.sum_of_squares - self.sum * self.sum;
        ListFeatures {
            max: self.max().unwrap() as f64,
            min: self.min().unwrap() as f64,
            mean: self.sum as f64 / self.count as f64,
            variance: (spread as f64 / (n * n) as f64).max(0.0),
            count: self.count as f64,
        }
    }
}

/// One min-heap per heuristic plus exact statistics of the live entries.
///
/// Entries of expanded nodes stay in the heaps and are skipped when they
/// surface; the statistics drop them immediately via [`OpenLists::remove_from_stats`].
#[derive(Debug, Clone)]
pub struct OpenLists {
    heaps: Vec<BinaryHeap<Reverse<OpenListEntry>>>,
    stats: Vec<OpenListStats>,
    next_seq: u64,
}

impl OpenLists {
    pub fn new(n: usize) -> Self {
        Self { heaps: vec![BinaryHeap::new(); n], stats: vec![OpenListStats::default(); n], next_seq: 0 }
    }

    pub fn len(&self) -> usize {
        self.heaps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stats.iter().all(OpenListStats::is_empty)
    }

    pub fn stats(&self) -> &[OpenListStats] {
        &self.stats
    }

    /// Adds `node` to every list where its value is finite. Returns the
    /// number of lists it entered.
    pub fn insert(&mut self, node: NodeId, h_values: &[HeuristicValue]) -> usize {
        debug_assert_eq!(h_values.len(), self.heaps.len());
        let mut inserted = 0;
        for (i, hv) in h_values.iter().enumerate() {
            if let HeuristicValue::Finite(h) = *hv {
                self.heaps[i].push(Reverse(OpenListEntry { h, seq: self.next_seq, node }));
                self.stats[i].insert(h);
                self.next_seq += 1;
                inserted += 1;
            }
        }
        inserted
    }

    /// Drops the values of an expanded node from the statistics of every list.
    pub fn remove_from_stats(&mut self, h_values: &[HeuristicValue]) {
        for (i, hv) in h_values.iter().enumerate() {
            if let HeuristicValue::Finite(h) = *hv {
                let removed = self.stats[i].remove(h);
                debug_assert!(removed, "value {h} missing from list {i}");
            }
        }
    }

    /// Pops the best live entry of list `requested`. When that list has no
    /// live entry the next nonempty list in cyclic order is used instead.
    /// Returns the index of the list actually popped from.
    pub fn select_and_pop(
        &mut self,
        requested: usize,
        is_stale: impl Fn(NodeId) -> bool,
    ) -> Result<(usize, OpenListEntry), SearchError> {
        let n = self.heaps.len();
        for offset in 0..n {
            let idx = (requested + offset) % n;
            let heap = &mut self.heaps[idx];
            while let Some(Reverse(entry)) = heap.pop() {
                if !is_stale(entry.node) {
                    return Ok((idx, entry));
                }
            }
        }
        Err(SearchError::AllListsEmpty)
    }

    /// Statistics rebuilt from scratch over the heap entries that are not stale.
    pub fn recompute_stats(&self, is_stale: impl Fn(NodeId) -> bool) -> Vec<OpenListStats> {
        self.heaps
            .iter()
            .map(|heap| {
                let mut s = OpenListStats::default();
                for Reverse(e) in heap.iter() {
                    if !is_stale(e.node) {
                        s.insert(e.h);
                    }
                }
                s
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use HeuristicValue::{Finite, Infinite};

    #[test]
    fn fifo_among_equal_values() {
        let mut lists = OpenLists::new(1);
        lists.insert(10, &[Finite(3)]);
        lists.insert(11, &[Finite(3)]);
        lists.insert(12, &[Finite(1)]);
        let pop = |l: &mut OpenLists| l.select_and_pop(0, |_| false).unwrap().1.node;
        assert_eq!(pop(&mut lists), 12);
        assert_eq!(pop(&mut lists), 10);
        assert_eq!(pop(&mut lists), 11);
    }

    #[test]
    fn earlier_sequence_pops_first() {
        let mut lists = OpenLists::new(1);
        lists.heaps[0].push(Reverse(OpenListEntry { h: 3, seq: 5, node: 1 }));
        lists.heaps[0].push(Reverse(OpenListEntry { h: 3, seq: 2, node: 2 }));
        assert_eq!(lists.select_and_pop(0, |_| false).unwrap().1.seq, 2);
    }

    #[test]
    fn infinite_values_are_excluded() {
        let mut lists = OpenLists::new(2);
        assert_eq!(lists.insert(0, &[Finite(5), Infinite]), 1);
        assert_eq!(lists.stats()[0].count(), 1);
        assert!(lists.stats()[1].is_empty());
        assert_eq!(lists.insert(1, &[Infinite, Infinite]), 0);
    }

    #[test]
    fn stale_only_list_falls_back_to_next() {
        let mut lists = OpenLists::new(3);
        lists.insert(0, &[Finite(1), Infinite, Infinite]);
        lists.insert(1, &[Infinite, Infinite, Finite(4)]);
        let (used, e) = lists.select_and_pop(0, |n| n == 0).unwrap();
        assert_eq!((used, e.node), (2, 1));
        assert!(matches!(lists.select_and_pop(1, |_| true), Err(SearchError::AllListsEmpty)));
    }

    #[test]
    fn stats_track_removals() {
        let mut lists = OpenLists::new(2);
        lists.insert(0, &[Finite(3), Finite(4)]);
        lists.insert(1, &[Finite(5), Finite(3)]);
        lists.remove_from_stats(&[Finite(3), Finite(4)]);
        assert_eq!(lists.stats()[0].min(), Some(5));
        assert_eq!(lists.stats()[1].max(), Some(3));
        assert_eq!(lists.recompute_stats(|n| n == 0), lists.stats());
    }
}
