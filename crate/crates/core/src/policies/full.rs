//! Full-observation policies built on request frequency counts.

use std::collections::VecDeque;

use crate::model::{CacheSet, ItemId, Observation};
use crate::policies::{expect_seen, Policy};
use crate::util::{top_by_score, RankedCounts};

/// Classic frequency placement: cache the `C` items with the highest
/// all-time request counts, ties toward the lowest ID.
pub struct Lfu {
    counts: RankedCounts,
    total: u64,
    cache_size: usize,
    cache: CacheSet,
}

impl Lfu {
    pub fn new(library_size: u32, cache_size: u32, initial: CacheSet) -> Self {
        Self {
            counts: RankedCounts::new(library_size),
            total: 0,
            cache_size: cache_size as usize,
            cache: initial,
        }
    }

    /// All-time request counts by item index.
    pub fn counts(&self) -> &[u64] {
        self.counts.counts()
    }

    /// Total observations since the last halving (equals the step count
    /// while no halving has occurred).
    pub fn total(&self) -> u64 {
        self.total
    }

    /// Empirical popularity estimates `count / total` (zero before the
    /// first observation).
    pub fn empirical(&self) -> Vec<f64> {
        if self.total == 0 {
            return vec![0.0; self.counts.counts().len()];
        }
        let total = self.total as f64;
        self.counts.counts().iter().map(|&c| c as f64 / total).collect()
    }

    fn select(&mut self) {
        let mut items = self.counts.top(self.cache_size);
        items.sort_unstable();
        self.cache = CacheSet::from_sorted(items);
    }
}

impl Policy for Lfu {
    fn cache(&self) -> &CacheSet {
        &self.cache
    }

    fn observe(&mut self, observation: &Observation) {
        let item = expect_seen(observation);
        self.counts.increment(item);
        self.total += 1;
        self.select();
    }

    fn halve_counts(&mut self) {
        self.counts.halve();
        self.total = self.counts.counts().iter().sum();
        self.select();
    }

    fn counters_in_use(&self) -> usize {
        self.counts.present()
    }
}

/// Sliding-window frequency placement: cache the `C` items with the highest
/// counts over the last `w` requests.
pub struct Wlfu {
    window: VecDeque<ItemId>,
    window_length: usize,
    counts: RankedCounts,
    cache_size: usize,
    cache: CacheSet,
}

impl Wlfu {
    pub fn new(library_size: u32, cache_size: u32, window_length: usize, initial: CacheSet) -> Self {
        Self {
            window: VecDeque::with_capacity(window_length + 1),
            window_length,
            counts: RankedCounts::new(library_size),
            cache_size: cache_size as usize,
            cache: initial,
        }
    }

    /// The current window contents, oldest first.
    pub fn window_contents(&self) -> impl Iterator<Item = ItemId> + '_ {
        self.window.iter().copied()
    }
}

impl Policy for Wlfu {
    fn cache(&self) -> &CacheSet {
        &self.cache
    }

    fn observe(&mut self, observation: &Observation) {
        let item = expect_seen(observation);
        self.window.push_back(item);
        self.counts.increment(item);
        if self.window.len() > self.window_length {
            let expired = self.window.pop_front().expect("window is non-empty");
            self.counts.decrement(expired);
        }
        let mut items = self.counts.top(self.cache_size);
        items.sort_unstable();
        self.cache = CacheSet::from_sorted(items);
    }

    // The window is short-term memory; there are no long-run counts to age.
    fn halve_counts(&mut self) {}

    fn counters_in_use(&self) -> usize {
        self.counts.present()
    }
}

#[derive(Clone, Copy, Debug)]
struct BankEntry {
    /// Requests observed strictly after admission.
    count: u64,
    /// Virtual admission time: the estimate denominator is `now - start`.
    /// Halving moves `start` forward instead of tracking an explicit age.
    start: u64,
}

/// Windowed admission with a grow-only counter bank.
///
/// Each step the `C` most frequent items of the sliding window are admitted
/// to the bank (if absent). A banked item's popularity estimate is its
/// request count since admission divided by the time since admission; the
/// cache is the top `C` banked items by that estimate, padded with the
/// lowest unbanked IDs while the bank is small.
pub struct LfuLite {
    library_size: u32,
    cache_size: usize,
    window_length: usize,
    window: VecDeque<ItemId>,
    window_counts: RankedCounts,
    bank: Vec<Option<BankEntry>>,
    bank_order: Vec<ItemId>,
    now: u64,
    cache: CacheSet,
}

impl LfuLite {
    pub fn new(library_size: u32, cache_size: u32, window_length: usize, initial: CacheSet) -> Self {
        Self {
            library_size,
            cache_size: cache_size as usize,
            window_length,
            window: VecDeque::with_capacity(window_length + 1),
            window_counts: RankedCounts::new(library_size),
            bank: vec![None; library_size as usize],
            bank_order: Vec::new(),
            now: 0,
            cache: initial,
        }
    }

    /// Number of items ever admitted to the bank.
    pub fn bank_len(&self) -> usize {
        self.bank_order.len()
    }

    /// `(count, denominator)` for a banked item.
    pub fn bank_entry(&self, item: ItemId) -> Option<(u64, u64)> {
        self.bank[item.index()].map(|e| (e.count, self.now - e.start))
    }

    /// The popularity estimate of a banked item (zero at admission time).
    pub fn estimate(&self, item: ItemId) -> Option<f64> {
        self.bank[item.index()].map(|e| Self::ratio(e, self.now))
    }

    #[inline]
    fn ratio(entry: BankEntry, now: u64) -> f64 {
        let denominator = now - entry.start;
        if denominator == 0 {
            0.0
        } else {
            entry.count as f64 / denominator as f64
        }
    }

    fn select(&mut self) {
        let now = self.now;
        let bank = &self.bank;
        let scored = self
            .bank_order
            .iter()
            .map(|&i| (Self::ratio(bank[i.index()].expect("listed items are banked"), now), i));
        let mut items = top_by_score(scored, self.cache_size);
        if items.len() < self.cache_size {
            // Deterministic padding: lowest item IDs not yet banked. They
            // are disjoint from the selection, which is all banked.
            for id in 1..=self.library_size {
                if items.len() == self.cache_size {
                    break;
                }
                if self.bank[(id - 1) as usize].is_none() {
                    items.push(ItemId(id));
                }
            }
            items.sort_unstable();
        }
        self.cache = CacheSet::from_sorted(items);
    }
}

impl Policy for LfuLite {
    fn cache(&self) -> &CacheSet {
        &self.cache
    }

    fn observe(&mut self, observation: &Observation) {
        let item = expect_seen(observation);
        self.now += 1;

        self.window.push_back(item);
        self.window_counts.increment(item);
        if self.window.len() > self.window_length {
            let expired = self.window.pop_front().expect("window is non-empty");
            self.window_counts.decrement(expired);
        }

        // Admit this window's leaders. A freshly admitted item starts with
        // a zero count: only requests strictly after admission accumulate.
        for leader in self.window_counts.top_present(self.cache_size) {
            let slot = &mut self.bank[leader.index()];
            if slot.is_none() {
                *slot = Some(BankEntry { count: 0, start: self.now });
                self.bank_order.push(leader);
            }
        }

        if let Some(entry) = &mut self.bank[item.index()] {
            if entry.start < self.now {
                entry.count += 1;
            }
        }

        self.select();
    }

    fn halve_counts(&mut self) {
        for slot in self.bank.iter_mut().flatten() {
            slot.count /= 2;
            let age = self.now - slot.start;
            slot.start = self.now - (age / 2).max(1);
        }
        self.select();
    }

    fn counters_in_use(&self) -> usize {
        self.bank_order.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ObservationKind, ObservationMode, Request};
    use crate::policies::step;

    fn seen(item: u32, time: u64) -> Observation {
        Observation {
            kind: ObservationKind::Seen(ItemId(item)),
            time,
        }
    }

    #[test]
    fn lfu_counts_sum_to_step_count() {
        let mut lfu = Lfu::new(6, 2, CacheSet::lowest_ids(2));
        let requests = [3u32, 3, 1, 5, 3, 5];
        for (t, &r) in requests.iter().enumerate() {
            lfu.observe(&seen(r, t as u64 + 1));
            let total: u64 = lfu.counts().iter().sum();
            assert_eq!(total, t as u64 + 1);
            assert_eq!(lfu.total(), total);
        }
        // counts: 3 -> 3, 5 -> 2, 1 -> 1.
        assert_eq!(lfu.cache().items(), &[ItemId(3), ItemId(5)]);
        assert_eq!(lfu.counters_in_use(), 3);
    }

    #[test]
    fn lfu_breaks_ties_toward_lowest_id() {
        let mut lfu = Lfu::new(5, 2, CacheSet::lowest_ids(2));
        for (item, t) in [(4u32, 1u64), (2, 2), (5, 3)] {
            lfu.observe(&seen(item, t));
        }
        // Counts tied at 1 for {2, 4, 5}: pick 2 and 4.
        assert_eq!(lfu.cache().items(), &[ItemId(2), ItemId(4)]);
    }

    #[test]
    fn lfu_halving_floors_and_reselects() {
        let mut lfu = Lfu::new(3, 1, CacheSet::lowest_ids(1));
        let requests = [1u32, 1, 1, 1, 1, 1, 1, 1, 2, 2, 2, 2, 2, 3, 3, 3];
        for (t, &r) in requests.iter().enumerate() {
            lfu.observe(&seen(r, t as u64 + 1));
        }
        assert_eq!(lfu.counts(), &[8, 5, 3]);
        lfu.halve_counts();
        assert_eq!(lfu.counts(), &[4, 2, 1]);
        assert_eq!(lfu.total(), 7);
    }

    #[test]
    fn initial_cache_used_before_any_observation() {
        let policy = Lfu::new(10, 3, CacheSet::lowest_ids(3));
        assert_eq!(policy.cache().items(), &[ItemId(1), ItemId(2), ItemId(3)]);
    }

    #[test]
    fn wlfu_window_multiset_is_exact() {
        let mut wlfu = Wlfu::new(8, 2, 3, CacheSet::lowest_ids(2));
        let requests = [5u32, 6, 5, 7, 8, 8];
        for (t, &r) in requests.iter().enumerate() {
            wlfu.observe(&seen(r, t as u64 + 1));
            let expected: Vec<u32> = requests[..=t]
                .iter()
                .copied()
                .rev()
                .take(3)
                .rev()
                .collect();
            let window: Vec<u32> = wlfu.window_contents().map(|i| i.0).collect();
            assert_eq!(window, expected);
        }
    }

    #[test]
    fn wlfu_fills_ties_with_lowest_ids_when_window_is_short() {
        let mut wlfu = Wlfu::new(8, 2, 4, CacheSet::lowest_ids(2));
        wlfu.observe(&seen(5, 1));
        // Window = [5]; second slot goes to the lowest zero-count ID.
        assert_eq!(wlfu.cache().items(), &[ItemId(1), ItemId(5)]);
    }

    #[test]
    fn wlfu_forgets_expired_requests() {
        let mut wlfu = Wlfu::new(8, 1, 2, CacheSet::lowest_ids(1));
        for (item, t) in [(7u32, 1u64), (7, 2), (3, 3), (3, 4)] {
            wlfu.observe(&seen(item, t));
        }
        // Window = [3, 3]: item 7 fully expired.
        assert_eq!(wlfu.cache().items(), &[ItemId(3)]);
        assert_eq!(wlfu.counters_in_use(), 1);
    }

    #[test]
    fn lfu_lite_first_step_admits_and_caches_the_request() {
        let mut lite = LfuLite::new(10, 1, 5, CacheSet::lowest_ids(1));
        lite.observe(&seen(5, 1));
        assert_eq!(lite.bank_len(), 1);
        assert_eq!(lite.bank_entry(ItemId(5)), Some((0, 0)));
        assert_eq!(lite.cache().items(), &[ItemId(5)]);
    }

    #[test]
    fn lfu_lite_counts_start_strictly_after_admission() {
        let mut lite = LfuLite::new(10, 1, 50, CacheSet::lowest_ids(1));
        // Admission at t=1 with x=9; the admitting request is not counted.
        lite.observe(&seen(9, 1));
        assert_eq!(lite.bank_entry(ItemId(9)), Some((0, 0)));
        // Two follow-up requests at t=2,3 -> estimate 2/2 = 1.
        lite.observe(&seen(9, 2));
        lite.observe(&seen(9, 3));
        assert_eq!(lite.bank_entry(ItemId(9)), Some((2, 2)));
        assert_eq!(lite.estimate(ItemId(9)), Some(1.0));
    }

    #[test]
    fn lfu_lite_pads_with_lowest_unbanked_ids() {
        let mut lite = LfuLite::new(10, 3, 5, CacheSet::lowest_ids(3));
        lite.observe(&seen(7, 1));
        // Bank = {7}; pad with 1 and 2.
        assert_eq!(lite.cache().items(), &[ItemId(1), ItemId(2), ItemId(7)]);
    }

    #[test]
    fn lfu_lite_bank_only_grows() {
        let p = crate::workloads::zipf_profile(20, 1.0).unwrap();
        let trace = crate::workloads::sample_irm(&p, 400, 3);
        let mut lite = LfuLite::new(20, 3, 10, CacheSet::lowest_ids(3));
        let mut last = 0;
        for (t, &item) in trace.items().iter().enumerate() {
            let outcome = step(
                &mut lite,
                Request { item, time: t as u64 + 1 },
                ObservationMode::Full,
                20,
            )
            .unwrap();
            assert_eq!(outcome.placed.len(), 3);
            assert!(lite.bank_len() >= last);
            last = lite.bank_len();
        }
        assert!(last >= 3);
    }

    #[test]
    fn lfu_lite_halving_halves_counts_and_ages() {
        let mut lite = LfuLite::new(10, 1, 50, CacheSet::lowest_ids(1));
        // Admit item 9 at t=1, then request it 8 times (t=2..=9).
        lite.observe(&seen(9, 1));
        for t in 2..=9 {
            lite.observe(&seen(9, t));
        }
        assert_eq!(lite.bank_entry(ItemId(9)), Some((8, 8)));
        lite.halve_counts();
        assert_eq!(lite.bank_entry(ItemId(9)), Some((4, 4)));
    }

    #[test]
    fn lfu_lite_halved_denominator_floors_at_one() {
        let mut lite = LfuLite::new(10, 1, 50, CacheSet::lowest_ids(1));
        lite.observe(&seen(3, 1));
        assert_eq!(lite.bank_entry(ItemId(3)), Some((0, 0)));
        lite.halve_counts();
        assert_eq!(lite.bank_entry(ItemId(3)), Some((0, 1)));
        assert_eq!(lite.estimate(ItemId(3)), Some(0.0));
    }
}
