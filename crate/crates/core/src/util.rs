//! Small numeric and selection helpers shared across modules.

use std::cmp::Reverse;
use std::collections::BTreeSet;

use rand::Rng;

use crate::model::ItemId;

/// Compensated (Kahan) summation; keeps long positive sums accurate to a few
/// ulps regardless of length.
pub(crate) fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut carry = 0.0;
    for v in values {
        let y = v - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}

/// SplitMix64 finalizer; the fixed 64-bit mixing function used to derive
/// per-replication and per-component seeds from a master seed.
pub(crate) fn mix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Per-item integer counts with an ordering index, so the top-`c` items by
/// (count descending, ID ascending) are available in `O(c log L)`.
#[derive(Clone, Debug)]
pub(crate) struct RankedCounts {
    counts: Vec<u64>,
    // (count, Reverse(id)): reverse iteration yields count descending and,
    // within a count, ID ascending.
    order: BTreeSet<(u64, Reverse<u32>)>,
}

impl RankedCounts {
    pub fn new(library_size: u32) -> Self {
        let counts = vec![0u64; library_size as usize];
        let order = (1..=library_size).map(|id| (0u64, Reverse(id))).collect();
        Self { counts, order }
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn increment(&mut self, item: ItemId) {
        let c = &mut self.counts[item.index()];
        let removed = self.order.remove(&(*c, Reverse(item.0)));
        debug_assert!(removed);
        *c += 1;
        self.order.insert((*c, Reverse(item.0)));
    }

    pub fn decrement(&mut self, item: ItemId) {
        let c = &mut self.counts[item.index()];
        debug_assert!(*c > 0);
        let removed = self.order.remove(&(*c, Reverse(item.0)));
        debug_assert!(removed);
        *c -= 1;
        self.order.insert((*c, Reverse(item.0)));
    }

    /// Top `c` items by (count desc, ID asc), including zero-count items.
    pub fn top(&self, c: usize) -> Vec<ItemId> {
        self.order
            .iter()
            .rev()
            .take(c)
            .map(|&(_, Reverse(id))| ItemId(id))
            .collect()
    }

    /// Like [`RankedCounts::top`] but only items that appear at least once.
    pub fn top_present(&self, c: usize) -> Vec<ItemId> {
        self.order
            .iter()
            .rev()
            .take_while(|&&(count, _)| count > 0)
            .take(c)
            .map(|&(_, Reverse(id))| ItemId(id))
            .collect()
    }

    /// Number of items with a nonzero count.
    pub fn present(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// Floors every count to half its value and rebuilds the index.
    pub fn halve(&mut self) {
        for c in &mut self.counts {
            *c /= 2;
        }
        self.order = self
            .counts
            .iter()
            .enumerate()
            .map(|(i, &c)| (c, Reverse(i as u32 + 1)))
            .collect();
    }
}

/// Selects the `c` best items by (score descending, ID ascending) from an
/// arbitrary scored iterator. Returns the winners sorted by ID.
pub(crate) fn top_by_score(scored: impl Iterator<Item = (f64, ItemId)>, c: usize) -> Vec<ItemId> {
    // "Worse" = (lower score, higher id); keep the c best in a min-heap of
    // its Reverse.
    #[derive(PartialEq)]
    struct Entry(f64, u32);
    impl Eq for Entry {}
    impl PartialOrd for Entry {
        fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Entry {
        fn cmp(&self, other: &Self) -> std::cmp::Ordering {
            self.0.total_cmp(&other.0).then(other.1.cmp(&self.1))
        }
    }

    let mut heap = std::collections::BinaryHeap::with_capacity(c + 1);
    for (score, item) in scored {
        debug_assert!(!score.is_nan());
        heap.push(Reverse(Entry(score, item.0)));
        if heap.len() > c {
            heap.pop();
        }
    }
    let mut ids: Vec<ItemId> = heap.into_iter().map(|Reverse(e)| ItemId(e.1)).collect();
    ids.sort_unstable();
    ids
}

/// Draws `k` distinct indices without replacement, each round proportional
/// to the remaining entries of `weights` (a chosen index's weight is removed
/// and the rest renormalized implicitly).
///
/// Weights must be non-negative with a strictly positive total; `k` must not
/// exceed the number of strictly positive weights.
pub(crate) fn weighted_sample_without_replacement(
    weights: &mut Vec<(f64, ItemId)>,
    k: usize,
    rng: &mut impl Rng,
) -> Vec<ItemId> {
    let mut picked = Vec::with_capacity(k);
    for _ in 0..k {
        let total: f64 = weights.iter().map(|(w, _)| *w).sum();
        assert!(
            total > 0.0 && total.is_finite(),
            "weighted draw requires a positive finite total, got {total}"
        );
        let mut u = rng.random::<f64>() * total;
        let mut chosen = weights.len() - 1;
        for (i, (w, _)) in weights.iter().enumerate() {
            u -= w;
            if u < 0.0 {
                chosen = i;
                break;
            }
        }
        picked.push(weights.swap_remove(chosen).1);
    }
    picked
}
