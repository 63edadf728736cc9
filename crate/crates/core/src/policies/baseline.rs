//! Reference policies that carry no learned counters.

use std::collections::VecDeque;

use crate::model::{CacheSet, ItemId, Observation};
use crate::policies::{expect_seen, Policy};

/// Least-recently-used eviction over a full-observation stream. Kept as a
/// comparison baseline; it sits outside the regret-bound machinery.
pub struct Lru {
    // Front = most recently used.
    order: VecDeque<ItemId>,
    cache: CacheSet,
}

impl Lru {
    pub fn new(initial: CacheSet) -> Self {
        Self {
            order: initial.iter().collect(),
            cache: initial,
        }
    }

    fn rebuild_cache(&mut self) {
        self.cache = CacheSet::new(self.order.iter().copied().collect())
            .expect("recency list holds distinct items");
    }
}

impl Policy for Lru {
    fn cache(&self) -> &CacheSet {
        &self.cache
    }

    fn observe(&mut self, observation: &Observation) {
        let item = expect_seen(observation);
        if let Some(position) = self.order.iter().position(|&i| i == item) {
            self.order.remove(position);
            self.order.push_front(item);
        } else {
            self.order.pop_back();
            self.order.push_front(item);
            self.rebuild_cache();
        }
    }

    fn halve_counts(&mut self) {}

    fn counters_in_use(&self) -> usize {
        0
    }
}

/// A placement that never changes, whatever it observes. Used for the
/// omniscient static cache and for adversarial fixed placements in tests.
pub struct FixedSet {
    cache: CacheSet,
}

impl FixedSet {
    pub fn new(cache: CacheSet) -> Self {
        Self { cache }
    }
}

impl Policy for FixedSet {
    fn cache(&self) -> &CacheSet {
        &self.cache
    }

    fn observe(&mut self, _observation: &Observation) {}

    fn halve_counts(&mut self) {}

    fn counters_in_use(&self) -> usize {
        0
    }
}
