//! Partial-observation ("caching bandit") policies.
//!
//! These policies learn from hits only: a miss is a silent step carrying no
//! item identity, and by construction their state never depends on what the
//! missed request was.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Beta, Distribution, Gamma};

use crate::model::{CacheSet, ItemId, Observation, ObservationKind};
use crate::policies::Policy;
use crate::util::{kahan_sum, top_by_score, weighted_sample_without_replacement, RankedCounts};

/// Which placement rule fired on the last step of a threshold policy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlacementBranch {
    /// Enough items cleared the threshold; the best of them were cached.
    Exploit,
    /// The threshold set was short; the remainder was drawn by inverse
    /// squared-gap weights.
    Explore,
}

/// Posterior sampling over a Dirichlet mixture on the whole popularity
/// profile.
///
/// The belief starts as a single flat Dirichlet. A hit adds one count of the
/// seen item to every component; a silent step replaces each component by
/// its exact posterior sub-mixture over the uncached items. Identical
/// components are merged, and when the mixture still outgrows
/// `max_components` it is pruned by weight-proportional resampling.
pub struct CbFps {
    library_size: usize,
    cache_size: usize,
    max_components: usize,
    weights: Vec<f64>,
    /// Row-major `weights.len() x library_size` Dirichlet parameters,
    /// starting from the all-ones prior.
    alphas: Vec<u32>,
    cumulative: Vec<f64>,
    cumulative_dirty: bool,
    last_drift: f64,
    prunes: u64,
    rng: ChaCha12Rng,
    cache: CacheSet,
}

impl CbFps {
    pub fn new(
        library_size: u32,
        cache_size: u32,
        max_components: usize,
        initial: CacheSet,
        seed: u64,
    ) -> Self {
        Self {
            library_size: library_size as usize,
            cache_size: cache_size as usize,
            max_components,
            weights: vec![1.0],
            alphas: vec![1; library_size as usize],
            cumulative: vec![1.0],
            cumulative_dirty: false,
            last_drift: 0.0,
            prunes: 0,
            rng: ChaCha12Rng::seed_from_u64(seed),
            cache: initial,
        }
    }

    pub fn component_count(&self) -> usize {
        self.weights.len()
    }

    /// `(weight, dirichlet parameters)` of one mixture component.
    pub fn component(&self, index: usize) -> (f64, &[u32]) {
        let l = self.library_size;
        (self.weights[index], &self.alphas[index * l..(index + 1) * l])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `|sum(weights) - 1|` measured on the last mixture update, before the
    /// explicit renormalization.
    pub fn last_normalization_drift(&self) -> f64 {
        self.last_drift
    }

    /// How many times the component cap forced a resampling prune.
    pub fn prune_count(&self) -> u64 {
        self.prunes
    }

    /// Posterior probability that the next request misses the current
    /// placement: the weighted share of Dirichlet mass outside the cache.
    pub fn miss_probability(&self) -> f64 {
        let l = self.library_size;
        let mut p = 0.0;
        for (k, &w) in self.weights.iter().enumerate() {
            let row = &self.alphas[k * l..(k + 1) * l];
            let total: f64 = row.iter().map(|&a| a as f64).sum();
            let outside: f64 = row
                .iter()
                .enumerate()
                .filter(|(i, _)| !self.cache.contains(ItemId::from_index(*i)))
                .map(|(_, &a)| a as f64)
                .sum();
            p += w * outside / total;
        }
        p
    }

    fn expand_silent(&mut self) {
        let l = self.library_size;
        let outside: Vec<usize> = (0..l)
            .filter(|&i| !self.cache.contains(ItemId::from_index(i)))
            .collect();
        assert!(
            !outside.is_empty(),
            "silent step is impossible when the whole library is cached"
        );
        let old_count = self.weights.len();
        let expanded = old_count * outside.len();

        let (mut new_weights, mut new_alphas);
        if expanded <= self.max_components {
            new_weights = Vec::with_capacity(expanded);
            new_alphas = Vec::with_capacity(expanded * l);
            for k in 0..old_count {
                let row = &self.alphas[k * l..(k + 1) * l];
                let denom: f64 = outside.iter().map(|&j| row[j] as f64).sum();
                for &j in &outside {
                    new_weights.push(self.weights[k] * row[j] as f64 / denom);
                    new_alphas.extend_from_slice(row);
                    let start = new_alphas.len() - l;
                    new_alphas[start + j] += 1;
                }
            }
        } else {
            // Resample the expanded mixture without materializing it: each
            // (component, uncached item) pair is a candidate, drawn with
            // probability proportional to its posterior weight.
            self.prunes += 1;
            let mut pair_cumulative = Vec::with_capacity(expanded);
            let mut acc = 0.0;
            for k in 0..old_count {
                let row = &self.alphas[k * l..(k + 1) * l];
                let denom: f64 = outside.iter().map(|&j| row[j] as f64).sum();
                for &j in &outside {
                    acc += self.weights[k] * row[j] as f64 / denom;
                    pair_cumulative.push(acc);
                }
            }
            let total = acc;
            let share = total / self.max_components as f64;
            new_weights = Vec::with_capacity(self.max_components);
            new_alphas = Vec::with_capacity(self.max_components * l);
            for _ in 0..self.max_components {
                let u = self.rng.random::<f64>() * total;
                let pair = pair_cumulative.partition_point(|&c| c <= u).min(expanded - 1);
                let k = pair / outside.len();
                let j = outside[pair % outside.len()];
                let row = &self.alphas[k * l..(k + 1) * l];
                new_weights.push(share);
                new_alphas.extend_from_slice(row);
                let start = new_alphas.len() - l;
                new_alphas[start + j] += 1;
            }
        }

        let (merged_weights, merged_alphas) = merge_components(new_weights, new_alphas, l);
        let sum = kahan_sum(merged_weights.iter().copied());
        self.last_drift = (sum - 1.0).abs();
        self.weights = merged_weights.into_iter().map(|w| w / sum).collect();
        self.alphas = merged_alphas;
        self.cumulative_dirty = true;
    }

    fn select(&mut self) {
        if self.cumulative_dirty {
            self.cumulative.clear();
            let mut acc = 0.0;
            for &w in &self.weights {
                acc += w;
                self.cumulative.push(acc);
            }
            *self.cumulative.last_mut().expect("mixture is non-empty") = f64::MAX;
            self.cumulative_dirty = false;
        }
        let u = self.rng.random::<f64>();
        let k = self.cumulative.partition_point(|&c| c <= u);
        let l = self.library_size;
        let row = &self.alphas[k * l..(k + 1) * l];
        // A Dirichlet draw is a normalized vector of Gamma draws; the
        // normalizer is rank-irrelevant, so the raw draws are compared.
        let rng = &mut self.rng;
        let scored = row.iter().enumerate().map(|(i, &a)| {
            let g = Gamma::new(a as f64, 1.0).expect("shape >= 1");
            (g.sample(rng), ItemId::from_index(i))
        });
        self.cache = CacheSet::from_sorted(top_by_score(scored, self.cache_size));
    }
}

impl Policy for CbFps {
    fn cache(&self) -> &CacheSet {
        &self.cache
    }

    fn observe(&mut self, observation: &Observation) {
        match observation.kind {
            ObservationKind::Seen(item) if self.cache.contains(item) => {
                let l = self.library_size;
                let j = item.index();
                for k in 0..self.weights.len() {
                    self.alphas[k * l + j] += 1;
                }
            }
            ObservationKind::Seen(_) => {}
            ObservationKind::Silent => self.expand_silent(),
        }
        self.select();
    }

    fn halve_counts(&mut self) {
        for a in &mut self.alphas {
            *a = 1 + (*a - 1) / 2;
        }
        let l = self.library_size;
        let (weights, alphas) =
            merge_components(std::mem::take(&mut self.weights), std::mem::take(&mut self.alphas), l);
        let sum = kahan_sum(weights.iter().copied());
        self.weights = weights.into_iter().map(|w| w / sum).collect();
        self.alphas = alphas;
        self.cumulative_dirty = true;
        self.select();
    }

    fn counters_in_use(&self) -> usize {
        self.weights.len()
    }
}

/// Merges components with identical parameter vectors, summing weights.
/// Rows come back sorted lexicographically, so the result is deterministic
/// regardless of input order.
fn merge_components(weights: Vec<f64>, alphas: Vec<u32>, l: usize) -> (Vec<f64>, Vec<u32>) {
    let n = weights.len();
    debug_assert_eq!(alphas.len(), n * l);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_unstable_by(|&a, &b| alphas[a * l..(a + 1) * l].cmp(&alphas[b * l..(b + 1) * l]));
    let mut merged_weights = Vec::with_capacity(n);
    let mut merged_alphas = Vec::with_capacity(n * l);
    for &k in &order {
        let row = &alphas[k * l..(k + 1) * l];
        let same_as_last = merged_weights
            .last()
            .is_some_and(|_| &merged_alphas[merged_alphas.len() - l..] == row);
        if same_as_last {
            *merged_weights.last_mut().expect("non-empty") += weights[k];
        } else {
            merged_weights.push(weights[k]);
            merged_alphas.extend_from_slice(row);
        }
    }
    (merged_weights, merged_alphas)
}

/// Per-item Beta posterior sampling.
///
/// Every item carries a `Beta(alpha, beta)` belief starting from `(1, 1)`.
/// Each step one popularity sample is drawn per item and the top `C`
/// samples are cached. A hit on `x` adds a success to `x` and a failure to
/// every other cached item; silent steps leave the belief untouched.
pub struct CbMps {
    alpha: Vec<u64>,
    beta: Vec<u64>,
    cache_size: usize,
    rng: ChaCha12Rng,
    cache: CacheSet,
}

impl CbMps {
    pub fn new(library_size: u32, cache_size: u32, initial: CacheSet, seed: u64) -> Self {
        Self {
            alpha: vec![1; library_size as usize],
            beta: vec![1; library_size as usize],
            cache_size: cache_size as usize,
            rng: ChaCha12Rng::seed_from_u64(seed),
            cache: initial,
        }
    }

    /// `(alpha, beta)` belief parameters for an item.
    pub fn alpha_beta(&self, item: ItemId) -> (u64, u64) {
        (self.alpha[item.index()], self.beta[item.index()])
    }

    fn select(&mut self) {
        let rng = &mut self.rng;
        let alpha = &self.alpha;
        let beta = &self.beta;
        let scored = alpha.iter().zip(beta).enumerate().map(|(i, (&a, &b))| {
            let sample = if a == 1 && b == 1 {
                // Beta(1, 1) is uniform; skip the generic sampler.
                rng.random::<f64>()
            } else {
                Beta::new(a as f64, b as f64)
                    .expect("parameters are positive")
                    .sample(rng)
            };
            (sample, ItemId::from_index(i))
        });
        self.cache = CacheSet::from_sorted(top_by_score(scored, self.cache_size));
    }
}

impl Policy for CbMps {
    fn cache(&self) -> &CacheSet {
        &self.cache
    }

    fn observe(&mut self, observation: &Observation) {
        if let ObservationKind::Seen(item) = observation.kind {
            if self.cache.contains(item) {
                self.alpha[item.index()] += 1;
                for cached in self.cache.iter() {
                    if cached != item {
                        self.beta[cached.index()] += 1;
                    }
                }
            }
        }
        self.select();
    }

    fn halve_counts(&mut self) {
        for a in &mut self.alpha {
            *a = (*a / 2).max(1);
        }
        for b in &mut self.beta {
            *b = (*b / 2).max(1);
        }
        self.select();
    }

    fn counters_in_use(&self) -> usize {
        self.alpha
            .iter()
            .zip(&self.beta)
            .filter(|(&a, &b)| a + b > 2)
            .count()
    }
}

/// Threshold placement with side information.
///
/// Knows the boundary popularity `mu_c` and the gap `delta`. Each item's
/// popularity is estimated from the steps it spent cached (hit on the item
/// is a success, any other outcome a failure); items whose estimate clears
/// `mu_c - delta/2` form the admissible set. If it is large enough the best
/// of it are cached, otherwise the shortfall is drawn from the rest with
/// probability proportional to `1/(mu_c - estimate)^2`.
pub struct CbSi {
    alpha: Vec<u64>,
    beta: Vec<u64>,
    mu_c: f64,
    delta: f64,
    library_size: u32,
    cache_size: usize,
    rng: ChaCha12Rng,
    cache: CacheSet,
    last_branch: PlacementBranch,
}

impl CbSi {
    pub fn new(
        library_size: u32,
        cache_size: u32,
        mu_c: f64,
        delta: f64,
        initial: CacheSet,
        seed: u64,
    ) -> Self {
        Self {
            alpha: vec![0; library_size as usize],
            beta: vec![0; library_size as usize],
            mu_c,
            delta,
            library_size,
            cache_size: cache_size as usize,
            rng: ChaCha12Rng::seed_from_u64(seed),
            cache: initial,
            last_branch: PlacementBranch::Explore,
        }
    }

    /// Which branch produced the current placement.
    pub fn last_branch(&self) -> PlacementBranch {
        self.last_branch
    }

    /// The estimate used for placement: successes over trials, or the
    /// uninformed `1/L` before the first trial.
    pub fn estimate(&self, item: ItemId) -> f64 {
        self.estimate_by_index(item.index())
    }

    /// Number of trials recorded for an item, i.e. steps it spent cached.
    pub fn trials(&self, item: ItemId) -> u64 {
        self.alpha[item.index()] + self.beta[item.index()]
    }

    #[inline]
    fn estimate_by_index(&self, i: usize) -> f64 {
        let n = self.alpha[i] + self.beta[i];
        if n == 0 {
            1.0 / self.library_size as f64
        } else {
            self.alpha[i] as f64 / n as f64
        }
    }

    fn update_counts(&mut self, observation: &Observation) {
        // Every step, each cached item records one Bernoulli trial: success if
        // it was the requested item, failure otherwise. A silent step still
        // certifies that no cached item was requested, so it counts as a
        // failure for all of them. This keeps `alpha/n` an unbiased estimate
        // of an item's request probability over the steps it spent cached,
        // which is what the admission threshold is calibrated against.
        match observation.kind {
            ObservationKind::Seen(item) => {
                if self.cache.contains(item) {
                    self.alpha[item.index()] += 1;
                }
                for cached in self.cache.iter() {
                    if cached != item {
                        self.beta[cached.index()] += 1;
                    }
                }
            }
            ObservationKind::Silent => {
                for cached in self.cache.iter() {
                    self.beta[cached.index()] += 1;
                }
            }
        }
    }

    fn select(&mut self) {
        let threshold = self.mu_c - self.delta / 2.0;
        let mut admissible: Vec<(f64, ItemId)> = Vec::new();
        let mut rest: Vec<(f64, ItemId)> = Vec::new();
        for i in 0..self.library_size as usize {
            let estimate = self.estimate_by_index(i);
            let id = ItemId::from_index(i);
            if estimate >= threshold {
                admissible.push((estimate, id));
            } else {
                let gap = self.mu_c - estimate;
                // estimate < mu_c - delta/2 makes the gap strictly positive.
                debug_assert!(gap > 0.0);
                rest.push((1.0 / (gap * gap), id));
            }
        }
        if admissible.len() >= self.cache_size {
            self.cache =
                CacheSet::from_sorted(top_by_score(admissible.into_iter(), self.cache_size));
            self.last_branch = PlacementBranch::Exploit;
        } else {
            let shortfall = self.cache_size - admissible.len();
            let mut items: Vec<ItemId> = admissible.into_iter().map(|(_, id)| id).collect();
            items.extend(weighted_sample_without_replacement(
                &mut rest,
                shortfall,
                &mut self.rng,
            ));
            items.sort_unstable();
            self.cache = CacheSet::from_sorted(items);
            self.last_branch = PlacementBranch::Explore;
        }
    }
}

impl Policy for CbSi {
    fn cache(&self) -> &CacheSet {
        &self.cache
    }

    fn observe(&mut self, observation: &Observation) {
        self.update_counts(observation);
        self.select();
    }

    fn halve_counts(&mut self) {
        for a in &mut self.alpha {
            *a /= 2;
        }
        for b in &mut self.beta {
            *b /= 2;
        }
        self.select();
    }

    fn counters_in_use(&self) -> usize {
        self.alpha
            .iter()
            .zip(&self.beta)
            .filter(|(&a, &b)| a + b > 0)
            .count()
    }
}

/// [`CbSi`] restricted to a windowed counter bank.
///
/// A window over the *observed* (hit) requests is the only admission
/// channel: its per-step leaders earn counters, exactly as in the windowed
/// full-observation policy. Threshold placement runs over banked items;
/// unbanked items enter the exploration draw at the uninformed estimate
/// `1/L`, getting cached without being banked, and earn a counter only by
/// producing hits that put them among the window leaders.
pub struct CbSiLite {
    si: CbSi,
    window_length: usize,
    window: VecDeque<ItemId>,
    window_counts: RankedCounts,
    banked: Vec<bool>,
    bank_order: Vec<ItemId>,
}

impl CbSiLite {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        library_size: u32,
        cache_size: u32,
        window_length: usize,
        mu_c: f64,
        delta: f64,
        initial: CacheSet,
        seed: u64,
    ) -> Self {
        Self {
            si: CbSi::new(library_size, cache_size, mu_c, delta, initial, seed),
            window_length,
            window: VecDeque::with_capacity(window_length + 1),
            window_counts: RankedCounts::new(library_size),
            banked: vec![false; library_size as usize],
            bank_order: Vec::new(),
        }
    }

    pub fn bank_len(&self) -> usize {
        self.bank_order.len()
    }

    pub fn is_banked(&self, item: ItemId) -> bool {
        self.banked[item.index()]
    }

    pub fn last_branch(&self) -> PlacementBranch {
        self.si.last_branch
    }

    pub fn estimate(&self, item: ItemId) -> Option<f64> {
        self.banked[item.index()].then(|| self.si.estimate(item))
    }

    fn admit(&mut self, item: ItemId) {
        let slot = &mut self.banked[item.index()];
        if !*slot {
            *slot = true;
            self.bank_order.push(item);
        }
    }

    fn select(&mut self) {
        let si = &self.si;
        let threshold = si.mu_c - si.delta / 2.0;
        // Unbanked items carry the uninformed estimate. Degenerate profiles
        // can put 1/L at or above mu_c; floor the gap at delta/2 (the
        // smallest gap a banked candidate outside the admissible set can
        // have) to keep the draw well defined.
        let uninformed_gap =
            (si.mu_c - 1.0 / si.library_size as f64).max(si.delta / 2.0);
        let uninformed_weight = 1.0 / (uninformed_gap * uninformed_gap);
        let mut admissible: Vec<(f64, ItemId)> = Vec::new();
        let mut rest: Vec<(f64, ItemId)> = Vec::new();
        for (i, &banked) in self.banked.iter().enumerate() {
            let id = ItemId::from_index(i);
            if banked {
                let estimate = si.estimate_by_index(i);
                if estimate >= threshold {
                    admissible.push((estimate, id));
                } else {
                    let gap = si.mu_c - estimate;
                    debug_assert!(gap > 0.0);
                    rest.push((1.0 / (gap * gap), id));
                }
            } else {
                rest.push((uninformed_weight, id));
            }
        }
        if admissible.len() >= si.cache_size {
            self.si.cache =
                CacheSet::from_sorted(top_by_score(admissible.into_iter(), si.cache_size));
            self.si.last_branch = PlacementBranch::Exploit;
        } else {
            let shortfall = si.cache_size - admissible.len();
            let mut items: Vec<ItemId> = admissible.into_iter().map(|(_, id)| id).collect();
            // Drawn items are cached but earn a counter only by later
            // appearing among the window leaders; the bank stays small.
            items.extend(weighted_sample_without_replacement(
                &mut rest,
                shortfall,
                &mut self.si.rng,
            ));
            items.sort_unstable();
            self.si.cache = CacheSet::from_sorted(items);
            self.si.last_branch = PlacementBranch::Explore;
        }
    }
}

impl Policy for CbSiLite {
    fn cache(&self) -> &CacheSet {
        &self.si.cache
    }

    fn observe(&mut self, observation: &Observation) {
        self.si.update_counts(observation);
        if let ObservationKind::Seen(item) = observation.kind {
            // Only observed requests enter the window.
            self.window.push_back(item);
            self.window_counts.increment(item);
            if self.window.len() > self.window_length {
                let expired = self.window.pop_front().expect("window is non-empty");
                self.window_counts.decrement(expired);
            }
            for leader in self.window_counts.top_present(self.si.cache_size) {
                self.admit(leader);
            }
        }
        self.select();
    }

    fn halve_counts(&mut self) {
        for a in &mut self.si.alpha {
            *a /= 2;
        }
        for b in &mut self.si.beta {
            *b /= 2;
        }
        self.select();
    }

    fn counters_in_use(&self) -> usize {
        self.bank_order.len()
    }
}
