//! Genie baseline, regret accounting, popularity-gap structure, closed-form
//! bound calculators ([`bounds`]) and Monte Carlo drivers ([`mc`]).

pub mod bounds;
pub mod mc;

pub use bounds::{
    bound_lfu, bound_lfulite, bound_mps, bound_si, bound_wlfu_lower, dkw_envelope,
    expected_bank_curve, expected_bank_size, p_min, BoundReport,
};
pub use mc::{
    geometric_checkpoints, mc_regret, simulate_run, McCurve, RunSpec, Trajectory, WorkloadSpec,
};

use crate::model::{CacheSet, Error, ItemId, PopularityProfile, Request};
use crate::util::top_by_score;

/// The omniscient static placement: the `C` most popular items, ties broken
/// toward the lowest ID.
pub fn genie_set(profile: &PopularityProfile, cache_size: u32) -> CacheSet {
    let scored = profile
        .probs()
        .iter()
        .enumerate()
        .map(|(i, &p)| (p, ItemId::from_index(i)));
    CacheSet::from_sorted(top_by_score(scored, cache_size as usize))
}

/// One step of the regret sum: `1{x in genie} - 1{x in cache}`.
#[inline]
pub fn regret_increment(request: Request, genie: &CacheSet, cache: &CacheSet) -> i64 {
    i64::from(genie.contains(request.item)) - i64::from(cache.contains(request.item))
}

/// Running regret and hit accounting against a fixed genie placement.
#[derive(Clone, Debug)]
pub struct RegretLedger {
    genie: CacheSet,
    increments: Vec<i64>,
    cumulative: i64,
    policy_hits: u64,
    genie_hits: u64,
}

impl RegretLedger {
    pub fn new(genie: CacheSet) -> Self {
        Self {
            genie,
            increments: Vec::new(),
            cumulative: 0,
            policy_hits: 0,
            genie_hits: 0,
        }
    }

    pub fn genie(&self) -> &CacheSet {
        &self.genie
    }

    /// Records one request scored against the cache that was in place when
    /// it arrived; returns the step's regret increment.
    pub fn record(&mut self, request: Request, placed: &CacheSet) -> i64 {
        let increment = regret_increment(request, &self.genie, placed);
        debug_assert!((-1..=1).contains(&increment));
        self.increments.push(increment);
        self.cumulative += increment;
        self.policy_hits += u64::from(placed.contains(request.item));
        self.genie_hits += u64::from(self.genie.contains(request.item));
        increment
    }

    /// `R(t)` so far.
    pub fn cumulative(&self) -> i64 {
        self.cumulative
    }

    pub fn increments(&self) -> &[i64] {
        &self.increments
    }

    pub fn steps(&self) -> u64 {
        self.increments.len() as u64
    }

    pub fn policy_hits(&self) -> u64 {
        self.policy_hits
    }

    pub fn genie_hits(&self) -> u64 {
        self.genie_hits
    }

    pub fn policy_hit_rate(&self) -> f64 {
        if self.increments.is_empty() {
            0.0
        } else {
            self.policy_hits as f64 / self.increments.len() as f64
        }
    }
}

/// Popularity gaps around the cache boundary of a profile, computed on the
/// ranked (non-increasing) ordering.
#[derive(Clone, Debug)]
pub struct GapStructure {
    ranked: Vec<f64>,
    cache_size: usize,
}

impl GapStructure {
    /// Requires `1 <= C < L` so that the boundary gap exists.
    pub fn new(profile: &PopularityProfile, cache_size: u32) -> Result<Self, Error> {
        let l = profile.len();
        let c = cache_size as usize;
        if c < 1 || c >= l {
            return Err(Error::InvalidParameter(format!(
                "gap structure needs 1 <= C < L, got C={c}, L={l}"
            )));
        }
        let mut ranked = profile.probs().to_vec();
        ranked.sort_by(|a, b| b.total_cmp(a));
        Ok(Self {
            ranked,
            cache_size: c,
        })
    }

    pub fn library_size(&self) -> u32 {
        self.ranked.len() as u32
    }

    pub fn cache_size(&self) -> u32 {
        self.cache_size as u32
    }

    /// Popularity of the rank-`C` item.
    pub fn mu_c(&self) -> f64 {
        self.ranked[self.cache_size - 1]
    }

    /// Popularity of the rank-`C+1` item.
    pub fn mu_c1(&self) -> f64 {
        self.ranked[self.cache_size]
    }

    /// The boundary gap `mu_C - mu_{C+1}`.
    pub fn delta_min(&self) -> f64 {
        self.mu_c() - self.mu_c1()
    }

    /// Pairwise gap `mu_j - mu_k` between a cached rank `j <= C` and an
    /// uncached rank `k > C` (both 1-based).
    pub fn pairwise(&self, j: usize, k: usize) -> f64 {
        assert!(
            1 <= j && j <= self.cache_size && self.cache_size < k && k <= self.ranked.len(),
            "pairwise gap needs j <= C < k"
        );
        self.ranked[j - 1] - self.ranked[k - 1]
    }

    /// Gap `mu_C - mu_j` of an uncached rank `j > C` to the cache boundary.
    pub fn gap_to_boundary(&self, j: usize) -> f64 {
        assert!(j > self.cache_size && j <= self.ranked.len());
        self.mu_c() - self.ranked[j - 1]
    }

    /// True when the boundary gap vanishes and the genie is non-unique
    /// (lowest-ID tie-break applies; constant-regret bounds are vacuous).
    pub fn is_degenerate(&self) -> bool {
        self.delta_min() <= 0.0
    }
}
