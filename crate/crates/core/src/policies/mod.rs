//! Cache placement policies for both observation regimes.
//!
//! A policy always holds a committed placement ([`Policy::cache`]) chosen
//! before the next request arrives. Feeding it the end-of-step signal
//! ([`Policy::observe`]) updates its internal state and commits the
//! placement for the following step. Ties in every argmax are broken toward
//! the lowest item ID.

mod baseline;
mod full;
mod partial;

pub use baseline::{FixedSet, Lru};
pub use full::{Lfu, LfuLite, Wlfu};
pub use partial::{CbFps, CbMps, CbSi, CbSiLite, PlacementBranch};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::model::{
    observe_signal, CacheSet, Error, ItemId, Observation, ObservationKind, ObservationMode,
    Request,
};

/// An online cache placement policy.
pub trait Policy: Send {
    /// The placement committed for the upcoming step.
    fn cache(&self) -> &CacheSet;

    /// Ingests the end-of-step signal and commits the next placement.
    fn observe(&mut self, observation: &Observation);

    /// Halves learned counts in place (forgetting heuristic for
    /// non-stationary workloads). Policies without long-run counters treat
    /// this as a no-op. The next placement is re-derived from the halved
    /// state immediately.
    fn halve_counts(&mut self);

    /// Number of per-item counters (or mixture components) currently
    /// materialized; the memory-footprint metric reported by experiment
    /// curves.
    fn counters_in_use(&self) -> usize;
}

/// Outcome of driving one policy step.
#[derive(Clone, Debug)]
pub struct StepOutcome {
    /// The cache that was in place when the request arrived.
    pub placed: CacheSet,
    pub hit: bool,
    pub observation: Observation,
}

/// Drives one step: reads the committed placement, scores the request
/// against it, derives the observation for `mode`, and updates the policy.
pub fn step(
    policy: &mut dyn Policy,
    request: Request,
    mode: ObservationMode,
    library_size: u32,
) -> Result<StepOutcome, Error> {
    let placed = policy.cache().clone();
    let observation = observe_signal(request, &placed, mode, library_size)?;
    let hit = placed.contains(request.item);
    policy.observe(&observation);
    Ok(StepOutcome {
        placed,
        hit,
        observation,
    })
}

/// How the cache is filled before any observation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialCacheRule {
    /// Items `{1, ..., C}`.
    LowestIds,
    /// `C` distinct items drawn uniformly with a dedicated seed.
    Random,
}

impl InitialCacheRule {
    pub fn build(self, library_size: u32, cache_size: u32, seed: u64) -> CacheSet {
        match self {
            InitialCacheRule::LowestIds => CacheSet::lowest_ids(cache_size),
            InitialCacheRule::Random => {
                let mut rng = ChaCha12Rng::seed_from_u64(seed);
                let picked = rand::seq::index::sample(
                    &mut rng,
                    library_size as usize,
                    cache_size as usize,
                );
                let items = picked.into_iter().map(ItemId::from_index).collect();
                CacheSet::new(items).expect("sampled indices are distinct")
            }
        }
    }
}

impl std::fmt::Display for InitialCacheRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitialCacheRule::LowestIds => write!(f, "ids"),
            InitialCacheRule::Random => write!(f, "random"),
        }
    }
}

/// Default window length for windowed policies: `ceil(c^2 * ln l)`, clamped
/// to at least 1.
pub fn default_window(library_size: u32, cache_size: u32) -> usize {
    let w = (cache_size as f64).powi(2) * (library_size as f64).ln();
    (w.ceil() as usize).max(1)
}

/// Everything needed to construct a policy instance.
#[derive(Clone, Debug, PartialEq)]
pub enum PolicySpec {
    /// All-time frequency counts, top-`C` placement.
    Lfu,
    /// Sliding-window frequency counts.
    Wlfu { window: usize },
    /// Windowed admission into a grow-only counter bank.
    LfuLite { window: usize },
    /// Recency baseline: evict the least recently used item.
    Lru,
    /// A static cache that never changes (e.g. the omniscient placement).
    FixedSet { items: Vec<ItemId> },
    /// Posterior sampling over a Dirichlet mixture on the full profile.
    CbFps { max_components: usize },
    /// Per-item Beta posterior sampling.
    CbMps,
    /// Threshold/exploration placement given the boundary popularity
    /// `mu_c` and gap `delta`.
    CbSi { mu_c: f64, delta: f64 },
    /// [`PolicySpec::CbSi`] restricted to a windowed counter bank.
    CbSiLite { window: usize, mu_c: f64, delta: f64 },
}

impl PolicySpec {
    /// The observation regime this policy is designed for; `None` when
    /// either regime works.
    pub fn required_mode(&self) -> Option<ObservationMode> {
        match self {
            PolicySpec::Lfu | PolicySpec::Wlfu { .. } | PolicySpec::LfuLite { .. } | PolicySpec::Lru => {
                Some(ObservationMode::Full)
            }
            PolicySpec::CbFps { .. }
            | PolicySpec::CbMps
            | PolicySpec::CbSi { .. }
            | PolicySpec::CbSiLite { .. } => Some(ObservationMode::Partial),
            PolicySpec::FixedSet { .. } => None,
        }
    }

    /// Short stable name used in reports and output metadata.
    pub fn name(&self) -> &'static str {
        match self {
            PolicySpec::Lfu => "lfu",
            PolicySpec::Wlfu { .. } => "wlfu",
            PolicySpec::LfuLite { .. } => "lfu-lite",
            PolicySpec::Lru => "lru",
            PolicySpec::FixedSet { .. } => "fixed",
            PolicySpec::CbFps { .. } => "cb-fps",
            PolicySpec::CbMps => "cb-mps",
            PolicySpec::CbSi { .. } => "cb-si",
            PolicySpec::CbSiLite { .. } => "cb-si-lite",
        }
    }

    /// Builds a policy over `library_size` items with an initial placement
    /// of exactly `cache_size` items. `seed` feeds the policy's own RNG;
    /// deterministic policies ignore it.
    pub fn build(
        &self,
        library_size: u32,
        cache_size: u32,
        initial: CacheSet,
        seed: u64,
    ) -> Result<Box<dyn Policy>, Error> {
        if cache_size < 1 || cache_size > library_size {
            return Err(Error::InvalidParameter(format!(
                "cache size must lie in 1..={library_size}, got {cache_size}"
            )));
        }
        if initial.len() != cache_size as usize {
            return Err(Error::InvalidParameter(format!(
                "initial cache holds {} items, expected {cache_size}",
                initial.len()
            )));
        }
        if let Some(bad) = initial.iter().find(|i| i.0 < 1 || i.0 > library_size) {
            return Err(Error::ItemOutOfRange {
                item: bad.0 as u64,
                library_size,
            });
        }
        let validate_window = |window: usize| {
            if window == 0 {
                Err(Error::InvalidParameter("window length must be at least 1".into()))
            } else {
                Ok(())
            }
        };
        let validate_si = |mu_c: f64, delta: f64| {
            if !(mu_c > 0.0 && mu_c <= 1.0) || !(delta > 0.0 && delta <= mu_c) {
                Err(Error::InvalidParameter(format!(
                    "side information requires 0 < delta <= mu_c <= 1, got mu_c={mu_c}, delta={delta}"
                )))
            } else {
                Ok(())
            }
        };
        Ok(match *self {
            PolicySpec::Lfu => Box::new(Lfu::new(library_size, cache_size, initial)),
            PolicySpec::Wlfu { window } => {
                validate_window(window)?;
                Box::new(Wlfu::new(library_size, cache_size, window, initial))
            }
            PolicySpec::LfuLite { window } => {
                validate_window(window)?;
                Box::new(LfuLite::new(library_size, cache_size, window, initial))
            }
            PolicySpec::Lru => Box::new(Lru::new(initial)),
            PolicySpec::FixedSet { ref items } => {
                let set = CacheSet::new(items.clone())?;
                if set.len() != cache_size as usize {
                    return Err(Error::InvalidParameter(format!(
                        "fixed set holds {} items, expected {cache_size}",
                        set.len()
                    )));
                }
                Box::new(FixedSet::new(set))
            }
            PolicySpec::CbFps { max_components } => {
                if max_components == 0 {
                    return Err(Error::InvalidParameter(
                        "component cap must be at least 1".into(),
                    ));
                }
                Box::new(CbFps::new(library_size, cache_size, max_components, initial, seed))
            }
            PolicySpec::CbMps => Box::new(CbMps::new(library_size, cache_size, initial, seed)),
            PolicySpec::CbSi { mu_c, delta } => {
                validate_si(mu_c, delta)?;
                Box::new(CbSi::new(library_size, cache_size, mu_c, delta, initial, seed))
            }
            PolicySpec::CbSiLite { window, mu_c, delta } => {
                validate_window(window)?;
                validate_si(mu_c, delta)?;
                Box::new(CbSiLite::new(
                    library_size,
                    cache_size,
                    window,
                    mu_c,
                    delta,
                    initial,
                    seed,
                ))
            }
        })
    }
}

/// Unwraps the revealed item of a full-observation signal.
///
/// # Panics
///
/// Panics on a silent step: full-observation policies must only be driven
/// under [`ObservationMode::Full`].
pub(crate) fn expect_seen(observation: &Observation) -> ItemId {
    match observation.kind {
        ObservationKind::Seen(item) => item,
        ObservationKind::Silent => {
            panic!("full-observation policy received a silent step")
        }
    }
}
