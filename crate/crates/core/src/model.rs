//! Domain types: items, popularity profiles, requests, caches, observations.

use thiserror::Error;

/// Errors produced by input validation and trace ingestion.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("item {item} outside library 1..={library_size}")]
    ItemOutOfRange { item: u64, library_size: u32 },
    #[error("trace parse error at line {line}: {message}")]
    TraceParse { line: usize, message: String },
    #[error("trace is empty")]
    EmptyTrace,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Identifier of a library item. IDs are 1-based: a library of size `L`
/// contains exactly the items `1..=L`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ItemId(pub u32);

impl ItemId {
    /// Zero-based index of this item into per-item arrays.
    #[inline]
    pub fn index(self) -> usize {
        debug_assert!(self.0 >= 1, "item IDs are 1-based");
        (self.0 - 1) as usize
    }

    /// Inverse of [`ItemId::index`].
    #[inline]
    pub fn from_index(index: usize) -> Self {
        ItemId(index as u32 + 1)
    }
}

impl std::fmt::Display for ItemId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        self.0.fmt(f)
    }
}

/// Stationary request distribution over a library of `L` items.
///
/// Entries are strictly positive and sum to 1 (tolerance 1e-12). The entry
/// at index `i` is the popularity of item `i + 1`. Profiles produced by the
/// generators are in canonical order (non-increasing); profiles that have
/// been mutated by a change schedule generally are not.
#[derive(Clone, Debug, PartialEq)]
pub struct PopularityProfile {
    probs: Vec<f64>,
}

impl PopularityProfile {
    /// Sum tolerance accepted by [`PopularityProfile::new`].
    pub const SUM_TOLERANCE: f64 = 1e-12;

    pub fn new(probs: Vec<f64>) -> Result<Self, Error> {
        if probs.is_empty() {
            return Err(Error::InvalidProfile("no entries".into()));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p <= 0.0) {
            return Err(Error::InvalidProfile(format!(
                "entries must be finite and strictly positive, got {p}"
            )));
        }
        let sum = crate::util::kahan_sum(probs.iter().copied());
        if (sum - 1.0).abs() > Self::SUM_TOLERANCE {
            return Err(Error::InvalidProfile(format!(
                "entries sum to {sum}, expected 1 within {}",
                Self::SUM_TOLERANCE
            )));
        }
        Ok(Self { probs })
    }

    /// Number of items `L`.
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn library_size(&self) -> u32 {
        self.probs.len() as u32
    }

    pub fn prob(&self, item: ItemId) -> f64 {
        self.probs[item.index()]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Whether entries are in canonical (non-increasing) order.
    pub fn is_canonical(&self) -> bool {
        self.probs.windows(2).all(|w| w[0] >= w[1])
    }

    /// Popularity of the `rank`-th most popular item (1-based rank).
    pub fn rank_prob(&self, rank: usize) -> f64 {
        let mut sorted = self.probs.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        sorted[rank - 1]
    }
}

/// A single request: which item, at which 1-based step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Request {
    pub item: ItemId,
    pub time: u64,
}

/// What a policy is told at the end of a step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObservationKind {
    /// The requested item's identity.
    Seen(ItemId),
    /// Only the fact that the cache was missed.
    Silent,
}

/// End-of-step feedback delivered to a policy.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Observation {
    pub kind: ObservationKind,
    pub time: u64,
}

/// Information regime a run operates under.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ObservationMode {
    /// Every request is revealed.
    Full,
    /// A request is revealed only when it hits the placed cache.
    Partial,
}

impl std::fmt::Display for ObservationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ObservationMode::Full => write!(f, "full"),
            ObservationMode::Partial => write!(f, "partial"),
        }
    }
}

/// A set of distinct cached items, stored sorted by ID.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CacheSet {
    items: Vec<ItemId>,
}

impl CacheSet {
    /// Builds a cache set, sorting and rejecting duplicates.
    pub fn new(mut items: Vec<ItemId>) -> Result<Self, Error> {
        items.sort_unstable();
        if items.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter("cache set has duplicate items".into()));
        }
        Ok(Self { items })
    }

    /// Builds from items already known to be sorted and distinct.
    pub(crate) fn from_sorted(items: Vec<ItemId>) -> Self {
        debug_assert!(items.windows(2).all(|w| w[0] < w[1]));
        Self { items }
    }

    /// The lowest-ID cache `{1, ..., c}`.
    pub fn lowest_ids(c: u32) -> Self {
        Self {
            items: (1..=c).map(ItemId).collect(),
        }
    }

    #[inline]
    pub fn contains(&self, item: ItemId) -> bool {
        self.items.binary_search(&item).is_ok()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[ItemId] {
        &self.items
    }

    pub fn iter(&self) -> impl Iterator<Item = ItemId> + '_ {
        self.items.iter().copied()
    }
}

impl std::fmt::Display for CacheSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (i, item) in self.items.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{item}")?;
        }
        write!(f, "}}")
    }
}

/// Maps a request to the signal a policy receives under the given regime.
///
/// Under [`ObservationMode::Full`] the request is always revealed; under
/// [`ObservationMode::Partial`] it is revealed exactly when it hits `cache`,
/// and a miss produces [`ObservationKind::Silent`].
pub fn observe_signal(
    request: Request,
    cache: &CacheSet,
    mode: ObservationMode,
    library_size: u32,
) -> Result<Observation, Error> {
    if request.item.0 < 1 || request.item.0 > library_size {
        return Err(Error::ItemOutOfRange {
            item: request.item.0 as u64,
            library_size,
        });
    }
    let kind = match mode {
        ObservationMode::Full => ObservationKind::Seen(request.item),
        ObservationMode::Partial => {
            if cache.contains(request.item) {
                ObservationKind::Seen(request.item)
            } else {
                ObservationKind::Silent
            }
        }
    };
    Ok(Observation {
        kind,
        time: request.time,
    })
}
