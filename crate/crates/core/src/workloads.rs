//! Request workloads: synthetic generators and trace files.
//!
//! All generators draw through [`ChaCha12Rng`] seeded explicitly, so a
//! `(seed, config)` pair always reproduces the same request sequence.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::model::{Error, ItemId, PopularityProfile};
use crate::util::kahan_sum;

/// Builds the Zipf(`beta`) profile over `l` items:
/// `probs[i] = (i+1)^-beta / sum_j j^-beta`, non-increasing by construction.
pub fn zipf_profile(l: u32, beta: f64) -> Result<PopularityProfile, Error> {
    if l == 0 {
        return Err(Error::InvalidParameter("library size must be at least 1".into()));
    }
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "zipf exponent must be finite and non-negative, got {beta}"
        )));
    }
    let weights: Vec<f64> = (1..=l as u64).map(|i| (i as f64).powf(-beta)).collect();
    let norm = kahan_sum(weights.iter().copied());
    PopularityProfile::new(weights.into_iter().map(|w| w / norm).collect())
}

/// A finite request sequence over a library of `library_size` items.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RequestTrace {
    items: Vec<ItemId>,
    library_size: u32,
}

impl RequestTrace {
    pub fn new(items: Vec<ItemId>, library_size: u32) -> Result<Self, Error> {
        if items.is_empty() {
            return Err(Error::EmptyTrace);
        }
        if let Some(bad) = items.iter().find(|i| i.0 < 1 || i.0 > library_size) {
            return Err(Error::ItemOutOfRange {
                item: bad.0 as u64,
                library_size,
            });
        }
        Ok(Self {
            items,
            library_size,
        })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn library_size(&self) -> u32 {
        self.library_size
    }

    pub fn items(&self) -> &[ItemId] {
        &self.items
    }

    /// How many times each item appears, indexed by `ItemId::index`.
    pub fn empirical_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.library_size as usize];
        for item in &self.items {
            counts[item.index()] += 1;
        }
        counts
    }
}

/// Draws `t` i.i.d. requests from `profile` (the independent reference
/// model) using inverse-CDF sampling.
pub fn sample_irm(profile: &PopularityProfile, t: u64, seed: u64) -> RequestTrace {
    let mut source = IrmSource::new(profile, seed);
    let items = (0..t).map(|_| source.next_item()).collect();
    RequestTrace {
        items,
        library_size: profile.library_size(),
    }
}

/// Periodic popularity mutation: every `period` requests, the probability
/// values sitting at positions `1..=top_k` of the profile vector rotate by
/// `shift` places (position `r` inherits the value formerly at position
/// `((r-1+shift) mod top_k)+1`). The mutation fires before the first draw
/// of every period, including the first.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ChangeSchedule {
    pub period: u64,
    pub top_k: u32,
    pub shift: u32,
}

impl ChangeSchedule {
    pub fn validate(&self, library_size: u32) -> Result<(), Error> {
        if self.period == 0 {
            return Err(Error::InvalidParameter("change period must be at least 1".into()));
        }
        if self.top_k < 1 || self.top_k > library_size {
            return Err(Error::InvalidParameter(format!(
                "top_k must lie in 1..={library_size}, got {}",
                self.top_k
            )));
        }
        if self.shift < 1 || self.shift > self.top_k {
            return Err(Error::InvalidParameter(format!(
                "shift must lie in 1..={}, got {}",
                self.top_k, self.shift
            )));
        }
        Ok(())
    }
}

/// Materializes `t` requests from the periodically mutated profile.
pub fn change_trace(
    profile: &PopularityProfile,
    schedule: ChangeSchedule,
    t: u64,
    seed: u64,
) -> Result<RequestTrace, Error> {
    schedule.validate(profile.library_size())?;
    let mut source = ChangeSource::new(profile, schedule, seed);
    let items = (0..t).map(|_| source.next_item()).collect();
    Ok(RequestTrace {
        items,
        library_size: profile.library_size(),
    })
}

/// A stream of requests; the simulation driver pulls one item per step.
pub trait RequestSource {
    fn next_item(&mut self) -> ItemId;
    fn library_size(&self) -> u32;
}

/// Inverse-CDF sampler over a fixed profile.
pub struct IrmSource {
    cumulative: Vec<f64>,
    rng: ChaCha12Rng,
}

impl IrmSource {
    pub fn new(profile: &PopularityProfile, seed: u64) -> Self {
        Self {
            cumulative: cumulative_of(profile.probs()),
            rng: ChaCha12Rng::seed_from_u64(seed),
        }
    }
}

impl RequestSource for IrmSource {
    #[inline]
    fn next_item(&mut self) -> ItemId {
        ItemId::from_index(draw(&self.cumulative, &mut self.rng))
    }

    fn library_size(&self) -> u32 {
        self.cumulative.len() as u32
    }
}

/// Sampler over a profile mutated on a [`ChangeSchedule`].
pub struct ChangeSource {
    probs: Vec<f64>,
    cumulative: Vec<f64>,
    schedule: ChangeSchedule,
    steps_drawn: u64,
    rng: ChaCha12Rng,
}

impl ChangeSource {
    pub fn new(profile: &PopularityProfile, schedule: ChangeSchedule, seed: u64) -> Self {
        Self {
            probs: profile.probs().to_vec(),
            cumulative: Vec::new(),
            schedule,
            steps_drawn: 0,
            rng: ChaCha12Rng::seed_from_u64(seed),
        }
    }

    /// The profile as currently mutated.
    pub fn current_probs(&self) -> &[f64] {
        &self.probs
    }

    fn mutate(&mut self) {
        let k = self.schedule.top_k as usize;
        self.probs[..k].rotate_left(self.schedule.shift as usize % k);
        self.cumulative = cumulative_of(&self.probs);
    }
}

impl RequestSource for ChangeSource {
    fn next_item(&mut self) -> ItemId {
        if self.steps_drawn % self.schedule.period == 0 {
            self.mutate();
        }
        self.steps_drawn += 1;
        ItemId::from_index(draw(&self.cumulative, &mut self.rng))
    }

    fn library_size(&self) -> u32 {
        self.probs.len() as u32
    }
}

/// Sampler that walks a list of profiles, spending `samples_per_profile`
/// requests on each and staying on the last one once exhausted.
pub struct ProfileSequenceSource {
    cumulatives: Vec<Vec<f64>>,
    samples_per_profile: u64,
    steps_drawn: u64,
    rng: ChaCha12Rng,
}

impl ProfileSequenceSource {
    pub fn new(
        profiles: &[PopularityProfile],
        samples_per_profile: u64,
        seed: u64,
    ) -> Result<Self, Error> {
        if profiles.is_empty() {
            return Err(Error::InvalidParameter("profile sequence is empty".into()));
        }
        if samples_per_profile == 0 {
            return Err(Error::InvalidParameter(
                "samples per profile must be at least 1".into(),
            ));
        }
        let l = profiles[0].library_size();
        if profiles.iter().any(|p| p.library_size() != l) {
            return Err(Error::InvalidParameter(
                "all profiles in a sequence must share one library size".into(),
            ));
        }
        Ok(Self {
            cumulatives: profiles.iter().map(|p| cumulative_of(p.probs())).collect(),
            samples_per_profile,
            steps_drawn: 0,
            rng: ChaCha12Rng::seed_from_u64(seed),
        })
    }
}

impl RequestSource for ProfileSequenceSource {
    fn next_item(&mut self) -> ItemId {
        let segment =
            ((self.steps_drawn / self.samples_per_profile) as usize).min(self.cumulatives.len() - 1);
        self.steps_drawn += 1;
        ItemId::from_index(draw(&self.cumulatives[segment], &mut self.rng))
    }

    fn library_size(&self) -> u32 {
        self.cumulatives[0].len() as u32
    }
}

/// Replays a stored trace; wraps around if asked for more requests than the
/// trace holds.
pub struct TraceSource {
    trace: Arc<RequestTrace>,
    position: usize,
}

impl TraceSource {
    pub fn new(trace: Arc<RequestTrace>) -> Self {
        Self { trace, position: 0 }
    }
}

impl RequestSource for TraceSource {
    fn next_item(&mut self) -> ItemId {
        let item = self.trace.items[self.position];
        self.position = (self.position + 1) % self.trace.items.len();
        item
    }

    fn library_size(&self) -> u32 {
        self.trace.library_size
    }
}

fn cumulative_of(probs: &[f64]) -> Vec<f64> {
    let mut cumulative = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for &p in probs {
        acc += p;
        cumulative.push(acc);
    }
    // Guard the top: the running sum may land a hair under 1.0 and the
    // uniform draw lives in [0, 1).
    *cumulative.last_mut().expect("profiles are non-empty") = 1.0;
    cumulative
}

#[inline]
fn draw(cumulative: &[f64], rng: &mut ChaCha12Rng) -> usize {
    let u = rng.random::<f64>();
    cumulative.partition_point(|&c| c <= u)
}

/// Options for [`load_trace`].
#[derive(Clone, Copy, Debug, Default)]
pub struct TraceOptions {
    /// Skip a leading `item_id` header line.
    pub header: bool,
    /// Remap arbitrary IDs to dense `1..=L` in first-appearance order.
    pub remap: bool,
}

/// A trace read from disk, plus the ID mapping if remapping was requested.
#[derive(Clone, Debug)]
pub struct LoadedTrace {
    pub trace: RequestTrace,
    /// `original_ids[new_id - 1]` is the ID the file used, present only
    /// when remapping was requested.
    pub original_ids: Option<Vec<u64>>,
}

/// Reads a trace file: UTF-8, one non-negative integer item ID per line.
pub fn load_trace(path: &Path, options: TraceOptions) -> Result<LoadedTrace, Error> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut raw = Vec::new();
    for (index, line) in reader.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if index == 0 && options.header {
            continue;
        }
        if text.is_empty() {
            continue;
        }
        let id: u64 = text.parse().map_err(|e| Error::TraceParse {
            line: index + 1,
            message: format!("{e}: {text:?}"),
        })?;
        raw.push((index + 1, id));
    }
    if raw.is_empty() {
        return Err(Error::EmptyTrace);
    }

    if options.remap {
        let mut dense: std::collections::HashMap<u64, u32> = std::collections::HashMap::new();
        let mut original_ids = Vec::new();
        let mut items = Vec::with_capacity(raw.len());
        for (_, id) in raw {
            let next = dense.len() as u32 + 1;
            let mapped = *dense.entry(id).or_insert_with(|| {
                original_ids.push(id);
                next
            });
            items.push(ItemId(mapped));
        }
        let library_size = original_ids.len() as u32;
        Ok(LoadedTrace {
            trace: RequestTrace::new(items, library_size)?,
            original_ids: Some(original_ids),
        })
    } else {
        let mut max_id = 0u64;
        for &(line, id) in &raw {
            if id == 0 {
                return Err(Error::TraceParse {
                    line,
                    message: "item ID 0 requires remapping (IDs are 1-based)".into(),
                });
            }
            if id > u32::MAX as u64 {
                return Err(Error::TraceParse {
                    line,
                    message: format!("item ID {id} too large; pass remap"),
                });
            }
            max_id = max_id.max(id);
        }
        let items = raw.into_iter().map(|(_, id)| ItemId(id as u32)).collect();
        Ok(LoadedTrace {
            trace: RequestTrace::new(items, max_id as u32)?,
            original_ids: None,
        })
    }
}

/// Writes a trace in the format [`load_trace`] reads (LF line endings).
pub fn save_trace(trace: &RequestTrace, path: &Path, header: bool) -> Result<(), Error> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    if header {
        out.write_all(b"item_id\n")?;
    }
    for item in trace.items() {
        writeln!(out, "{item}")?;
    }
    out.flush()?;
    Ok(())
}

/// Reads a profile sequence: one profile per line, whitespace-separated
/// probabilities, every line the same length.
pub fn load_profile_sequence(path: &Path) -> Result<Vec<PopularityProfile>, Error> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut profiles = Vec::new();
    for (index, line) in reader.lines().enumerate() {
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let mut probs = Vec::new();
        for field in text.split_whitespace() {
            let p: f64 = field.parse().map_err(|e| Error::TraceParse {
                line: index + 1,
                message: format!("{e}: {field:?}"),
            })?;
            probs.push(p);
        }
        profiles.push(PopularityProfile::new(probs).map_err(|e| Error::TraceParse {
            line: index + 1,
            message: e.to_string(),
        })?);
    }
    if profiles.is_empty() {
        return Err(Error::EmptyTrace);
    }
    if profiles.iter().any(|p| p.len() != profiles[0].len()) {
        return Err(Error::InvalidProfile(
            "profile sequence lines have differing lengths".into(),
        ));
    }
    Ok(profiles)
}
