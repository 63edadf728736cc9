//! Seeded simulation runs and Monte Carlo regret estimation.
//!
//! Reproducibility contract: a replication's entire randomness derives from
//! `rep_seed = mix64(master_seed ^ k)` for replication index `k`, split into
//! independent policy / workload / initial-placement streams by mixing in
//! fixed stream constants. Replications may execute on any number of worker
//! threads; results are collected by replication index and reduced in that
//! fixed order, so every statistic is bit-identical across parallelism
//! degrees.

use std::sync::Arc;

use rayon::prelude::*;

use crate::model::{CacheSet, Error, ItemId, ObservationMode, PopularityProfile, Request};
use crate::policies::{step, InitialCacheRule, PolicySpec};
use crate::util::{kahan_sum, mix64, top_by_score};
use crate::workloads::{
    ChangeSchedule, ChangeSource, IrmSource, ProfileSequenceSource, RequestSource, RequestTrace,
    TraceSource,
};

use super::{genie_set, RegretLedger};

/// Stream constants mixed into a replication seed to decorrelate the three
/// RNG consumers of one run.
const POLICY_STREAM: u64 = 0x706f_6c69_6379_5f31;
const WORKLOAD_STREAM: u64 = 0x776f_726b_6c6f_6164;
const INITIAL_STREAM: u64 = 0x696e_6974_5f63_6163;

/// Two-sided 95% normal quantile used for the confidence band.
pub const Z_95: f64 = 1.959964;

/// The request process driving a run.
#[derive(Clone, Debug)]
pub enum WorkloadSpec {
    /// I.i.d. draws from a fixed profile.
    Irm { profile: PopularityProfile },
    /// I.i.d. draws from a profile mutated on a fixed schedule.
    Change {
        profile: PopularityProfile,
        schedule: ChangeSchedule,
    },
    /// A list of profiles visited in order for a fixed number of steps
    /// each, staying on the last.
    ProfileSequence {
        profiles: Vec<PopularityProfile>,
        samples_per_profile: u64,
    },
    /// Replay of a recorded trace, wrapping around at the end.
    Trace { trace: Arc<RequestTrace> },
}

impl WorkloadSpec {
    pub fn library_size(&self) -> u32 {
        match self {
            WorkloadSpec::Irm { profile } => profile.library_size(),
            WorkloadSpec::Change { profile, .. } => profile.library_size(),
            WorkloadSpec::ProfileSequence { profiles, .. } => profiles[0].library_size(),
            WorkloadSpec::Trace { trace } => trace.library_size(),
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        match self {
            WorkloadSpec::Irm { .. } | WorkloadSpec::Trace { .. } => Ok(()),
            WorkloadSpec::Change { profile, schedule } => {
                schedule.validate(profile.library_size())
            }
            WorkloadSpec::ProfileSequence {
                profiles,
                samples_per_profile,
            } => {
                // Constructing a source performs the full validation.
                ProfileSequenceSource::new(profiles, *samples_per_profile, 0).map(|_| ())
            }
        }
    }

    fn source(&self, seed: u64) -> Result<Box<dyn RequestSource>, Error> {
        Ok(match self {
            WorkloadSpec::Irm { profile } => Box::new(IrmSource::new(profile, seed)),
            WorkloadSpec::Change { profile, schedule } => {
                schedule.validate(profile.library_size())?;
                Box::new(ChangeSource::new(profile, *schedule, seed))
            }
            WorkloadSpec::ProfileSequence {
                profiles,
                samples_per_profile,
            } => Box::new(ProfileSequenceSource::new(
                profiles,
                *samples_per_profile,
                seed,
            )?),
            WorkloadSpec::Trace { trace } => Box::new(TraceSource::new(Arc::clone(trace))),
        })
    }

    /// Popularity scores the genie placement ranks, indexed by item: the
    /// profile for i.i.d. workloads and the initial profile under a change
    /// schedule, the time-averaged profile over the horizon for a profile
    /// sequence, and raw whole-trace request counts for a trace (scores, not
    /// probabilities; divide by their sum to normalize).
    pub fn effective_scores(&self, horizon: u64) -> Vec<f64> {
        match self {
            WorkloadSpec::Irm { profile } | WorkloadSpec::Change { profile, .. } => {
                profile.probs().to_vec()
            }
            WorkloadSpec::ProfileSequence {
                profiles,
                samples_per_profile,
            } => {
                let mut average = vec![0.0f64; profiles[0].len()];
                let mut remaining = horizon;
                for (index, profile) in profiles.iter().enumerate() {
                    let steps = if index + 1 == profiles.len() {
                        remaining
                    } else {
                        remaining.min(*samples_per_profile)
                    };
                    remaining -= steps;
                    let weight = steps as f64 / horizon as f64;
                    for (slot, &p) in average.iter_mut().zip(profile.probs()) {
                        *slot += weight * p;
                    }
                }
                average
            }
            WorkloadSpec::Trace { trace } => trace
                .empirical_counts()
                .iter()
                .map(|&c| c as f64)
                .collect(),
        }
    }

    /// The static reference placement regret is scored against.
    ///
    /// * IRM: the profile's top `C`.
    /// * Change: the *initial* profile's top `C` (under a change schedule no
    ///   static cache is optimal; hit rate is the primary metric there).
    /// * Profile sequence: top `C` of the time-averaged profile over the
    ///   horizon.
    /// * Trace: top `C` by whole-trace empirical count.
    pub fn genie(&self, cache_size: u32, horizon: u64) -> CacheSet {
        match self {
            WorkloadSpec::Irm { profile } | WorkloadSpec::Change { profile, .. } => {
                genie_set(profile, cache_size)
            }
            _ => {
                let scored = self
                    .effective_scores(horizon)
                    .into_iter()
                    .enumerate()
                    .map(|(i, p)| (p, ItemId::from_index(i)));
                CacheSet::from_sorted(top_by_score(scored, cache_size as usize))
            }
        }
    }
}

/// Everything one replication needs.
#[derive(Clone, Debug)]
pub struct RunSpec {
    pub policy: PolicySpec,
    pub workload: WorkloadSpec,
    pub cache_size: u32,
    pub horizon: u64,
    pub mode: ObservationMode,
    /// Halve the policy's counters after every `P` steps when set.
    pub halving_period: Option<u64>,
    pub initial_cache: InitialCacheRule,
}

impl RunSpec {
    /// A spec with the policy's natural observation mode (full for
    /// mode-agnostic policies), no halving, and lowest-ID initial placement.
    pub fn new(policy: PolicySpec, workload: WorkloadSpec, cache_size: u32, horizon: u64) -> Self {
        let mode = policy.required_mode().unwrap_or(ObservationMode::Full);
        Self {
            policy,
            workload,
            cache_size,
            horizon,
            mode,
            halving_period: None,
            initial_cache: InitialCacheRule::LowestIds,
        }
    }

    pub fn validate(&self) -> Result<(), Error> {
        self.workload.validate()?;
        let l = self.workload.library_size();
        if self.horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        if self.halving_period == Some(0) {
            return Err(Error::InvalidParameter(
                "halving period must be at least 1".into(),
            ));
        }
        if let Some(required) = self.policy.required_mode() {
            if required != self.mode {
                return Err(Error::InvalidParameter(format!(
                    "policy {} requires {} observation, configured {}",
                    self.policy.name(),
                    required,
                    self.mode
                )));
            }
        }
        // A dry build surfaces parameter errors before any replication runs.
        self.policy
            .build(l, self.cache_size, CacheSet::lowest_ids(self.cache_size), 0)
            .map(|_| ())
    }
}

/// Checkpointed samples of a single replication.
#[derive(Clone, Debug)]
pub struct Trajectory {
    /// `R(t)` at each checkpoint.
    pub regret: Vec<i64>,
    /// Cumulative policy hits at each checkpoint.
    pub hits: Vec<u64>,
    /// Counters in use (policy-specific meaning) at each checkpoint.
    pub counters: Vec<usize>,
}

/// Runs one replication; vectors align with `checkpoints`, which must be
/// strictly increasing and end at `spec.horizon`.
pub fn simulate_run(
    spec: &RunSpec,
    checkpoints: &[u64],
    rep_seed: u64,
) -> Result<Trajectory, Error> {
    validate_checkpoints(checkpoints, spec.horizon)?;
    let l = spec.workload.library_size();
    let initial = spec
        .initial_cache
        .build(l, spec.cache_size, mix64(rep_seed ^ INITIAL_STREAM));
    let mut policy =
        spec.policy
            .build(l, spec.cache_size, initial, mix64(rep_seed ^ POLICY_STREAM))?;
    let mut source = spec.workload.source(mix64(rep_seed ^ WORKLOAD_STREAM))?;
    let mut ledger = RegretLedger::new(spec.workload.genie(spec.cache_size, spec.horizon));

    let mut trajectory = Trajectory {
        regret: Vec::with_capacity(checkpoints.len()),
        hits: Vec::with_capacity(checkpoints.len()),
        counters: Vec::with_capacity(checkpoints.len()),
    };
    let mut next_checkpoint = 0usize;
    for t in 1..=spec.horizon {
        let request = Request {
            item: source.next_item(),
            time: t,
        };
        let outcome = step(policy.as_mut(), request, spec.mode, l)?;
        ledger.record(request, &outcome.placed);
        if spec.halving_period.is_some_and(|p| t % p == 0) {
            policy.halve_counts();
        }
        if checkpoints[next_checkpoint] == t {
            trajectory.regret.push(ledger.cumulative());
            trajectory.hits.push(ledger.policy_hits());
            trajectory.counters.push(policy.counters_in_use());
            next_checkpoint += 1;
        }
    }
    debug_assert_eq!(next_checkpoint, checkpoints.len());
    Ok(trajectory)
}

/// Mean curves with a 95% normal-approximation confidence band, plus
/// per-replication terminal values for paired comparisons.
#[derive(Clone, Debug)]
pub struct McCurve {
    pub checkpoints: Vec<u64>,
    pub replications: u32,
    pub mean_regret: Vec<f64>,
    pub regret_ci_low: Vec<f64>,
    pub regret_ci_high: Vec<f64>,
    /// Mean of cumulative hits / t.
    pub mean_hit_rate: Vec<f64>,
    pub mean_counters: Vec<f64>,
    /// `R(T)` per replication, in replication order.
    pub terminal_regret: Vec<f64>,
    /// Terminal hit rate per replication, in replication order.
    pub terminal_hit_rate: Vec<f64>,
    pub terminal_counters: Vec<f64>,
}

impl McCurve {
    pub fn terminal_mean_regret(&self) -> f64 {
        *self.mean_regret.last().expect("at least one checkpoint")
    }

    pub fn terminal_mean_hit_rate(&self) -> f64 {
        *self.mean_hit_rate.last().expect("at least one checkpoint")
    }

    pub fn terminal_mean_counters(&self) -> f64 {
        *self.mean_counters.last().expect("at least one checkpoint")
    }

    /// Mean regret at the first checkpoint with `t >= target`.
    pub fn mean_regret_at(&self, target: u64) -> Option<f64> {
        let i = self.checkpoints.partition_point(|&t| t < target);
        self.mean_regret.get(i).copied()
    }
}

/// Runs `replications` seeded replications (in parallel when a rayon pool
/// has threads available) and aggregates them in replication order.
pub fn mc_regret(
    spec: &RunSpec,
    checkpoints: &[u64],
    replications: u32,
    master_seed: u64,
) -> Result<McCurve, Error> {
    if replications == 0 {
        return Err(Error::InvalidParameter(
            "at least one replication is required".into(),
        ));
    }
    spec.validate()?;
    validate_checkpoints(checkpoints, spec.horizon)?;

    let trajectories: Result<Vec<Trajectory>, Error> = (0..replications)
        .into_par_iter()
        .map(|k| simulate_run(spec, checkpoints, mix64(master_seed ^ k as u64)))
        .collect();
    let trajectories = trajectories?;

    let n = replications as f64;
    let points = checkpoints.len();
    let mut curve = McCurve {
        checkpoints: checkpoints.to_vec(),
        replications,
        mean_regret: Vec::with_capacity(points),
        regret_ci_low: Vec::with_capacity(points),
        regret_ci_high: Vec::with_capacity(points),
        mean_hit_rate: Vec::with_capacity(points),
        mean_counters: Vec::with_capacity(points),
        terminal_regret: trajectories
            .iter()
            .map(|tr| *tr.regret.last().expect("non-empty checkpoints") as f64)
            .collect(),
        terminal_hit_rate: trajectories
            .iter()
            .map(|tr| *tr.hits.last().expect("non-empty checkpoints") as f64 / spec.horizon as f64)
            .collect(),
        terminal_counters: trajectories
            .iter()
            .map(|tr| *tr.counters.last().expect("non-empty checkpoints") as f64)
            .collect(),
    };
    for (i, &t) in checkpoints.iter().enumerate() {
        let mean = kahan_sum(trajectories.iter().map(|tr| tr.regret[i] as f64)) / n;
        let half_width = if replications > 1 {
            let variance = kahan_sum(trajectories.iter().map(|tr| {
                let d = tr.regret[i] as f64 - mean;
                d * d
            })) / (n - 1.0);
            Z_95 * (variance / n).sqrt()
        } else {
            0.0
        };
        curve.mean_regret.push(mean);
        curve.regret_ci_low.push(mean - half_width);
        curve.regret_ci_high.push(mean + half_width);
        curve.mean_hit_rate.push(
            kahan_sum(trajectories.iter().map(|tr| tr.hits[i] as f64 / t as f64)) / n,
        );
        curve
            .mean_counters
            .push(kahan_sum(trajectories.iter().map(|tr| tr.counters[i] as f64)) / n);
    }
    Ok(curve)
}

/// A geometric grid of checkpoints (ratio ~1.05) from 1 to the horizon,
/// always ending exactly at the horizon.
pub fn geometric_checkpoints(horizon: u64) -> Vec<u64> {
    assert!(horizon >= 1);
    let mut grid = Vec::new();
    let mut t = 1u64;
    while t < horizon {
        grid.push(t);
        t = ((t as f64) * 1.05).ceil() as u64;
    }
    grid.push(horizon);
    grid
}

fn validate_checkpoints(checkpoints: &[u64], horizon: u64) -> Result<(), Error> {
    let increasing = checkpoints.windows(2).all(|w| w[0] < w[1]);
    if checkpoints.is_empty() || !increasing || *checkpoints.last().unwrap() != horizon {
        return Err(Error::InvalidParameter(
            "checkpoints must be strictly increasing, start at >= 1, and end at the horizon"
                .into(),
        ));
    }
    if checkpoints[0] == 0 {
        return Err(Error::InvalidParameter(
            "checkpoints are 1-based step counts".into(),
        ));
    }
    Ok(())
}
