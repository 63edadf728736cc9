//! Cache placement as an online learning problem.
//!
//! A library of `L` items receives one request per step. A placement policy
//! must commit to a cache of `C` items *before* each request arrives and is
//! scored against the omniscient static cache (the `C` most popular items).
//! Two information regimes are supported:
//!
//! * **full observation**: the policy sees every request;
//! * **partial observation**: the policy sees a request only when it hits
//!   the cache currently placed (a miss is a silent step).
//!
//! The crate provides the request/observation model ([`model`]), synthetic
//! and file-backed workloads ([`workloads`]), placement policies for both
//! regimes ([`policies`]), and regret accounting, closed-form bound
//! calculators, and Monte Carlo drivers ([`analysis`]).
//!
//! Everything is deterministic: given a seed, a workload, and a policy
//! configuration, the sequence of placed caches is bit-identical across
//! runs, platforms, and parallelism degrees.

pub mod analysis;
pub mod model;
pub mod policies;
pub mod workloads;

mod util;

pub use model::{
    observe_signal, CacheSet, Error, ItemId, Observation, ObservationKind, ObservationMode,
    PopularityProfile, Request,
};
pub use policies::{InitialCacheRule, Policy, PolicySpec};
