//! Experiment configuration: policy and workload selection, validation with
//! field-level errors, and resolution into a runnable [`RunSpec`].

use std::path::PathBuf;
use std::sync::Arc;

use cachelab::analysis::{RunSpec, WorkloadSpec};
use cachelab::policies::default_window;
use cachelab::workloads::{load_profile_sequence, load_trace, ChangeSchedule, TraceOptions};
use cachelab::{InitialCacheRule, ObservationMode, PolicySpec};

/// A configuration rejection, pointing at the offending field.
#[derive(Debug)]
pub struct ConfigError {
    pub field: &'static str,
    pub message: String,
}

impl ConfigError {
    fn new(field: &'static str, message: impl Into<String>) -> Self {
        Self {
            field,
            message: message.into(),
        }
    }
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl std::error::Error for ConfigError {}

/// Where threshold policies get their boundary popularity and gap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SiSource {
    /// Derived from the workload's popularity scores at ranks C and C+1.
    TrueProfile,
    /// Supplied on the command line.
    Explicit { mu_c: f64, delta: f64 },
}

/// Policy selection before parameter resolution. `window: None` means "use
/// the default rule ceil(C^2 ln L)".
#[derive(Clone, Debug, PartialEq)]
pub enum PolicyChoice {
    Lfu,
    Wlfu { window: Option<u64> },
    LfuLite { window: Option<u64> },
    Lru,
    CbFps { max_components: usize },
    CbMps,
    CbSi { source: SiSource },
    CbSiLite { window: Option<u64>, source: SiSource },
}

impl PolicyChoice {
    pub fn name(&self) -> &'static str {
        match self {
            PolicyChoice::Lfu => "lfu",
            PolicyChoice::Wlfu { .. } => "wlfu",
            PolicyChoice::LfuLite { .. } => "lfu-lite",
            PolicyChoice::Lru => "lru",
            PolicyChoice::CbFps { .. } => "cb-fps",
            PolicyChoice::CbMps => "cb-mps",
            PolicyChoice::CbSi { .. } => "cb-si",
            PolicyChoice::CbSiLite { .. } => "cb-si-lite",
        }
    }

    /// The window this policy will run with, after applying the default
    /// rule; `None` for windowless policies.
    pub fn resolved_window(&self, library_size: u32, cache_size: u32) -> Option<u64> {
        match self {
            PolicyChoice::Wlfu { window }
            | PolicyChoice::LfuLite { window }
            | PolicyChoice::CbSiLite { window, .. } => Some(
                window.unwrap_or_else(|| default_window(library_size, cache_size) as u64),
            ),
            _ => None,
        }
    }
}

/// Workload selection; file-backed variants are loaded by [`load`].
#[derive(Clone, Debug, PartialEq)]
pub enum WorkloadChoice {
    Zipf {
        library: u32,
        beta: f64,
    },
    Change {
        library: u32,
        beta: f64,
        period: u64,
        top_k: u32,
        shift: u32,
    },
    ProfileSequence {
        path: PathBuf,
        samples_per_profile: u64,
    },
    Trace {
        path: PathBuf,
        header: bool,
        remap: bool,
    },
}

impl WorkloadChoice {
    pub fn name(&self) -> &'static str {
        match self {
            WorkloadChoice::Zipf { .. } => "zipf",
            WorkloadChoice::Change { .. } => "change",
            WorkloadChoice::ProfileSequence { .. } => "profile-seq",
            WorkloadChoice::Trace { .. } => "trace",
        }
    }

    /// Loads any referenced files and produces the simulation workload.
    pub fn load(&self) -> Result<WorkloadSpec, ConfigError> {
        match self {
            WorkloadChoice::Zipf { library, beta } => {
                let profile = cachelab::workloads::zipf_profile(*library, *beta)
                    .map_err(|e| ConfigError::new("workload", e.to_string()))?;
                Ok(WorkloadSpec::Irm { profile })
            }
            WorkloadChoice::Change {
                library,
                beta,
                period,
                top_k,
                shift,
            } => {
                let profile = cachelab::workloads::zipf_profile(*library, *beta)
                    .map_err(|e| ConfigError::new("workload", e.to_string()))?;
                let schedule = ChangeSchedule {
                    period: *period,
                    top_k: *top_k,
                    shift: *shift,
                };
                schedule
                    .validate(*library)
                    .map_err(|e| ConfigError::new("workload", e.to_string()))?;
                Ok(WorkloadSpec::Change { profile, schedule })
            }
            WorkloadChoice::ProfileSequence {
                path,
                samples_per_profile,
            } => {
                let profiles = load_profile_sequence(path)
                    .map_err(|e| ConfigError::new("profiles", e.to_string()))?;
                Ok(WorkloadSpec::ProfileSequence {
                    profiles,
                    samples_per_profile: *samples_per_profile,
                })
            }
            WorkloadChoice::Trace { path, header, remap } => {
                let loaded = load_trace(
                    path,
                    TraceOptions {
                        header: *header,
                        remap: *remap,
                    },
                )
                .map_err(|e| ConfigError::new("trace", e.to_string()))?;
                Ok(WorkloadSpec::Trace {
                    trace: Arc::new(loaded.trace),
                })
            }
        }
    }
}

/// One experiment: a policy, a workload, sizes, horizon, replication count,
/// and the master seed everything derives from.
#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub policy: PolicyChoice,
    pub workload: WorkloadChoice,
    pub cache_size: u32,
    pub horizon: u64,
    pub replications: u32,
    pub master_seed: u64,
    pub halving_period: Option<u64>,
    pub initial: InitialCacheRule,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    /// The observation regime implied by the policy.
    pub fn mode(&self) -> ObservationMode {
        match self.policy {
            PolicyChoice::Lfu
            | PolicyChoice::Wlfu { .. }
            | PolicyChoice::LfuLite { .. }
            | PolicyChoice::Lru => ObservationMode::Full,
            PolicyChoice::CbFps { .. }
            | PolicyChoice::CbMps
            | PolicyChoice::CbSi { .. }
            | PolicyChoice::CbSiLite { .. } => ObservationMode::Partial,
        }
    }

    /// Validates fields, loads the workload, resolves policy parameters, and
    /// returns the runnable spec.
    pub fn resolve(&self) -> Result<RunSpec, ConfigError> {
        if self.horizon == 0 {
            return Err(ConfigError::new("horizon", "must be at least 1"));
        }
        if self.replications == 0 {
            return Err(ConfigError::new("replications", "must be at least 1"));
        }
        if self.halving_period == Some(0) {
            return Err(ConfigError::new("halve-every", "must be at least 1"));
        }
        let workload = self.workload.load()?;
        let l = workload.library_size();
        if self.cache_size < 1 || self.cache_size > l {
            return Err(ConfigError::new(
                "cache",
                format!("must lie in 1..={l}, got {}", self.cache_size),
            ));
        }
        let policy = self.policy_spec(&workload)?;
        let mut spec = RunSpec::new(policy, workload, self.cache_size, self.horizon);
        spec.halving_period = self.halving_period;
        spec.initial_cache = self.initial;
        spec.validate()
            .map_err(|e| ConfigError::new("config", e.to_string()))?;
        Ok(spec)
    }

    fn policy_spec(&self, workload: &WorkloadSpec) -> Result<PolicySpec, ConfigError> {
        let l = workload.library_size();
        let window = |w: Option<u64>| -> Result<usize, ConfigError> {
            let w = w.unwrap_or_else(|| default_window(l, self.cache_size) as u64);
            if w == 0 {
                return Err(ConfigError::new("window", "must be at least 1"));
            }
            usize::try_from(w).map_err(|_| ConfigError::new("window", "does not fit in memory"))
        };
        let si = |source: SiSource| -> Result<(f64, f64), ConfigError> {
            match source {
                SiSource::Explicit { mu_c, delta } => Ok((mu_c, delta)),
                SiSource::TrueProfile => {
                    si_parameters(workload, self.cache_size, self.horizon)
                }
            }
        };
        Ok(match &self.policy {
            PolicyChoice::Lfu => PolicySpec::Lfu,
            PolicyChoice::Wlfu { window: w } => PolicySpec::Wlfu { window: window(*w)? },
            PolicyChoice::LfuLite { window: w } => PolicySpec::LfuLite { window: window(*w)? },
            PolicyChoice::Lru => PolicySpec::Lru,
            PolicyChoice::CbFps { max_components } => {
                if *max_components == 0 {
                    return Err(ConfigError::new("max-components", "must be at least 1"));
                }
                PolicySpec::CbFps {
                    max_components: *max_components,
                }
            }
            PolicyChoice::CbMps => PolicySpec::CbMps,
            PolicyChoice::CbSi { source } => {
                let (mu_c, delta) = si(*source)?;
                PolicySpec::CbSi { mu_c, delta }
            }
            PolicyChoice::CbSiLite { window: w, source } => {
                let (mu_c, delta) = si(*source)?;
                PolicySpec::CbSiLite {
                    window: window(*w)?,
                    mu_c,
                    delta,
                }
            }
        })
    }

    /// The config echoed as ordered `key=value` pairs; together with the
    /// binary version this reproduces the run exactly.
    pub fn echo(&self) -> Vec<(String, String)> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| pairs.push((k.to_string(), v));
        push("policy", self.policy.name().to_string());
        match &self.policy {
            PolicyChoice::Wlfu { window }
            | PolicyChoice::LfuLite { window }
            | PolicyChoice::CbSiLite { window, .. } => {
                push(
                    "window",
                    window.map_or_else(|| "default".to_string(), |w| w.to_string()),
                );
            }
            PolicyChoice::CbFps { max_components } => {
                push("max_components", max_components.to_string());
            }
            _ => {}
        }
        match &self.policy {
            PolicyChoice::CbSi { source } | PolicyChoice::CbSiLite { source, .. } => {
                match source {
                    SiSource::TrueProfile => push("si_source", "true-profile".to_string()),
                    SiSource::Explicit { mu_c, delta } => {
                        push("si_source", "explicit".to_string());
                        push("mu_c", format!("{mu_c}"));
                        push("delta", format!("{delta}"));
                    }
                }
            }
            _ => {}
        }
        push("mode", self.mode().to_string());
        push("workload", self.workload.name().to_string());
        match &self.workload {
            WorkloadChoice::Zipf { library, beta } => {
                push("library", library.to_string());
                push("beta", format!("{beta}"));
            }
            WorkloadChoice::Change {
                library,
                beta,
                period,
                top_k,
                shift,
            } => {
                push("library", library.to_string());
                push("beta", format!("{beta}"));
                push("change_period", period.to_string());
                push("change_top_k", top_k.to_string());
                push("change_shift", shift.to_string());
            }
            WorkloadChoice::ProfileSequence {
                path,
                samples_per_profile,
            } => {
                push("profiles", path.display().to_string());
                push("samples_per_profile", samples_per_profile.to_string());
            }
            WorkloadChoice::Trace { path, header, remap } => {
                push("trace", path.display().to_string());
                push("trace_header", header.to_string());
                push("trace_remap", remap.to_string());
            }
        }
        push("cache", self.cache_size.to_string());
        push("horizon", self.horizon.to_string());
        push("replications", self.replications.to_string());
        push("master_seed", self.master_seed.to_string());
        push(
            "halving_period",
            self.halving_period
                .map_or_else(|| "none".to_string(), |p| p.to_string()),
        );
        push("initial", self.initial.to_string());
        pairs
    }
}

/// Boundary popularity and gap at the cache edge of a workload's
/// (normalized) popularity scores.
pub fn si_parameters(
    workload: &WorkloadSpec,
    cache_size: u32,
    horizon: u64,
) -> Result<(f64, f64), ConfigError> {
    let mut scores = workload.effective_scores(horizon);
    let c = cache_size as usize;
    if c >= scores.len() {
        return Err(ConfigError::new(
            "cache",
            format!(
                "threshold parameters need C < L, got C={c}, L={}",
                scores.len()
            ),
        ));
    }
    let total: f64 = scores.iter().sum();
    if !(total > 0.0) {
        return Err(ConfigError::new("workload", "popularity scores are all zero"));
    }
    scores.sort_by(|a, b| b.total_cmp(a));
    let mu_c = scores[c - 1] / total;
    let delta = (scores[c - 1] - scores[c]) / total;
    if delta <= 0.0 {
        return Err(ConfigError::new(
            "delta",
            "boundary gap is zero for this workload; pass --mu-c/--delta explicitly",
        ));
    }
    Ok((mu_c, delta))
}
