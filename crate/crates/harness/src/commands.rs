//! Implementations behind the CLI subcommands.

use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::{bail, Context};
use cachelab::analysis::{bounds, geometric_checkpoints, mc_regret, RunSpec};
use cachelab::workloads::{change_trace, sample_irm, save_trace, ChangeSchedule};
use cachelab::PopularityProfile;

use crate::config::{ConfigError, ExperimentConfig};
use crate::output::ResultsTable;

/// Build identifier stamped into every metadata block.
pub fn build_id() -> String {
    format!("{}/{}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION"))
}

/// Executes one experiment: validates, runs all replications, and writes the
/// CSV plus metadata sidecar when an output path is configured.
pub fn run(config: &ExperimentConfig) -> anyhow::Result<ResultsTable> {
    let spec = config.resolve()?;
    let checkpoints = geometric_checkpoints(config.horizon);
    let started = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let clock = Instant::now();
    let curve = mc_regret(&spec, &checkpoints, config.replications, config.master_seed)?;
    let elapsed_ms = clock.elapsed().as_millis();

    let mut metadata = vec![("build_id".to_string(), build_id())];
    metadata.extend(config.echo());
    metadata.push(("checkpoints".to_string(), checkpoints.len().to_string()));
    metadata.push(("started_unix".to_string(), started.to_string()));
    metadata.push(("elapsed_ms".to_string(), elapsed_ms.to_string()));

    let table = ResultsTable::from_curve(&curve, metadata);
    if let Some(path) = &config.output {
        table
            .write(path)
            .with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(table)
}

/// One sweep point: the value tag and its results.
pub struct SweepPoint {
    pub tag: String,
    pub table: ResultsTable,
}

/// Runs the base config once per axis value, sharing the master seed.
/// Output paths are tagged `-<axis>-<value>`. An empty value list is a
/// warned no-op.
pub fn sweep(
    base: &ExperimentConfig,
    axis: &str,
    values: &[String],
) -> anyhow::Result<Vec<SweepPoint>> {
    if values.is_empty() {
        eprintln!("warning: empty sweep value list; nothing to run");
        return Ok(Vec::new());
    }
    let mut points = Vec::with_capacity(values.len());
    for value in values {
        let mut config = apply_axis(base, axis, value)?;
        if let Some(path) = &base.output {
            config.output = Some(tagged_path(path, axis, value));
        }
        let table = run(&config)
            .with_context(|| format!("sweep point {axis}={value}"))?;
        points.push(SweepPoint {
            tag: format!("{axis}={value}"),
            table,
        });
    }
    Ok(points)
}

/// Applies one swept value to a copy of the base config.
pub fn apply_axis(
    base: &ExperimentConfig,
    axis: &str,
    value: &str,
) -> Result<ExperimentConfig, ConfigError> {
    use crate::config::{PolicyChoice, WorkloadChoice};

    let bad = |message: String| ConfigError {
        field: "axis",
        message,
    };
    let as_u64 = |value: &str| -> Result<u64, ConfigError> {
        value
            .parse()
            .map_err(|e| bad(format!("{axis}={value}: {e}")))
    };
    let mut config = base.clone();
    match axis {
        "window" => {
            let w = Some(as_u64(value)?);
            config.policy = match config.policy {
                PolicyChoice::Wlfu { .. } => PolicyChoice::Wlfu { window: w },
                PolicyChoice::LfuLite { .. } => PolicyChoice::LfuLite { window: w },
                PolicyChoice::CbSiLite { source, .. } => {
                    PolicyChoice::CbSiLite { window: w, source }
                }
                other => {
                    return Err(bad(format!(
                        "policy {} has no window to sweep",
                        other.name()
                    )))
                }
            };
        }
        "library" => {
            let l = as_u64(value)? as u32;
            config.workload = match config.workload {
                WorkloadChoice::Zipf { beta, .. } => WorkloadChoice::Zipf { library: l, beta },
                WorkloadChoice::Change {
                    beta,
                    period,
                    top_k,
                    shift,
                    ..
                } => WorkloadChoice::Change {
                    library: l,
                    beta,
                    period,
                    top_k,
                    shift,
                },
                other => {
                    return Err(bad(format!(
                        "workload {} has no library size to sweep",
                        other.name()
                    )))
                }
            };
        }
        "beta" => {
            let beta: f64 = value
                .parse()
                .map_err(|e| bad(format!("{axis}={value}: {e}")))?;
            config.workload = match config.workload {
                WorkloadChoice::Zipf { library, .. } => WorkloadChoice::Zipf { library, beta },
                WorkloadChoice::Change {
                    library,
                    period,
                    top_k,
                    shift,
                    ..
                } => WorkloadChoice::Change {
                    library,
                    beta,
                    period,
                    top_k,
                    shift,
                },
                other => {
                    return Err(bad(format!(
                        "workload {} has no zipf exponent to sweep",
                        other.name()
                    )))
                }
            };
        }
        "cache" => config.cache_size = as_u64(value)? as u32,
        "horizon" => config.horizon = as_u64(value)?,
        "replications" => config.replications = as_u64(value)? as u32,
        "halve-every" => config.halving_period = Some(as_u64(value)?),
        "max-components" => {
            let cap = as_u64(value)? as usize;
            config.policy = match config.policy {
                PolicyChoice::CbFps { .. } => PolicyChoice::CbFps { max_components: cap },
                other => {
                    return Err(bad(format!(
                        "policy {} has no component cap to sweep",
                        other.name()
                    )))
                }
            };
        }
        other => {
            return Err(bad(format!(
                "unknown axis {other:?}; expected one of window, library, beta, \
                 cache, horizon, replications, halve-every, max-components"
            )))
        }
    }
    Ok(config)
}

fn tagged_path(path: &std::path::Path, axis: &str, value: &str) -> std::path::PathBuf {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    let extension = path
        .extension()
        .map(|e| format!(".{}", e.to_string_lossy()))
        .unwrap_or_default();
    path.with_file_name(format!("{stem}-{axis}-{value}{extension}"))
}

/// Every closed-form value applicable to the configured instance, paired
/// with the observed Monte Carlo estimates, as `key=value` lines.
pub fn bounds_report(config: &ExperimentConfig) -> anyhow::Result<String> {
    let spec = config.resolve()?;
    let profile = instance_profile(&spec)?;
    let window = config
        .policy
        .resolved_window(profile.library_size(), config.cache_size);
    let report = bounds::bound_report(&profile, config.cache_size, window, config.horizon)?;

    let half = config.horizon / 2;
    let grid = if half >= 1 && half < config.horizon {
        vec![half, config.horizon]
    } else {
        vec![config.horizon]
    };
    let curve = mc_regret(&spec, &grid, config.replications, config.master_seed)?;

    let mut out = String::new();
    let mut line = |k: &str, v: String| {
        out.push_str(k);
        out.push('=');
        out.push_str(&v);
        out.push('\n');
    };
    line("l", report.library_size.to_string());
    line("c", report.cache_size.to_string());
    line("horizon", config.horizon.to_string());
    line("mu_c", format!("{}", report.mu_c));
    line("mu_c1", format!("{}", report.mu_c1));
    line("delta_min", format!("{}", report.delta_min));
    if report.degenerate {
        line("warning", "delta_min=0: genie non-unique, constant bounds vacuous".into());
    }
    line("bound_lfu", format!("{}", report.lfu));
    line("bound_si", format!("{}", report.si));
    line("mps_envelope", format!("{}", report.mps_envelope));
    if let Some(w) = report.window {
        line("window", w.to_string());
        line("p_min", format!("{}", report.p_min.unwrap()));
        line("bound_wlfu_lower", format!("{}", report.wlfu_lower.unwrap()));
        line("bound_lfulite", format!("{}", report.lfulite.unwrap()));
        line(
            "expected_terminal_bank",
            format!("{}", report.expected_terminal_bank.unwrap()),
        );
    }
    if grid.len() == 2 {
        line("observed_mean_regret_half", format!("{}", curve.mean_regret[0]));
    }
    line("observed_mean_regret", format!("{}", curve.terminal_mean_regret()));
    line(
        "observed_regret_per_step",
        format!("{}", curve.terminal_mean_regret() / config.horizon as f64),
    );
    line(
        "observed_hit_rate",
        format!("{}", curve.terminal_mean_hit_rate()),
    );
    line(
        "observed_bank_size",
        format!("{}", curve.terminal_mean_counters()),
    );
    Ok(out)
}

/// The popularity profile backing the configured workload; trace workloads
/// have none (unseen items would need zero probability).
fn instance_profile(spec: &RunSpec) -> anyhow::Result<PopularityProfile> {
    let scores = spec.workload.effective_scores(spec.horizon);
    let total: f64 = scores.iter().sum();
    if scores.iter().any(|&s| s <= 0.0) {
        bail!(
            "bounds need a strictly positive popularity profile; \
             this workload has items with zero popularity"
        );
    }
    Ok(PopularityProfile::new(
        scores.iter().map(|&s| s / total).collect(),
    )?)
}

/// Materializes a synthetic trace file (IRM or change workload).
pub fn gen_trace(
    library: u32,
    beta: f64,
    schedule: Option<ChangeSchedule>,
    horizon: u64,
    seed: u64,
    path: &std::path::Path,
    header: bool,
) -> anyhow::Result<()> {
    let profile = cachelab::workloads::zipf_profile(library, beta)?;
    let trace = match schedule {
        Some(schedule) => change_trace(&profile, schedule, horizon, seed)?,
        None => sample_irm(&profile, horizon, seed),
    };
    save_trace(&trace, path, header)?;
    Ok(())
}

/// One-line human summary of a finished run.
pub fn summarize(table: &ResultsTable) -> String {
    let last = table.rows().last().expect("tables have at least one row");
    format!(
        "T={} mean_regret={:.3} hit_rate={:.4} bank_size={:.1}",
        last.t, last.mean_regret, last.mean_hit_rate, last.mean_bank_size
    )
}
