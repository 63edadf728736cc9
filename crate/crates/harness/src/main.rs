//! Command line front end: `cachelab run|sweep|bounds|gen-trace|replay`.

use std::path::PathBuf;

use anyhow::bail;
use clap::{Args, Parser, Subcommand, ValueEnum};

use cachelab::workloads::{ChangeSchedule, TraceOptions};
use cachelab::InitialCacheRule;
use cachelab_cli::config::{ExperimentConfig, PolicyChoice, SiSource, WorkloadChoice};
use cachelab_cli::{commands, output};

#[derive(Parser)]
#[command(
    name = "cachelab",
    version,
    about = "Online cache placement experiments: full- and partial-observation \
             policies, synthetic and trace workloads, regret accounting"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment; prints CSV to stdout unless --output is given.
    Run(RunCmd),
    /// Re-run one experiment across a list of values for a single flag.
    Sweep(SweepCmd),
    /// Print closed-form regret bounds next to observed estimates.
    Bounds(BoundsCmd),
    /// Write a synthetic request trace to a file.
    GenTrace(GenTraceCmd),
    /// Run a policy over a recorded request trace.
    Replay(ReplayCmd),
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
enum PolicyArg {
    Lfu,
    Wlfu,
    LfuLite,
    Lru,
    CbFps,
    CbMps,
    CbSi,
    CbSiLite,
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
enum WorkloadArg {
    /// I.i.d. requests from a Zipf(beta) popularity profile.
    Zipf,
    /// Zipf profile whose top ranks rotate on a fixed schedule.
    Change,
    /// Piecewise-stationary profiles from a file, one row per phase.
    ProfileSeq,
    /// Recorded request trace, one item ID per line.
    Trace,
}

impl WorkloadArg {
    fn name(self) -> &'static str {
        match self {
            WorkloadArg::Zipf => "zipf",
            WorkloadArg::Change => "change",
            WorkloadArg::ProfileSeq => "profile-seq",
            WorkloadArg::Trace => "trace",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, ValueEnum)]
enum InitialArg {
    /// Start from the C lowest item IDs.
    Ids,
    /// Start from a seeded uniform draw of C items.
    Random,
}

impl From<InitialArg> for InitialCacheRule {
    fn from(arg: InitialArg) -> Self {
        match arg {
            InitialArg::Ids => InitialCacheRule::LowestIds,
            InitialArg::Random => InitialCacheRule::Random,
        }
    }
}

#[derive(Args, Debug)]
struct PolicyFlags {
    /// Placement policy.
    #[arg(long, value_enum)]
    policy: PolicyArg,

    /// Observation window length for wlfu, lfu-lite, and cb-si-lite
    /// (default: ceil(C^2 ln L)).
    #[arg(long)]
    window: Option<u64>,

    /// Mixture size cap for cb-fps (default 4096).
    #[arg(long)]
    max_components: Option<usize>,

    /// Popularity of the rank-C item, for cb-si and cb-si-lite
    /// (default: taken from the workload; requires --delta).
    #[arg(long)]
    mu_c: Option<f64>,

    /// Popularity gap between ranks C and C+1, for cb-si and cb-si-lite
    /// (default: taken from the workload; requires --mu-c).
    #[arg(long)]
    delta: Option<f64>,
}

impl PolicyFlags {
    fn build(&self) -> anyhow::Result<PolicyChoice> {
        use PolicyArg::*;
        if self.window.is_some() && !matches!(self.policy, Wlfu | LfuLite | CbSiLite) {
            bail!("--window only applies to wlfu, lfu-lite, and cb-si-lite");
        }
        if self.max_components.is_some() && self.policy != CbFps {
            bail!("--max-components only applies to cb-fps");
        }
        if (self.mu_c.is_some() || self.delta.is_some())
            && !matches!(self.policy, CbSi | CbSiLite)
        {
            bail!("--mu-c and --delta only apply to cb-si and cb-si-lite");
        }
        let source = match (self.mu_c, self.delta) {
            (Some(mu_c), Some(delta)) => SiSource::Explicit { mu_c, delta },
            (None, None) => SiSource::TrueProfile,
            _ => bail!("--mu-c and --delta must be given together"),
        };
        Ok(match self.policy {
            Lfu => PolicyChoice::Lfu,
            Wlfu => PolicyChoice::Wlfu { window: self.window },
            LfuLite => PolicyChoice::LfuLite { window: self.window },
            Lru => PolicyChoice::Lru,
            CbFps => PolicyChoice::CbFps {
                max_components: self.max_components.unwrap_or(4096),
            },
            CbMps => PolicyChoice::CbMps,
            CbSi => PolicyChoice::CbSi { source },
            CbSiLite => PolicyChoice::CbSiLite {
                window: self.window,
                source,
            },
        })
    }
}

#[derive(Args, Debug)]
struct WorkloadFlags {
    /// Request source.
    #[arg(long, value_enum, default_value_t = WorkloadArg::Zipf)]
    workload: WorkloadArg,

    /// Library size L (zipf and change; default 100).
    #[arg(long, short = 'l')]
    library: Option<u32>,

    /// Zipf exponent (zipf and change; default 1.0).
    #[arg(long)]
    beta: Option<f64>,

    /// change: steps between popularity rotations (default 10000).
    #[arg(long)]
    change_period: Option<u64>,

    /// change: how many top ranks rotate (default 20).
    #[arg(long)]
    change_top_k: Option<u32>,

    /// change: ranks shifted per rotation (default 5).
    #[arg(long)]
    change_shift: Option<u32>,

    /// profile-seq: file of probability rows, whitespace separated.
    #[arg(long)]
    profiles: Option<PathBuf>,

    /// profile-seq: steps drawn from each row (default 10000).
    #[arg(long)]
    samples_per_profile: Option<u64>,

    /// trace: request file, one integer item ID per line.
    #[arg(long)]
    trace: Option<PathBuf>,

    /// trace: file starts with an item_id header line.
    #[arg(long)]
    header: bool,

    /// trace: remap arbitrary IDs to dense 1..=L by first appearance.
    #[arg(long)]
    remap: bool,
}

impl WorkloadFlags {
    fn build(&self) -> anyhow::Result<WorkloadChoice> {
        let kind = self.workload;
        let only = |given: bool, flag: &str, wanted: &str| -> anyhow::Result<()> {
            if given && kind.name() != wanted {
                bail!(
                    "--{flag} only applies to the {wanted} workload, not {}",
                    kind.name()
                );
            }
            Ok(())
        };
        if (self.library.is_some() || self.beta.is_some())
            && !matches!(kind, WorkloadArg::Zipf | WorkloadArg::Change)
        {
            bail!("--library and --beta only apply to zipf and change workloads");
        }
        let change_given =
            self.change_period.is_some() || self.change_top_k.is_some() || self.change_shift.is_some();
        if change_given && kind != WorkloadArg::Change {
            bail!("--change-period/--change-top-k/--change-shift only apply to the change workload");
        }
        only(self.profiles.is_some(), "profiles", "profile-seq")?;
        only(self.samples_per_profile.is_some(), "samples-per-profile", "profile-seq")?;
        only(self.trace.is_some(), "trace", "trace")?;
        only(self.header, "header", "trace")?;
        only(self.remap, "remap", "trace")?;

        let library = self.library.unwrap_or(100);
        let beta = self.beta.unwrap_or(1.0);
        Ok(match kind {
            WorkloadArg::Zipf => WorkloadChoice::Zipf { library, beta },
            WorkloadArg::Change => WorkloadChoice::Change {
                library,
                beta,
                period: self.change_period.unwrap_or(10_000),
                top_k: self.change_top_k.unwrap_or(20),
                shift: self.change_shift.unwrap_or(5),
            },
            WorkloadArg::ProfileSeq => {
                let Some(path) = self.profiles.clone() else {
                    bail!("--profiles is required for the profile-seq workload");
                };
                WorkloadChoice::ProfileSequence {
                    path,
                    samples_per_profile: self.samples_per_profile.unwrap_or(10_000),
                }
            }
            WorkloadArg::Trace => {
                let Some(path) = self.trace.clone() else {
                    bail!("--trace is required for the trace workload");
                };
                WorkloadChoice::Trace {
                    path,
                    header: self.header,
                    remap: self.remap,
                }
            }
        })
    }
}

#[derive(Args, Debug)]
struct DriverFlags {
    /// Cache size C.
    #[arg(long, short = 'c', default_value_t = 10)]
    cache: u32,

    /// Steps per replication.
    #[arg(long, short = 't', default_value_t = 100_000)]
    horizon: u64,

    /// Independent replications averaged into the output.
    #[arg(long, short = 'r', default_value_t = 20)]
    replications: u32,

    /// Master seed; every replication derives its own stream from it.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Halve every popularity counter each time this many steps elapse.
    #[arg(long)]
    halve_every: Option<u64>,

    /// Initial cache contents.
    #[arg(long, value_enum, default_value_t = InitialArg::Ids)]
    initial: InitialArg,

    /// CSV output path; run metadata goes to <path>.meta alongside it.
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RunCmd {
    #[command(flatten)]
    policy: PolicyFlags,
    #[command(flatten)]
    workload: WorkloadFlags,
    #[command(flatten)]
    driver: DriverFlags,
}

impl RunCmd {
    fn config(&self) -> anyhow::Result<ExperimentConfig> {
        Ok(ExperimentConfig {
            policy: self.policy.build()?,
            workload: self.workload.build()?,
            cache_size: self.driver.cache,
            horizon: self.driver.horizon,
            replications: self.driver.replications,
            master_seed: self.driver.seed,
            halving_period: self.driver.halve_every,
            initial: self.driver.initial.into(),
            output: self.driver.output.clone(),
        })
    }
}

#[derive(Args, Debug)]
struct SweepCmd {
    #[command(flatten)]
    base: RunCmd,

    /// Flag to vary: window, library, beta, cache, horizon, replications,
    /// halve-every, or max-components.
    #[arg(long)]
    axis: String,

    /// Comma separated values for the swept flag.
    #[arg(long, value_delimiter = ',')]
    values: Vec<String>,
}

#[derive(Args, Debug)]
struct BoundsCmd {
    #[command(flatten)]
    base: RunCmd,
}

#[derive(Args, Debug)]
struct GenTraceCmd {
    /// zipf or change.
    #[arg(long, value_enum, default_value_t = WorkloadArg::Zipf)]
    workload: WorkloadArg,

    /// Library size L.
    #[arg(long, short = 'l', default_value_t = 100)]
    library: u32,

    /// Zipf exponent.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,

    /// change: steps between popularity rotations.
    #[arg(long, default_value_t = 10_000)]
    change_period: u64,

    /// change: how many top ranks rotate.
    #[arg(long, default_value_t = 20)]
    change_top_k: u32,

    /// change: ranks shifted per rotation.
    #[arg(long, default_value_t = 5)]
    change_shift: u32,

    /// Number of requests to generate.
    #[arg(long, short = 't', default_value_t = 100_000)]
    steps: u64,

    /// Seed for the request stream.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Start the file with an item_id header line.
    #[arg(long)]
    header: bool,

    /// Where to write the trace.
    #[arg(long, short = 'o')]
    output: PathBuf,
}

#[derive(Args, Debug)]
struct ReplayCmd {
    /// Request file, one integer item ID per line.
    trace: PathBuf,

    /// File starts with an item_id header line.
    #[arg(long)]
    header: bool,

    /// Remap arbitrary IDs to dense 1..=L by first appearance.
    #[arg(long)]
    remap: bool,

    /// Steps to simulate (default: the trace length; longer wraps around).
    #[arg(long, short = 't')]
    horizon: Option<u64>,

    #[command(flatten)]
    policy: PolicyFlags,

    /// Cache size C.
    #[arg(long, short = 'c', default_value_t = 10)]
    cache: u32,

    /// Independent replications (policies may still randomize).
    #[arg(long, short = 'r', default_value_t = 1)]
    replications: u32,

    /// Master seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,

    /// Halve every popularity counter each time this many steps elapse.
    #[arg(long)]
    halve_every: Option<u64>,

    /// Initial cache contents.
    #[arg(long, value_enum, default_value_t = InitialArg::Ids)]
    initial: InitialArg,

    /// CSV output path; run metadata goes to <path>.meta alongside it.
    #[arg(long, short = 'o')]
    output: Option<PathBuf>,
}

fn finish_run(config: &ExperimentConfig) -> anyhow::Result<()> {
    let table = commands::run(config)?;
    match &config.output {
        Some(path) => {
            println!("{}", commands::summarize(&table));
            println!(
                "wrote {} and {}",
                path.display(),
                output::meta_path(path).display()
            );
        }
        None => print!("{}", table.csv()),
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    match Cli::parse().command {
        Command::Run(cmd) => finish_run(&cmd.config()?),
        Command::Sweep(cmd) => {
            let base = cmd.base.config()?;
            let points = commands::sweep(&base, &cmd.axis, &cmd.values)?;
            for point in &points {
                println!("{}: {}", point.tag, commands::summarize(&point.table));
            }
            Ok(())
        }
        Command::Bounds(cmd) => {
            let config = cmd.base.config()?;
            print!("{}", commands::bounds_report(&config)?);
            Ok(())
        }
        Command::GenTrace(cmd) => {
            let schedule = match cmd.workload {
                WorkloadArg::Zipf => None,
                WorkloadArg::Change => Some(ChangeSchedule {
                    period: cmd.change_period,
                    top_k: cmd.change_top_k,
                    shift: cmd.change_shift,
                }),
                other => bail!("gen-trace generates zipf or change workloads, not {}", other.name()),
            };
            commands::gen_trace(
                cmd.library,
                cmd.beta,
                schedule,
                cmd.steps,
                cmd.seed,
                &cmd.output,
                cmd.header,
            )?;
            println!("wrote {} ({} requests)", cmd.output.display(), cmd.steps);
            Ok(())
        }
        Command::Replay(cmd) => {
            let horizon = match cmd.horizon {
                Some(t) => t,
                None => {
                    let loaded = cachelab::workloads::load_trace(
                        &cmd.trace,
                        TraceOptions {
                            header: cmd.header,
                            remap: cmd.remap,
                        },
                    )?;
                    loaded.trace.len() as u64
                }
            };
            let config = ExperimentConfig {
                policy: cmd.policy.build()?,
                workload: WorkloadChoice::Trace {
                    path: cmd.trace.clone(),
                    header: cmd.header,
                    remap: cmd.remap,
                },
                cache_size: cmd.cache,
                horizon,
                replications: cmd.replications,
                master_seed: cmd.seed,
                halving_period: cmd.halve_every,
                initial: cmd.initial.into(),
                output: cmd.output.clone(),
            };
            finish_run(&config)
        }
    }
}
