//! `satsched`: generate observation windows, train the scheduling policy,
//! and compare it against reference schedulers.
//!
//! Exit codes: 0 success (or valid schedule), 1 invalid schedule, 2 runtime
//! failure, 64 usage error.

mod commands;
mod config;
mod manifest;

use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use commands::{Ctx, UsageError};

#[derive(Parser)]
#[command(
    name = "satsched",
    version,
    about = "Schedule an agile Earth-observation satellite"
)]
struct Cli {
    /// Instance file (required by train, validate, baseline, compare).
    #[arg(long, global = true)]
    instance: Option<PathBuf>,

    /// Base RNG seed for seeded commands.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Directory for outputs and run manifests.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    /// key=value file overriding satellite, task-generation, and training
    /// defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute visibility windows for ground targets and write an instance.
    GenWindows(GenWindowsArgs),
    /// Train the scheduling policy; export best schedule, curve, weights.
    Train(TrainArgs),
    /// Check a decision file against an instance.
    Validate(ValidateArgs),
    /// Run one reference scheduler and write its schedule.
    Baseline(BaselineArgs),
    /// Run several schedulers and tabulate rewards per seed.
    Compare(CompareArgs),
}

#[derive(Args)]
struct GenWindowsArgs {
    /// Target list, one `id reward lat_deg lon_deg` per line.
    #[arg(long)]
    targets: PathBuf,

    /// Instance file to write (default: <out-dir>/instance.txt).
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long, default_value_t = 6800.0)]
    semi_major_axis_km: f64,

    #[arg(long, default_value_t = 0.01)]
    eccentricity: f64,

    #[arg(long, default_value_t = 55.0)]
    inclination_deg: f64,

    #[arg(long, default_value_t = 90.0)]
    raan_deg: f64,

    #[arg(long, default_value_t = 90.0)]
    arg_perigee_deg: f64,

    #[arg(long, default_value_t = 0.0)]
    true_anomaly_deg: f64,

    /// Epoch as RFC 3339, e.g. 2019-12-30T15:00:00Z.
    #[arg(long, default_value = "2019-12-30T15:00:00Z")]
    epoch: String,

    #[arg(long, default_value_t = 0)]
    horizon_start_s: i64,

    #[arg(long, default_value_t = 1800)]
    horizon_end_s: i64,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    episodes: Option<usize>,

    #[arg(long)]
    hidden: Option<usize>,

    #[arg(long)]
    discount: Option<f64>,

    #[arg(long)]
    kl_weight: Option<f64>,

    #[arg(long)]
    actor_lr: Option<f64>,

    #[arg(long)]
    critic_lr: Option<f64>,

    #[arg(long)]
    actor_epochs: Option<usize>,

    #[arg(long)]
    critic_epochs: Option<usize>,

    /// Count a step's own reward in its return-to-go (default: only
    /// strictly later rewards count).
    #[arg(long)]
    include_current_reward: bool,
}

#[derive(Args)]
struct ValidateArgs {
    /// Decision file produced by train or baseline.
    sched: PathBuf,
}

#[derive(Args)]
struct BaselineArgs {
    /// One of: fcfs, greedy, random, exact.
    #[arg(long)]
    method: String,
}

#[derive(Args)]
struct CompareArgs {
    /// Comma-separated subset of fcfs, greedy, random, exact, ppo; rows
    /// keep this order.
    #[arg(long, default_value = "fcfs,greedy,random,ppo")]
    methods: String,

    /// Seed count for the seeded methods (random, ppo): seeds run from
    /// --seed to --seed + N - 1.
    #[arg(long, default_value_t = 1)]
    seeds: u64,
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
        }
    };
    match dispatch(cli) {
        Ok(code) => code,
        Err(err) if err.is::<UsageError>() => {
            eprintln!("usage error: {err:#}");
            64
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            2
        }
    }
}

fn dispatch(cli: Cli) -> anyhow::Result<i32> {
    use anyhow::Context;

    std::fs::create_dir_all(&cli.out_dir)
        .with_context(|| format!("create out dir {}", cli.out_dir.display()))?;
    let overrides = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("read config {}", path.display()))?;
            config::parse_overrides(&text)
                .with_context(|| format!("parse config {}", path.display()))?
        }
        None => Default::default(),
    };
    let ctx = Ctx {
        instance: cli.instance,
        seed: cli.seed,
        out_dir: cli.out_dir,
        overrides,
    };
    match cli.command {
        Command::GenWindows(args) => commands::gen_windows(&ctx, &args),
        Command::Train(args) => commands::train(&ctx, &args),
        Command::Validate(args) => commands::validate(&ctx, &args),
        Command::Baseline(args) => commands::baseline(&ctx, &args),
        Command::Compare(args) => commands::compare(&ctx, &args),
    }
}
