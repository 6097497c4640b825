//! The five subcommands behind the `satsched` binary.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::fs::File;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use chrono::{DateTime, Utc};

use satsched_core::geometry::observation_candidates;
use satsched_core::ppo::write_params;
use satsched_core::{
    build_tasks, exact, fcfs, format_decisions, greedy_reward, parse_decisions, parse_instance,
    parse_targets, random_policy, serialize_instance, validate_schedule, BaselineResult, Instance,
    OrbitElements, SatelliteConfig, TaskGenConfig, TaskKind, TrainConfig,
};

use crate::config;
use crate::manifest::RunManifest;
use crate::{BaselineArgs, CompareArgs, GenWindowsArgs, TrainArgs, ValidateArgs};

/// Error that should exit with the usage code instead of the failure code.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// Global flags, resolved.
pub struct Ctx {
    pub instance: Option<PathBuf>,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub overrides: BTreeMap<String, String>,
}

fn load_instance(ctx: &Ctx) -> Result<(Instance, PathBuf)> {
    let path = ctx
        .instance
        .clone()
        .ok_or_else(|| UsageError("--instance is required for this command".into()))?;
    let text =
        fs::read_to_string(&path).with_context(|| format!("read instance {}", path.display()))?;
    let inst =
        parse_instance(&text).with_context(|| format!("parse instance {}", path.display()))?;
    Ok((inst, path))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("write {}", path.display()))
}

pub fn gen_windows(ctx: &Ctx, args: &GenWindowsArgs) -> Result<i32> {
    let started = Instant::now();
    let text = fs::read_to_string(&args.targets)
        .with_context(|| format!("read targets {}", args.targets.display()))?;
    let targets = parse_targets(&text)
        .with_context(|| format!("parse targets {}", args.targets.display()))?;

    let epoch = DateTime::parse_from_rfc3339(&args.epoch)
        .map_err(|e| UsageError(format!("--epoch {:?}: {e}", args.epoch)))?
        .with_timezone(&Utc);
    let orbit = OrbitElements {
        semi_major_axis_km: args.semi_major_axis_km,
        eccentricity: args.eccentricity,
        inclination_deg: args.inclination_deg,
        raan_deg: args.raan_deg,
        arg_perigee_deg: args.arg_perigee_deg,
        true_anomaly_deg: args.true_anomaly_deg,
        epoch,
    };
    let mut sat = SatelliteConfig {
        max_storage: 8,
        max_roll_deg: 45.0,
        max_roll_rate: 1.0,
        roll_accel: 0.5,
        sensor_half_angle_deg: 10.0,
        ltw_scale_s: 1800.0,
    };
    config::apply_satellite(&ctx.overrides, &mut sat)?;
    let mut gen = TaskGenConfig::default();
    config::apply_taskgen(&ctx.overrides, &mut gen)?;
    let horizon = (args.horizon_start_s, args.horizon_end_s);

    let tasks = build_tasks(&orbit, &sat, &targets, horizon, &gen).context("window generation")?;
    let n_obs = tasks
        .iter()
        .filter(|t| t.kind == TaskKind::Observation)
        .count();
    let n_dl = tasks.len() - n_obs;
    let inst = Instance::new(orbit, sat, horizon, tasks).context("assemble instance")?;

    let out_path = args
        .out
        .clone()
        .unwrap_or_else(|| ctx.out_dir.join("instance.txt"));
    write_file(&out_path, &serialize_instance(&inst))?;

    let hf = (horizon.0 as f64, horizon.1 as f64);
    println!(
        "{:>6} {:>7} {:>11} {:>9} {:>18} {:>12}",
        "target", "reward", "t_cross_s", "roll_deg", "window_s", "task_s"
    );
    for target in &targets {
        let cands = observation_candidates(&orbit, &sat, target, hf)?;
        if cands.is_empty() {
            println!(
                "{:>6} {:>7} {:>11} {:>9} {:>18} {:>12}",
                target.id, target.reward, "-", "-", "-", "-"
            );
            continue;
        }
        for c in &cands {
            let window = match c.window {
                Some((s, e)) => format!("{s:.2}..{e:.2}"),
                None => "-".into(),
            };
            // Mirrors the inward rounding build_tasks applies.
            let task = match c.window {
                Some((s, e))
                    if s >= hf.0
                        && e <= hf.1
                        && (s.ceil() as i64) < (e.floor() as i64)
                        && s.ceil() < c.t_cross
                        && c.t_cross < e.floor() =>
                {
                    format!("{}..{}", s.ceil() as i64, e.floor() as i64)
                }
                _ => "-".into(),
            };
            println!(
                "{:>6} {:>7} {:>11.3} {:>9.3} {:>18} {:>12}",
                target.id, target.reward, c.t_cross, c.roll_deg, window, task
            );
        }
    }
    println!(
        "{n_obs} observation task(s) and {n_dl} download slot(s) -> {}",
        out_path.display()
    );

    let mut man = RunManifest::new("gen-windows");
    man.config = ctx.overrides.clone();
    man.record_output(&out_path);
    man.finish(&ctx.out_dir, started)?;
    Ok(0)
}

fn effective_train_config(ctx: &Ctx, args: &TrainArgs) -> Result<TrainConfig> {
    let mut cfg = TrainConfig::default();
    config::apply_train(&ctx.overrides, &mut cfg)?;
    if let Some(v) = args.episodes {
        cfg.episodes = v;
    }
    if let Some(v) = args.hidden {
        cfg.hidden = v;
    }
    if let Some(v) = args.discount {
        cfg.discount = v;
    }
    if let Some(v) = args.kl_weight {
        cfg.kl_weight = v;
    }
    if let Some(v) = args.actor_lr {
        cfg.actor_lr = v;
    }
    if let Some(v) = args.critic_lr {
        cfg.critic_lr = v;
    }
    if let Some(v) = args.actor_epochs {
        cfg.actor_epochs = v;
    }
    if let Some(v) = args.critic_epochs {
        cfg.critic_epochs = v;
    }
    if args.include_current_reward {
        cfg.include_current_reward = true;
    }
    cfg.seed = ctx.seed;
    Ok(cfg)
}

fn train_config_map(cfg: &TrainConfig) -> BTreeMap<String, String> {
    let mut map = BTreeMap::new();
    map.insert("episodes".into(), cfg.episodes.to_string());
    map.insert("actor_epochs".into(), cfg.actor_epochs.to_string());
    map.insert("critic_epochs".into(), cfg.critic_epochs.to_string());
    map.insert("discount".into(), cfg.discount.to_string());
    map.insert("kl_weight".into(), cfg.kl_weight.to_string());
    map.insert("actor_lr".into(), cfg.actor_lr.to_string());
    map.insert("critic_lr".into(), cfg.critic_lr.to_string());
    map.insert("hidden".into(), cfg.hidden.to_string());
    map.insert(
        "include_current_reward".into(),
        cfg.include_current_reward.to_string(),
    );
    map
}

pub fn train(ctx: &Ctx, args: &TrainArgs) -> Result<i32> {
    let started = Instant::now();
    let (inst, inst_path) = load_instance(ctx)?;
    let cfg = effective_train_config(ctx, args)?;
    let result = satsched_core::train(&inst, &cfg).context("training")?;

    let report = validate_schedule(&inst, &result.best_decisions)?;
    if !report.valid {
        bail!("best episode failed validation: {:?}", report.violations);
    }

    let best_path = ctx.out_dir.join("best.sched");
    write_file(&best_path, &format_decisions(&result.best_decisions, &inst))?;

    let curve_path = ctx.out_dir.join("curve.csv");
    let mut csv = String::from("episode,return\n");
    for (i, r) in result.reward_curve.iter().enumerate() {
        csv.push_str(&format!("{i},{r}\n"));
    }
    write_file(&curve_path, &csv)?;

    let params_path = ctx.out_dir.join("params.bin");
    let mut file =
        File::create(&params_path).with_context(|| format!("create {}", params_path.display()))?;
    write_params(&mut file, &result.actor, &result.critic)
        .with_context(|| format!("write {}", params_path.display()))?;

    println!(
        "trained {} episode(s) on {} task(s), seed {}",
        result.reward_curve.len(),
        inst.tasks().len(),
        cfg.seed
    );
    println!(
        "best reward {} with {} accept(s)",
        result.best_reward,
        report.accepted_ids.len()
    );
    println!("{}", report.machine_line());

    let mut man = RunManifest::new("train");
    man.instance = Some(inst_path.display().to_string());
    man.seed = Some(cfg.seed);
    man.config = train_config_map(&cfg);
    man.record_output(&best_path);
    man.record_output(&curve_path);
    man.record_output(&params_path);
    man.finish(&ctx.out_dir, started)?;
    Ok(0)
}

pub fn validate(ctx: &Ctx, args: &ValidateArgs) -> Result<i32> {
    let started = Instant::now();
    let (inst, inst_path) = load_instance(ctx)?;
    let text = fs::read_to_string(&args.sched)
        .with_context(|| format!("read schedule {}", args.sched.display()))?;
    let decisions = parse_decisions(&text, &inst)
        .with_context(|| format!("parse schedule {}", args.sched.display()))?;
    let report = validate_schedule(&inst, &decisions)?;

    print!("{report}");
    println!("{}", report.machine_line());

    let mut man = RunManifest::new("validate");
    man.instance = Some(inst_path.display().to_string());
    man.finish(&ctx.out_dir, started)?;
    Ok(if report.valid { 0 } else { 1 })
}

pub fn baseline(ctx: &Ctx, args: &BaselineArgs) -> Result<i32> {
    let started = Instant::now();
    let (inst, inst_path) = load_instance(ctx)?;
    let result = run_baseline(&args.method, &inst, ctx.seed)?;

    let out_path = ctx.out_dir.join(format!("{}.sched", result.method));
    write_file(&out_path, &format_decisions(&result.decisions, &inst))?;
    println!(
        "method={} reward={} steps={}",
        result.method, result.total_reward, result.steps
    );

    let mut man = RunManifest::new("baseline");
    man.instance = Some(inst_path.display().to_string());
    man.seed = Some(ctx.seed);
    man.record_output(&out_path);
    man.finish(&ctx.out_dir, started)?;
    Ok(0)
}

fn run_baseline(method: &str, inst: &Instance, seed: u64) -> Result<BaselineResult> {
    Ok(match method {
        "fcfs" => fcfs(inst),
        "greedy" => greedy_reward(inst),
        "random" => random_policy(inst, seed),
        "exact" => exact(inst).context("exact search")?,
        other => {
            return Err(UsageError(format!(
                "unknown method {other:?} (expected fcfs, greedy, random, or exact)"
            ))
            .into())
        }
    })
}

struct CompareRow {
    method: String,
    seed: Option<u64>,
    reward: i64,
    steps: u64,
    runtime_s: f64,
}

pub fn compare(ctx: &Ctx, args: &CompareArgs) -> Result<i32> {
    let started = Instant::now();
    let (inst, inst_path) = load_instance(ctx)?;

    let methods: Vec<&str> = args
        .methods
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect();
    if methods.is_empty() {
        return Err(UsageError("--methods lists no methods".into()).into());
    }
    for m in &methods {
        if !["fcfs", "greedy", "random", "exact", "ppo"].contains(m) {
            return Err(UsageError(format!(
                "unknown method {m:?} (expected fcfs, greedy, random, exact, or ppo)"
            ))
            .into());
        }
    }
    if args.seeds == 0 {
        return Err(UsageError("--seeds must be at least 1".into()).into());
    }
    let last_seed = ctx
        .seed
        .checked_add(args.seeds - 1)
        .ok_or_else(|| UsageError("--seed plus --seeds overflows".into()))?;

    let mut rows = Vec::new();
    for method in &methods {
        match *method {
            "fcfs" | "greedy" | "exact" => {
                let t = Instant::now();
                let r = run_baseline(method, &inst, ctx.seed)?;
                rows.push(CompareRow {
                    method: method.to_string(),
                    seed: None,
                    reward: r.total_reward,
                    steps: r.steps,
                    runtime_s: t.elapsed().as_secs_f64(),
                });
            }
            "random" => {
                for seed in ctx.seed..=last_seed {
                    let t = Instant::now();
                    let r = random_policy(&inst, seed);
                    rows.push(CompareRow {
                        method: method.to_string(),
                        seed: Some(seed),
                        reward: r.total_reward,
                        steps: r.steps,
                        runtime_s: t.elapsed().as_secs_f64(),
                    });
                }
            }
            "ppo" => {
                let mut cfg = TrainConfig::default();
                config::apply_train(&ctx.overrides, &mut cfg)?;
                for seed in ctx.seed..=last_seed {
                    cfg.seed = seed;
                    let t = Instant::now();
                    let result = satsched_core::train(&inst, &cfg).context("training")?;
                    rows.push(CompareRow {
                        method: method.to_string(),
                        seed: Some(seed),
                        reward: result.best_reward,
                        // Search effort: one episode per step.
                        steps: result.reward_curve.len() as u64,
                        runtime_s: t.elapsed().as_secs_f64(),
                    });
                }
            }
            _ => unreachable!("methods are validated above"),
        }
    }

    println!(
        "{:<8} {:>6} {:>7} {:>8} {:>10}",
        "method", "seed", "reward", "steps", "runtime_s"
    );
    let mut csv = String::from("method,seed,reward,steps\n");
    for row in &rows {
        let seed = row.seed.map(|s| s.to_string()).unwrap_or_default();
        println!(
            "{:<8} {:>6} {:>7} {:>8} {:>10.3}",
            row.method,
            if seed.is_empty() { "-" } else { &seed },
            row.reward,
            row.steps,
            row.runtime_s
        );
        csv.push_str(&format!(
            "{},{},{},{}\n",
            row.method, seed, row.reward, row.steps
        ));
    }
    let csv_path = ctx.out_dir.join("compare.csv");
    write_file(&csv_path, &csv)?;

    let mut man = RunManifest::new("compare");
    man.instance = Some(inst_path.display().to_string());
    man.seed = Some(ctx.seed);
    man.config = ctx.overrides.clone();
    man.record_output(&csv_path);
    man.finish(&ctx.out_dir, started)?;
    Ok(0)
}
