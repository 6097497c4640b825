//! Scheduling engine for a single agile Earth-observation satellite.
//!
//! The crate is organised as a pipeline:
//!
//! * [`instance`] defines the problem file format: orbit elements, satellite
//!   limits, and a list of observation/download tasks with fixed time windows.
//! * [`geometry`] derives those windows from two-body orbit propagation and
//!   ground-target geometry, and prices roll maneuvers.
//! * [`env`] walks tasks in window order as a deterministic accept/reject
//!   process with automatic screening of infeasible tasks, plus an
//!   independent schedule validator.
//! * [`ppo`] trains a small policy network on the environment and keeps the
//!   best schedule sampled during training.
//! * [`baselines`] provides first-come-first-served, greedy, random, and
//!   exhaustive branch-and-bound reference schedulers.
//! * [`synth`] generates seeded random instances for tests and experiments.

pub mod baselines;
pub mod env;
pub mod geometry;
pub mod instance;
pub mod nn;
pub mod ppo;
pub mod synth;

pub use baselines::{exact, exact_unpruned, fcfs, greedy_reward, random_policy, BaselineResult};
pub use env::{
    format_decisions, parse_decisions, validate_schedule, Action, SchedState, ValidationReport,
};
pub use geometry::{build_tasks, maneuver_time, ManeuverProfile, TaskGenConfig};
pub use instance::{
    parse_instance, parse_targets, serialize_instance, total_reward, Instance, InstanceError,
    OrbitElements, SatelliteConfig, Target, TaskKind, TaskSpec,
};
pub use ppo::{train, TrainConfig, TrainResult};
