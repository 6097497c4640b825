//! Problem instances: orbit, satellite limits, and the task list.
//!
//! Instances are stored in a line-oriented text format:
//!
//! ```text
//! # comment
//! orbit: a_km ecc incl_deg raan_deg argp_deg true_anom_deg epoch_rfc3339
//! satellite: max_storage max_roll_deg roll_rate roll_accel half_angle ltw_scale
//! horizon: start_s end_s
//! task <id> <observation|download> <win_start> <win_end> <roll_deg> <mem_delta> <reward>
//! ```
//!
//! Times are integer seconds from horizon start, angles decimal degrees.
//! [`Instance::new`] sorts tasks by `(window_start, id)` and rejects anything
//! that violates the model invariants, so downstream code can assume a clean,
//! ordered task list.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use chrono::{DateTime, SecondsFormat, Utc};
use thiserror::Error;

/// Mean equatorial Earth radius in kilometers.
pub const EARTH_RADIUS_KM: f64 = 6378.137;

#[derive(Debug, Error)]
pub enum InstanceError {
    /// Malformed text at a specific line (1-based; 0 for file-level problems).
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    /// A model invariant failed for one task.
    #[error("task {task}: {msg}")]
    TaskInvariant { task: i64, msg: String },
    /// A model invariant failed at the instance level.
    #[error("instance invariant: {msg}")]
    Invariant { msg: String },
    /// A task id that does not exist in the instance.
    #[error("unknown task id {0}")]
    UnknownId(i64),
}

/// A ground target to observe: position plus the reward for imaging it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Target {
    pub id: i64,
    pub reward: i64,
    pub lat_deg: f64,
    pub lon_deg: f64,
}

/// What executing a task does to the on-board storage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaskKind {
    /// Images a target; fills storage, earns the task reward.
    Observation,
    /// Downlinks data; frees storage, earns nothing.
    Download,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::Observation => "observation",
            TaskKind::Download => "download",
        }
    }
}

/// One schedulable task. Executing it occupies the whole window
/// `[window_start, window_end]` at the fixed roll attitude `roll_deg`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskSpec {
    pub id: i64,
    pub kind: TaskKind,
    pub window_start: i64,
    pub window_end: i64,
    pub roll_deg: f64,
    /// Storage change on acceptance: positive for observations, negative for
    /// downloads.
    pub memory_delta: i64,
    pub reward: i64,
}

/// Classical orbital elements at a reference epoch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrbitElements {
    pub semi_major_axis_km: f64,
    pub eccentricity: f64,
    pub inclination_deg: f64,
    pub raan_deg: f64,
    pub arg_perigee_deg: f64,
    pub true_anomaly_deg: f64,
    pub epoch: DateTime<Utc>,
}

/// Platform limits shared by every task in an instance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SatelliteConfig {
    /// Storage capacity in the same units as [`TaskSpec::memory_delta`].
    pub max_storage: i64,
    /// Largest admissible roll magnitude, degrees.
    pub max_roll_deg: f64,
    /// Peak roll rate, degrees per second.
    pub max_roll_rate: f64,
    /// Roll acceleration, degrees per second squared.
    pub roll_accel: f64,
    /// Half-angle of the imaging cone around the optical axis, degrees.
    pub sensor_half_angle_deg: f64,
    /// Divisor that maps summed remaining window seconds to a feature value.
    pub ltw_scale_s: f64,
}

/// A validated scheduling problem: tasks are unique, inside the horizon,
/// within roll limits, and sorted by `(window_start, id)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub orbit: OrbitElements,
    pub satellite: SatelliteConfig,
    pub horizon: (i64, i64),
    tasks: Vec<TaskSpec>,
}

impl Instance {
    pub fn new(
        orbit: OrbitElements,
        satellite: SatelliteConfig,
        horizon: (i64, i64),
        mut tasks: Vec<TaskSpec>,
    ) -> Result<Self, InstanceError> {
        validate_orbit(&orbit)?;
        validate_satellite(&satellite)?;
        if horizon.0 >= horizon.1 {
            return Err(InstanceError::Invariant {
                msg: format!("horizon start {} must precede end {}", horizon.0, horizon.1),
            });
        }
        let mut seen = BTreeSet::new();
        for t in &tasks {
            validate_task(t, &satellite, horizon)?;
            if !seen.insert(t.id) {
                return Err(InstanceError::TaskInvariant {
                    task: t.id,
                    msg: "duplicate task id".into(),
                });
            }
        }
        tasks.sort_by_key(|t| (t.window_start, t.id));
        Ok(Instance {
            orbit,
            satellite,
            horizon,
            tasks,
        })
    }

    /// Tasks in `(window_start, id)` order.
    pub fn tasks(&self) -> &[TaskSpec] {
        &self.tasks
    }

    pub fn task(&self, id: i64) -> Option<&TaskSpec> {
        self.tasks.iter().find(|t| t.id == id)
    }

    pub fn horizon_len(&self) -> i64 {
        self.horizon.1 - self.horizon.0
    }
}

fn validate_orbit(orbit: &OrbitElements) -> Result<(), InstanceError> {
    let fields = [
        ("semi-major axis", orbit.semi_major_axis_km),
        ("eccentricity", orbit.eccentricity),
        ("inclination", orbit.inclination_deg),
        ("RAAN", orbit.raan_deg),
        ("argument of perigee", orbit.arg_perigee_deg),
        ("true anomaly", orbit.true_anomaly_deg),
    ];
    for (name, v) in fields {
        if !v.is_finite() {
            return Err(InstanceError::Invariant {
                msg: format!("orbit {name} must be finite"),
            });
        }
    }
    if orbit.semi_major_axis_km <= EARTH_RADIUS_KM {
        return Err(InstanceError::Invariant {
            msg: format!(
                "semi-major axis {} km must exceed the Earth radius {} km",
                orbit.semi_major_axis_km, EARTH_RADIUS_KM
            ),
        });
    }
    if !(0.0..1.0).contains(&orbit.eccentricity) {
        return Err(InstanceError::Invariant {
            msg: format!("eccentricity {} must lie in [0, 1)", orbit.eccentricity),
        });
    }
    Ok(())
}

fn validate_satellite(sat: &SatelliteConfig) -> Result<(), InstanceError> {
    if sat.max_storage <= 0 {
        return Err(InstanceError::Invariant {
            msg: format!("max storage {} must be positive", sat.max_storage),
        });
    }
    let fields = [
        ("max roll", sat.max_roll_deg),
        ("roll rate", sat.max_roll_rate),
        ("roll acceleration", sat.roll_accel),
        ("sensor half-angle", sat.sensor_half_angle_deg),
        ("window scale", sat.ltw_scale_s),
    ];
    for (name, v) in fields {
        if !v.is_finite() || v <= 0.0 {
            return Err(InstanceError::Invariant {
                msg: format!("satellite {name} {v} must be positive and finite"),
            });
        }
    }
    if sat.max_roll_deg > 90.0 {
        return Err(InstanceError::Invariant {
            msg: format!("max roll {} deg must not exceed 90", sat.max_roll_deg),
        });
    }
    Ok(())
}

fn validate_task(
    task: &TaskSpec,
    sat: &SatelliteConfig,
    horizon: (i64, i64),
) -> Result<(), InstanceError> {
    let fail = |msg: String| Err(InstanceError::TaskInvariant { task: task.id, msg });
    if task.window_start >= task.window_end {
        return fail(format!(
            "window start {} must precede end {}",
            task.window_start, task.window_end
        ));
    }
    if task.window_start < horizon.0 || task.window_end > horizon.1 {
        return fail(format!(
            "window [{}, {}] falls outside the horizon [{}, {}]",
            task.window_start, task.window_end, horizon.0, horizon.1
        ));
    }
    if !task.roll_deg.is_finite() || task.roll_deg.abs() > sat.max_roll_deg {
        return fail(format!(
            "roll {} deg exceeds the limit {} deg",
            task.roll_deg, sat.max_roll_deg
        ));
    }
    if task.reward < 0 {
        return fail(format!("reward {} must be nonnegative", task.reward));
    }
    match task.kind {
        TaskKind::Observation => {
            if task.memory_delta <= 0 {
                return fail(format!(
                    "observation memory delta {} must be positive",
                    task.memory_delta
                ));
            }
            if task.memory_delta > sat.max_storage {
                return fail(format!(
                    "memory delta {} cannot fit in storage {}",
                    task.memory_delta, sat.max_storage
                ));
            }
        }
        TaskKind::Download => {
            if task.memory_delta >= 0 {
                return fail(format!(
                    "download memory delta {} must be negative",
                    task.memory_delta
                ));
            }
            if task.reward != 0 {
                return fail(format!("download reward {} must be zero", task.reward));
            }
        }
    }
    Ok(())
}

/// Sum of rewards over a set of task ids (duplicates count once).
pub fn total_reward(inst: &Instance, ids: &[i64]) -> Result<i64, InstanceError> {
    let set: BTreeSet<i64> = ids.iter().copied().collect();
    let mut sum = 0;
    for id in set {
        let task = inst.task(id).ok_or(InstanceError::UnknownId(id))?;
        sum += task.reward;
    }
    Ok(sum)
}

fn syntax(line: usize, msg: impl Into<String>) -> InstanceError {
    InstanceError::Syntax {
        line,
        msg: msg.into(),
    }
}

fn parse_num<T: std::str::FromStr>(
    tok: &str,
    line: usize,
    field: &str,
) -> Result<T, InstanceError> {
    tok.parse()
        .map_err(|_| syntax(line, format!("cannot parse {field} from `{tok}`")))
}

fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            None
        } else {
            Some((i + 1, body))
        }
    })
}

/// Parse the instance text format. `#` starts a comment, blank lines are
/// skipped, and the `orbit:`, `satellite:`, and `horizon:` headers may appear
/// in any order before or between task lines, each exactly once.
pub fn parse_instance(text: &str) -> Result<Instance, InstanceError> {
    let mut orbit = None;
    let mut satellite = None;
    let mut horizon = None;
    let mut tasks = Vec::new();

    for (line, body) in content_lines(text) {
        let mut toks = body.split_whitespace();
        let head = toks.next().expect("content line is nonempty");
        let rest: Vec<&str> = toks.collect();
        match head {
            "orbit:" => {
                if orbit.is_some() {
                    return Err(syntax(line, "duplicate `orbit:` line"));
                }
                if rest.len() != 7 {
                    return Err(syntax(
                        line,
                        format!("expected 7 orbit fields, got {}", rest.len()),
                    ));
                }
                let epoch = DateTime::parse_from_rfc3339(rest[6])
                    .map_err(|e| syntax(line, format!("bad epoch `{}`: {e}", rest[6])))?
                    .with_timezone(&Utc);
                orbit = Some(OrbitElements {
                    semi_major_axis_km: parse_num(rest[0], line, "semi-major axis")?,
                    eccentricity: parse_num(rest[1], line, "eccentricity")?,
                    inclination_deg: parse_num(rest[2], line, "inclination")?,
                    raan_deg: parse_num(rest[3], line, "RAAN")?,
                    arg_perigee_deg: parse_num(rest[4], line, "argument of perigee")?,
                    true_anomaly_deg: parse_num(rest[5], line, "true anomaly")?,
                    epoch,
                });
            }
            "satellite:" => {
                if satellite.is_some() {
                    return Err(syntax(line, "duplicate `satellite:` line"));
                }
                if rest.len() != 6 {
                    return Err(syntax(
                        line,
                        format!("expected 6 satellite fields, got {}", rest.len()),
                    ));
                }
                satellite = Some(SatelliteConfig {
                    max_storage: parse_num(rest[0], line, "max storage")?,
                    max_roll_deg: parse_num(rest[1], line, "max roll")?,
                    max_roll_rate: parse_num(rest[2], line, "roll rate")?,
                    roll_accel: parse_num(rest[3], line, "roll acceleration")?,
                    sensor_half_angle_deg: parse_num(rest[4], line, "sensor half-angle")?,
                    ltw_scale_s: parse_num(rest[5], line, "window scale")?,
                });
            }
            "horizon:" => {
                if horizon.is_some() {
                    return Err(syntax(line, "duplicate `horizon:` line"));
                }
                if rest.len() != 2 {
                    return Err(syntax(
                        line,
                        format!("expected 2 horizon fields, got {}", rest.len()),
                    ));
                }
                horizon = Some((
                    parse_num(rest[0], line, "horizon start")?,
                    parse_num(rest[1], line, "horizon end")?,
                ));
            }
            "task" => {
                if rest.len() != 7 {
                    return Err(syntax(
                        line,
                        format!("expected 7 task fields, got {}", rest.len()),
                    ));
                }
                let kind = match rest[1] {
                    "observation" => TaskKind::Observation,
                    "download" => TaskKind::Download,
                    other => {
                        return Err(syntax(
                            line,
                            format!("task kind `{other}` is not observation or download"),
                        ))
                    }
                };
                tasks.push(TaskSpec {
                    id: parse_num(rest[0], line, "task id")?,
                    kind,
                    window_start: parse_num(rest[2], line, "window start")?,
                    window_end: parse_num(rest[3], line, "window end")?,
                    roll_deg: parse_num(rest[4], line, "roll angle")?,
                    memory_delta: parse_num(rest[5], line, "memory delta")?,
                    reward: parse_num(rest[6], line, "reward")?,
                });
            }
            other => return Err(syntax(line, format!("unrecognized line `{other} ...`"))),
        }
    }

    let orbit = orbit.ok_or_else(|| syntax(0, "missing `orbit:` line"))?;
    let satellite = satellite.ok_or_else(|| syntax(0, "missing `satellite:` line"))?;
    let horizon = horizon.ok_or_else(|| syntax(0, "missing `horizon:` line"))?;
    Instance::new(orbit, satellite, horizon, tasks)
}

/// Render an instance in the canonical text form. Floats print in shortest
/// round-trip notation, so `parse_instance(serialize_instance(x)) == x` and
/// serializing again reproduces the same bytes.
pub fn serialize_instance(inst: &Instance) -> String {
    let mut out = String::new();
    let o = &inst.orbit;
    writeln!(
        out,
        "orbit: {} {} {} {} {} {} {}",
        o.semi_major_axis_km,
        o.eccentricity,
        o.inclination_deg,
        o.raan_deg,
        o.arg_perigee_deg,
        o.true_anomaly_deg,
        o.epoch.to_rfc3339_opts(SecondsFormat::AutoSi, true),
    )
    .unwrap();
    let s = &inst.satellite;
    writeln!(
        out,
        "satellite: {} {} {} {} {} {}",
        s.max_storage,
        s.max_roll_deg,
        s.max_roll_rate,
        s.roll_accel,
        s.sensor_half_angle_deg,
        s.ltw_scale_s,
    )
    .unwrap();
    writeln!(out, "horizon: {} {}", inst.horizon.0, inst.horizon.1).unwrap();
    for t in &inst.tasks {
        writeln!(
            out,
            "task {} {} {} {} {} {} {}",
            t.id,
            t.kind.as_str(),
            t.window_start,
            t.window_end,
            t.roll_deg,
            t.memory_delta,
            t.reward,
        )
        .unwrap();
    }
    out
}

/// Parse a target list: one `id reward lat_deg lon_deg` line per target.
pub fn parse_targets(text: &str) -> Result<Vec<Target>, InstanceError> {
    let mut targets: Vec<Target> = Vec::new();
    let mut seen = BTreeSet::new();
    for (line, body) in content_lines(text) {
        let toks: Vec<&str> = body.split_whitespace().collect();
        if toks.len() != 4 {
            return Err(syntax(
                line,
                format!("expected 4 target fields, got {}", toks.len()),
            ));
        }
        let t = Target {
            id: parse_num(toks[0], line, "target id")?,
            reward: parse_num(toks[1], line, "reward")?,
            lat_deg: parse_num(toks[2], line, "latitude")?,
            lon_deg: parse_num(toks[3], line, "longitude")?,
        };
        if !seen.insert(t.id) {
            return Err(syntax(line, format!("duplicate target id {}", t.id)));
        }
        if t.reward < 0 {
            return Err(syntax(
                line,
                format!("reward {} must be nonnegative", t.reward),
            ));
        }
        if !(-90.0..=90.0).contains(&t.lat_deg) {
            return Err(syntax(line, format!("latitude {} out of range", t.lat_deg)));
        }
        if !(-180.0..=180.0).contains(&t.lon_deg) {
            return Err(syntax(
                line,
                format!("longitude {} out of range", t.lon_deg),
            ));
        }
        targets.push(t);
    }
    Ok(targets)
}

/// The bundled 50-target reference instance (one pass over the Americas,
/// 1800 s horizon, five periodic download slots).
pub fn bundled50() -> Instance {
    parse_instance(include_str!("../../../instances/bundled50.txt"))
        .expect("bundled instance is valid")
}

/// The 50 ground targets the bundled instance was generated from.
pub fn bundled50_targets() -> Vec<Target> {
    parse_targets(include_str!("../../../data/targets50.txt"))
        .expect("bundled target list is valid")
}
