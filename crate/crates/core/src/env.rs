//! Deterministic scheduling environment and independent schedule validator.
//!
//! Tasks are presented in `(window_start, id)` order. Before the agent sees a
//! task it is screened: anything that conflicts with the schedule built so
//! far (window taken, not enough maneuver time, storage bound) is skipped
//! automatically, so the agent only ever decides between keeping or passing
//! on a feasible task. Executing a task occupies its entire window at its
//! fixed roll angle.
//!
//! [`validate_schedule`] re-derives feasibility of a finished decision vector
//! from the instance alone. It shares no logic with [`SchedState`]; the two
//! act as oracles for each other in tests.

use std::fmt;

use thiserror::Error;

use crate::geometry::{maneuver_time, ManeuverProfile};
use crate::instance::{Instance, TaskSpec};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum EnvError {
    #[error("step called on a terminal state")]
    StepOnTerminal,
    #[error("decision vector has {got} entries, instance has {expected} tasks")]
    DecisionLength { expected: usize, got: usize },
    #[error("decision vector entry {index} is {value}, expected 0 or 1")]
    DecisionValue { index: usize, value: u8 },
    #[error("malformed decision file: {0}")]
    Format(String),
}

/// The binary decision offered for each screened-feasible task.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Reject = 0,
    Accept = 1,
}

/// Why a task was screened out.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConflictReason {
    /// No remaining window slice contains the task's interval.
    WindowGone,
    /// Too little slack to roll from/to a scheduled neighbor.
    ManeuverInfeasible,
    /// Accepting would push storage outside `[0, max_storage]`.
    StorageOverflow,
}

impl fmt::Display for ConflictReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ConflictReason::WindowGone => "window_gone",
            ConflictReason::ManeuverInfeasible => "maneuver_infeasible",
            ConflictReason::StorageOverflow => "storage_overflow",
        };
        f.write_str(s)
    }
}

/// A task already committed to the schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcceptedTask {
    pub id: i64,
    pub start: i64,
    pub end: i64,
    pub roll_deg: f64,
}

/// Schedule under construction plus the summary the agent observes.
#[derive(Debug, Clone, PartialEq)]
pub struct SchedState {
    pub storage_used: i64,
    /// Index into the sorted task list of the task currently offered;
    /// equals the task count once the episode is over.
    pub next_task_index: usize,
    /// Unoccupied time slices, disjoint and ascending.
    pub remaining_windows: Vec<(i64, i64)>,
    pub current_roll_deg: f64,
    pub accepted: Vec<AcceptedTask>,
    pub cumulative_reward: i64,
}

impl SchedState {
    /// Fresh state at nadir with the whole horizon free, pre-screened so the
    /// first offered task is feasible.
    pub fn reset(inst: &Instance) -> SchedState {
        let mut state = SchedState {
            storage_used: 0,
            next_task_index: 0,
            remaining_windows: vec![inst.horizon],
            current_roll_deg: 0.0,
            accepted: Vec::new(),
            cumulative_reward: 0,
        };
        state.screen(inst);
        state
    }

    pub fn is_terminal(&self, inst: &Instance) -> bool {
        self.next_task_index >= inst.tasks().len()
    }

    /// First reason accepting `task` would break the schedule, checked in
    /// the order: window availability, maneuver slack (to the chronological
    /// predecessor and successor), storage bounds.
    pub fn conflict(&self, task: &TaskSpec, inst: &Instance) -> Option<ConflictReason> {
        let fits = self
            .remaining_windows
            .iter()
            .any(|&(s, e)| s <= task.window_start && task.window_end <= e);
        if !fits {
            return Some(ConflictReason::WindowGone);
        }

        let profile = ManeuverProfile::from(&inst.satellite);
        let prev = self
            .accepted
            .iter()
            .filter(|a| a.end <= task.window_start)
            .max_by_key(|a| (a.end, a.id));
        if let Some(p) = prev {
            if ((task.window_start - p.end) as f64)
                < maneuver_time(p.roll_deg, task.roll_deg, &profile)
            {
                return Some(ConflictReason::ManeuverInfeasible);
            }
        }
        let next = self
            .accepted
            .iter()
            .filter(|a| a.start >= task.window_end)
            .min_by_key(|a| (a.start, a.id));
        if let Some(n) = next {
            if ((n.start - task.window_end) as f64)
                < maneuver_time(task.roll_deg, n.roll_deg, &profile)
            {
                return Some(ConflictReason::ManeuverInfeasible);
            }
        }

        let after = self.storage_used + task.memory_delta;
        if after < 0 || after > inst.satellite.max_storage {
            return Some(ConflictReason::StorageOverflow);
        }
        None
    }

    /// Skip forward past conflicting tasks; they are implicitly rejected.
    pub fn screen(&mut self, inst: &Instance) {
        while let Some(task) = inst.tasks().get(self.next_task_index) {
            if self.conflict(task, inst).is_none() {
                break;
            }
            self.next_task_index += 1;
        }
    }

    /// Decide on the currently offered task, then advance and re-screen.
    /// Returns the immediate reward and whether the episode ended.
    pub fn step(&mut self, action: Action, inst: &Instance) -> Result<(i64, bool), EnvError> {
        if self.is_terminal(inst) {
            return Err(EnvError::StepOnTerminal);
        }
        let task = inst.tasks()[self.next_task_index];
        debug_assert!(self.conflict(&task, inst).is_none());
        let reward = match action {
            Action::Accept => {
                self.occupy(task.window_start, task.window_end);
                self.storage_used += task.memory_delta;
                self.current_roll_deg = task.roll_deg;
                self.accepted.push(AcceptedTask {
                    id: task.id,
                    start: task.window_start,
                    end: task.window_end,
                    roll_deg: task.roll_deg,
                });
                self.cumulative_reward += task.reward;
                task.reward
            }
            Action::Reject => 0,
        };
        debug_assert!(self.storage_used >= 0 && self.storage_used <= inst.satellite.max_storage);
        self.next_task_index += 1;
        self.screen(inst);
        Ok((reward, self.is_terminal(inst)))
    }

    /// Remove the slice `[start, end]` from the remaining windows.
    fn occupy(&mut self, start: i64, end: i64) {
        let idx = self
            .remaining_windows
            .iter()
            .position(|&(s, e)| s <= start && end <= e)
            .expect("occupied interval lies in a remaining window");
        let (s, e) = self.remaining_windows.remove(idx);
        if end < e {
            self.remaining_windows.insert(idx, (end, e));
        }
        if s < start {
            self.remaining_windows.insert(idx, (s, start));
        }
    }

    /// Network input: `[storage fill, task progress, remaining window
    /// measure / scale, roll / roll limit]`.
    pub fn features(&self, inst: &Instance) -> [f64; 4] {
        let n = inst.tasks().len();
        let tn = if n == 0 {
            1.0
        } else {
            self.next_task_index as f64 / n as f64
        };
        let window_sum: i64 = self.remaining_windows.iter().map(|&(s, e)| e - s).sum();
        [
            self.storage_used as f64 / inst.satellite.max_storage as f64,
            tn,
            window_sum as f64 / inst.satellite.ltw_scale_s,
            self.current_roll_deg / inst.satellite.max_roll_deg,
        ]
    }

    /// Accept/reject flags in task-list order; screened-out tasks are 0.
    pub fn decision_vector(&self, inst: &Instance) -> Vec<u8> {
        let mut d = vec![0u8; inst.tasks().len()];
        for a in &self.accepted {
            let idx = inst
                .tasks()
                .iter()
                .position(|t| t.id == a.id)
                .expect("accepted task belongs to the instance");
            d[idx] = 1;
        }
        d
    }
}

/// Outcome of checking a complete decision vector against an instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub valid: bool,
    pub total_reward: i64,
    pub accepted_ids: Vec<i64>,
    pub violations: Vec<String>,
}

impl ValidationReport {
    /// Stable key=value line for scripts.
    pub fn machine_line(&self) -> String {
        format!(
            "valid={} reward={} violations={}",
            self.valid,
            self.total_reward,
            self.violations.len()
        )
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "schedule {}: reward {}, {} task(s) accepted",
            if self.valid { "valid" } else { "INVALID" },
            self.total_reward,
            self.accepted_ids.len()
        )?;
        for v in &self.violations {
            writeln!(f, "  violation: {v}")?;
        }
        Ok(())
    }
}

/// Check a finished schedule from scratch: execution order by window start,
/// pairwise overlap and maneuver gaps, roll bounds, and storage prefix sums.
/// Independent of the environment's bookkeeping by construction.
pub fn validate_schedule(inst: &Instance, decisions: &[u8]) -> Result<ValidationReport, EnvError> {
    let tasks = inst.tasks();
    if decisions.len() != tasks.len() {
        return Err(EnvError::DecisionLength {
            expected: tasks.len(),
            got: decisions.len(),
        });
    }
    if let Some((index, &value)) = decisions.iter().enumerate().find(|(_, &d)| d > 1) {
        return Err(EnvError::DecisionValue { index, value });
    }

    // Bang-bang slew timing, written out independently of the geometry module:
    // accelerate halfway and brake, unless the rate cap flattens the profile.
    let rate = inst.satellite.max_roll_rate;
    let accel = inst.satellite.roll_accel;
    let slew_time = |from: f64, to: f64| {
        let delta = (to - from).abs();
        if delta * accel <= rate * rate {
            2.0 * (delta / accel).sqrt()
        } else {
            delta / rate + rate / accel
        }
    };

    let mut chosen: Vec<&TaskSpec> = tasks
        .iter()
        .zip(decisions)
        .filter(|(_, &d)| d == 1)
        .map(|(t, _)| t)
        .collect();
    chosen.sort_by_key(|t| (t.window_start, t.id));

    let mut violations = Vec::new();
    for t in &chosen {
        if t.roll_deg.abs() > inst.satellite.max_roll_deg {
            violations.push(format!(
                "task {}: roll {} deg exceeds the {} deg limit",
                t.id, t.roll_deg, inst.satellite.max_roll_deg
            ));
        }
    }
    for pair in chosen.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b.window_start < a.window_end {
            violations.push(format!(
                "tasks {} and {}: windows [{}, {}] and [{}, {}] overlap",
                a.id, b.id, a.window_start, a.window_end, b.window_start, b.window_end
            ));
            continue;
        }
        let gap = (b.window_start - a.window_end) as f64;
        let need = slew_time(a.roll_deg, b.roll_deg);
        if gap < need {
            violations.push(format!(
                "tasks {} and {}: maneuver needs {need:.3} s, gap is {gap} s",
                a.id, b.id
            ));
        }
    }
    let mut storage = 0i64;
    for t in &chosen {
        storage += t.memory_delta;
        if storage < 0 {
            violations.push(format!(
                "after task {}: storage {} below zero",
                t.id, storage
            ));
        } else if storage > inst.satellite.max_storage {
            violations.push(format!(
                "after task {}: storage {} exceeds capacity {}",
                t.id, storage, inst.satellite.max_storage
            ));
        }
    }

    Ok(ValidationReport {
        valid: violations.is_empty(),
        total_reward: chosen.iter().map(|t| t.reward).sum(),
        accepted_ids: chosen.iter().map(|t| t.id).collect(),
        violations,
    })
}

/// Render a decision vector as a `0`/`1` line plus the accepted-id list.
pub fn format_decisions(decisions: &[u8], inst: &Instance) -> String {
    let bits: String = decisions
        .iter()
        .map(|&d| if d == 1 { '1' } else { '0' })
        .collect();
    let ids: Vec<String> = inst
        .tasks()
        .iter()
        .zip(decisions)
        .filter(|(_, &d)| d == 1)
        .map(|(t, _)| t.id.to_string())
        .collect();
    format!("{bits}\nids: {}\n", ids.join(" "))
}

/// Parse the [`format_decisions`] layout, checking the bit count against the
/// instance and the id list (when present) against the bits.
pub fn parse_decisions(text: &str, inst: &Instance) -> Result<Vec<u8>, EnvError> {
    let mut lines = text
        .lines()
        .map(|raw| raw.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty());

    let bits_line = lines.next().unwrap_or("");
    let mut decisions = Vec::with_capacity(bits_line.len());
    for c in bits_line.chars() {
        match c {
            '0' => decisions.push(0u8),
            '1' => decisions.push(1u8),
            other => {
                return Err(EnvError::Format(format!(
                    "decision character `{other}` is not 0 or 1"
                )))
            }
        }
    }
    if decisions.len() != inst.tasks().len() {
        return Err(EnvError::DecisionLength {
            expected: inst.tasks().len(),
            got: decisions.len(),
        });
    }

    for line in lines {
        let Some(rest) = line.strip_prefix("ids:") else {
            return Err(EnvError::Format(format!("unexpected line `{line}`")));
        };
        let listed: Vec<i64> = rest
            .split_whitespace()
            .map(|tok| {
                tok.parse::<i64>()
                    .map_err(|_| EnvError::Format(format!("bad task id `{tok}`")))
            })
            .collect::<Result<_, _>>()?;
        let derived: Vec<i64> = inst
            .tasks()
            .iter()
            .zip(&decisions)
            .filter(|(_, &d)| d == 1)
            .map(|(t, _)| t.id)
            .collect();
        if listed != derived {
            return Err(EnvError::Format(format!(
                "id list {listed:?} disagrees with the decision bits {derived:?}"
            )));
        }
    }
    Ok(decisions)
}
