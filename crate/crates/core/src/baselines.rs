//! Reference schedulers: two deterministic heuristics, a seeded random
//! policy, and an exhaustive branch-and-bound search.
//!
//! All four walk the same screened decision process as the learned policy,
//! so their decision vectors validate by construction and their rewards are
//! directly comparable. [`exact`] is the optimality oracle for small
//! instances; [`exact_unpruned`] exists to check that pruning never changes
//! the answer.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::env::{validate_schedule, Action, SchedState};
use crate::instance::Instance;

/// Exhaustive search refuses instances above this size; the tree has up to
/// 2^n leaves and the point of the oracle is exactness, not scale.
pub const EXACT_TASK_LIMIT: usize = 22;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BaselineError {
    #[error("exact search handles at most {limit} tasks, instance has {got}")]
    TooLarge { limit: usize, got: usize },
}

/// Outcome of one baseline run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BaselineResult {
    pub method: &'static str,
    /// Accept/reject flags in task-list order.
    pub decisions: Vec<u8>,
    pub total_reward: i64,
    /// Decisions taken (heuristics) or search nodes visited (exact).
    pub steps: u64,
}

/// Accept every task the screen offers, in time order.
pub fn fcfs(inst: &Instance) -> BaselineResult {
    let mut state = SchedState::reset(inst);
    let mut steps = 0;
    while !state.is_terminal(inst) {
        state
            .step(Action::Accept, inst)
            .expect("state is not terminal");
        steps += 1;
    }
    BaselineResult {
        method: "fcfs",
        decisions: state.decision_vector(inst),
        total_reward: state.cumulative_reward,
        steps,
    }
}

/// Consider tasks in descending reward (ties by id); accept each one whose
/// addition keeps the schedule valid.
pub fn greedy_reward(inst: &Instance) -> BaselineResult {
    let tasks = inst.tasks();
    let mut order: Vec<usize> = (0..tasks.len()).collect();
    order.sort_by_key(|&i| (-tasks[i].reward, tasks[i].id));

    let mut decisions = vec![0u8; tasks.len()];
    let mut steps = 0;
    for i in order {
        steps += 1;
        decisions[i] = 1;
        let report = validate_schedule(inst, &decisions).expect("vector has one flag per task");
        if !report.valid {
            decisions[i] = 0;
        }
    }
    let report = validate_schedule(inst, &decisions).expect("vector has one flag per task");
    debug_assert!(report.valid);
    BaselineResult {
        method: "greedy",
        decisions,
        total_reward: report.total_reward,
        steps,
    }
}

/// Accept each offered task with probability 1/2.
pub fn random_policy(inst: &Instance, seed: u64) -> BaselineResult {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = SchedState::reset(inst);
    let mut steps = 0;
    while !state.is_terminal(inst) {
        let action = if rng.gen::<f64>() < 0.5 {
            Action::Accept
        } else {
            Action::Reject
        };
        state.step(action, inst).expect("state is not terminal");
        steps += 1;
    }
    BaselineResult {
        method: "random",
        decisions: state.decision_vector(inst),
        total_reward: state.cumulative_reward,
        steps,
    }
}

/// Optimal schedule by depth-first search over the screened decision tree.
///
/// Branches accept-first and prunes a subtree when even collecting every
/// remaining reward could not beat the incumbent. Ties on reward resolve to
/// the lexicographically smallest decision vector, so the result does not
/// depend on traversal luck and matches [`exact_unpruned`] bit for bit.
pub fn exact(inst: &Instance) -> Result<BaselineResult, BaselineError> {
    search(inst, true)
}

/// [`exact`] without the bound, for checking that pruning is lossless.
pub fn exact_unpruned(inst: &Instance) -> Result<BaselineResult, BaselineError> {
    search(inst, false)
}

fn search(inst: &Instance, prune: bool) -> Result<BaselineResult, BaselineError> {
    let n = inst.tasks().len();
    if n > EXACT_TASK_LIMIT {
        return Err(BaselineError::TooLarge {
            limit: EXACT_TASK_LIMIT,
            got: n,
        });
    }
    // suffix[i] = reward still available from task i onward, an upper bound
    // on what any completion of a state with next_task_index == i can add.
    let mut suffix = vec![0i64; n + 1];
    for i in (0..n).rev() {
        suffix[i] = suffix[i + 1] + inst.tasks()[i].reward;
    }

    let mut best: Option<(i64, Vec<u8>)> = None;
    let mut nodes = 0;
    dfs(
        inst,
        SchedState::reset(inst),
        &suffix,
        prune,
        &mut best,
        &mut nodes,
    );
    let (total_reward, decisions) = best.expect("search visits at least the all-reject leaf");
    Ok(BaselineResult {
        method: "exact",
        decisions,
        total_reward,
        steps: nodes,
    })
}

fn dfs(
    inst: &Instance,
    state: SchedState,
    suffix: &[i64],
    prune: bool,
    best: &mut Option<(i64, Vec<u8>)>,
    nodes: &mut u64,
) {
    *nodes += 1;
    if state.is_terminal(inst) {
        let reward = state.cumulative_reward;
        let replace = match best {
            None => true,
            Some((r, v)) => reward > *r || (reward == *r && state.decision_vector(inst) < *v),
        };
        if replace {
            *best = Some((reward, state.decision_vector(inst)));
        }
        return;
    }
    if prune {
        // Strictly-worse only: an equal bound can still hold an equal-reward
        // leaf with a smaller decision vector.
        if let Some((r, _)) = best {
            if state.cumulative_reward + suffix[state.next_task_index] < *r {
                return;
            }
        }
    }
    let mut accepted = state.clone();
    accepted
        .step(Action::Accept, inst)
        .expect("state is not terminal");
    dfs(inst, accepted, suffix, prune, best, nodes);

    let mut rejected = state;
    rejected
        .step(Action::Reject, inst)
        .expect("state is not terminal");
    dfs(inst, rejected, suffix, prune, best, nodes);
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{DateTime, Utc};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use crate::instance::{OrbitElements, SatelliteConfig, TaskKind, TaskSpec};
    use crate::nn::Mlp;
    use crate::ppo::rollout;
    use crate::synth::{synthetic_instance, SynthConfig};

    fn obs(id: i64, ws: i64, we: i64, roll: f64, reward: i64) -> TaskSpec {
        TaskSpec {
            id,
            kind: TaskKind::Observation,
            window_start: ws,
            window_end: we,
            roll_deg: roll,
            memory_delta: 1,
            reward,
        }
    }

    fn inst_with(tasks: Vec<TaskSpec>, max_storage: i64) -> Instance {
        let orbit = OrbitElements {
            semi_major_axis_km: 6800.0,
            eccentricity: 0.01,
            inclination_deg: 55.0,
            raan_deg: 90.0,
            arg_perigee_deg: 90.0,
            true_anomaly_deg: 0.0,
            epoch: DateTime::parse_from_rfc3339("2019-12-30T15:00:00Z")
                .unwrap()
                .with_timezone(&Utc),
        };
        let sat = SatelliteConfig {
            max_storage,
            max_roll_deg: 45.0,
            max_roll_rate: 1.0,
            roll_accel: 0.5,
            sensor_half_angle_deg: 10.0,
            ltw_scale_s: 1000.0,
        };
        Instance::new(orbit, sat, (0, 1000), tasks).unwrap()
    }

    #[test]
    fn fcfs_takes_the_earlier_of_two_overlapping_tasks() {
        let inst = inst_with(vec![obs(1, 10, 30, 0.0, 1), obs(2, 20, 40, 0.0, 9)], 8);
        let r = fcfs(&inst);
        assert_eq!(r.decisions, vec![1, 0]);
        assert_eq!(r.total_reward, 1);
        assert_eq!(r.steps, 1);
        assert!(validate_schedule(&inst, &r.decisions).unwrap().valid);
    }

    #[test]
    fn greedy_prefers_the_richer_of_two_overlapping_tasks() {
        let inst = inst_with(vec![obs(1, 10, 30, 0.0, 1), obs(2, 20, 40, 0.0, 9)], 8);
        let r = greedy_reward(&inst);
        assert_eq!(r.decisions, vec![0, 1]);
        assert_eq!(r.total_reward, 9);
        assert_eq!(r.steps, 2);
    }

    #[test]
    fn greedy_breaks_reward_ties_by_id() {
        let inst = inst_with(vec![obs(3, 20, 40, 0.0, 5), obs(8, 10, 30, 0.0, 5)], 8);
        // Window-sorted order is [id 8, id 3]; the tie goes to id 3, so the
        // second slot of the decision vector is the accepted one.
        let r = greedy_reward(&inst);
        assert_eq!(r.decisions, vec![0, 1]);
        assert_eq!(r.total_reward, 5);
    }

    #[test]
    fn greedy_accepts_every_compatible_task() {
        let inst = inst_with(
            vec![
                obs(1, 0, 20, 0.0, 3),
                obs(2, 100, 120, 1.0, 2),
                obs(3, 300, 320, -2.0, 4),
            ],
            8,
        );
        let r = greedy_reward(&inst);
        assert_eq!(r.decisions, vec![1, 1, 1]);
        assert_eq!(r.total_reward, 9);
    }

    #[test]
    fn random_policy_is_seed_deterministic() {
        let cfg = SynthConfig::default();
        let inst = synthetic_instance(3, &cfg);
        let a = random_policy(&inst, 11);
        let b = random_policy(&inst, 11);
        assert_eq!(a, b);
        assert!(validate_schedule(&inst, &a.decisions).unwrap().valid);
        let c = random_policy(&inst, 12);
        // One decision per offered task either way.
        assert_eq!(a.steps > 0, c.steps > 0);
    }

    #[test]
    fn exact_picks_the_single_best_of_three_mutually_exclusive_tasks() {
        let inst = inst_with(
            vec![
                obs(1, 10, 40, 0.0, 2),
                obs(2, 20, 50, 0.0, 7),
                obs(3, 30, 60, 0.0, 4),
            ],
            8,
        );
        let r = exact(&inst).unwrap();
        assert_eq!(r.total_reward, 7);
        assert_eq!(r.decisions, vec![0, 1, 0]);
    }

    #[test]
    fn exact_takes_everything_when_nothing_conflicts() {
        let inst = inst_with(
            vec![
                obs(1, 0, 20, 0.0, 3),
                obs(2, 100, 120, 1.0, 2),
                obs(3, 300, 320, -2.0, 4),
            ],
            8,
        );
        let r = exact(&inst).unwrap();
        assert_eq!(r.total_reward, 9);
        assert_eq!(r.decisions, vec![1, 1, 1]);
    }

    #[test]
    fn exact_refuses_oversized_instances() {
        let tasks: Vec<TaskSpec> = (0..23)
            .map(|i| obs(i + 1, i * 40, i * 40 + 10, 0.0, 1))
            .collect();
        let inst = inst_with(tasks, 30);
        assert_eq!(
            exact(&inst).unwrap_err(),
            BaselineError::TooLarge { limit: 22, got: 23 }
        );
    }

    #[test]
    fn pruning_changes_neither_reward_nor_decisions() {
        let cfg = SynthConfig {
            n_tasks: 10,
            ..SynthConfig::default()
        };
        for seed in 0..10 {
            let inst = synthetic_instance(seed, &cfg);
            let pruned = exact(&inst).unwrap();
            let full = exact_unpruned(&inst).unwrap();
            assert_eq!(pruned.total_reward, full.total_reward, "seed {seed}");
            assert_eq!(pruned.decisions, full.decisions, "seed {seed}");
            assert!(pruned.steps <= full.steps, "seed {seed}");
        }
    }

    #[test]
    fn exact_dominates_the_heuristics() {
        let cfg = SynthConfig {
            n_tasks: 10,
            ..SynthConfig::default()
        };
        for seed in 20..40 {
            let inst = synthetic_instance(seed, &cfg);
            let opt = exact(&inst).unwrap().total_reward;
            assert!(opt >= fcfs(&inst).total_reward, "seed {seed}");
            assert!(opt >= greedy_reward(&inst).total_reward, "seed {seed}");
            assert!(
                opt >= random_policy(&inst, seed).total_reward,
                "seed {seed}"
            );
        }
    }

    #[test]
    fn all_baselines_produce_valid_schedules() {
        let cfg = SynthConfig {
            n_tasks: 16,
            ..SynthConfig::default()
        };
        for seed in 0..10 {
            let inst = synthetic_instance(seed, &cfg);
            for r in [
                fcfs(&inst),
                greedy_reward(&inst),
                random_policy(&inst, seed),
            ] {
                let report = validate_schedule(&inst, &r.decisions).unwrap();
                assert!(report.valid, "seed {seed} method {}", r.method);
                assert_eq!(report.total_reward, r.total_reward);
            }
        }
    }

    #[test]
    fn bundled_instance_baselines_are_stable() {
        let inst = crate::instance::bundled50();
        let f = fcfs(&inst);
        assert_eq!(f.total_reward, 39);
        let report = validate_schedule(&inst, &f.decisions).unwrap();
        assert!(report.valid);
        assert_eq!(
            report.accepted_ids,
            vec![1, 4, 5, 7, 9, 11, 12, 14, 52, 27, 30, 32, 33, 54, 47, 50, 55]
        );

        let g = greedy_reward(&inst);
        assert_eq!(g.total_reward, 46);
        assert!(validate_schedule(&inst, &g.decisions).unwrap().valid);

        // 55 tasks is past the exhaustive-search cap.
        assert!(exact(&inst).is_err());
    }

    #[test]
    fn an_always_accept_actor_reproduces_fcfs() {
        // Zero weights except a large accept bias on the output layer: the
        // sampled policy accepts every offered task, i.e. plays fcfs.
        let mut actor = Mlp::zeros(&[4, 8, 8, 2]);
        let mut flat = actor.flat();
        let last = flat.len() - 1;
        flat[last] = 50.0;
        actor.set_flat(&flat);

        let cfg = SynthConfig::default();
        for seed in 0..5 {
            let inst = synthetic_instance(seed, &cfg);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (traj, decisions) = rollout(&inst, &actor, &mut rng).unwrap();
            let base = fcfs(&inst);
            assert_eq!(decisions, base.decisions, "seed {seed}");
            assert_eq!(traj.episode_return, base.total_reward, "seed {seed}");
        }
    }
}
