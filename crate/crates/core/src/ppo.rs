//! Policy-gradient search over the scheduling environment.
//!
//! A small actor network maps state features to accept/reject probabilities
//! and a critic estimates returns-to-go. Each episode collects one
//! trajectory, then performs `M` ascent steps on the KL-penalized surrogate
//!
//! ```text
//! J(θ) = Σ_t π_θ(a_t|s_t) / π_old(a_t|s_t) · Â_t  −  λ · KL[π_old | π_θ]
//! ```
//!
//! and `B` descent steps on the critic's squared return error. Training is
//! used as a search: the best-return episode's decision vector is the
//! product, not the final policy.

use std::io::{self, Read, Write};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::env::{validate_schedule, Action, EnvError, SchedState};
use crate::instance::Instance;
use crate::nn::{softmax, Gradients, Mlp};

/// Probabilities below this floor are clamped inside ratio and KL terms.
const PROB_FLOOR: f64 = 1e-8;
/// Magic tag of a serialized network record.
const PARAMS_MAGIC: &[u8; 4] = b"PPOW";
const PARAMS_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum PpoError {
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("bad config: {0}")]
    Config(String),
    #[error("degenerate distribution: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Env(#[from] EnvError),
}

/// One decision the policy made during an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub features: [f64; 4],
    pub action: Action,
    pub reward: i64,
    /// Probability the sampling policy assigned to the taken action.
    pub old_prob: f64,
}

/// A complete episode.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub steps: Vec<StepRecord>,
    pub terminal: bool,
    pub episode_return: i64,
}

/// Training hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    /// Episodes (outer iterations).
    pub episodes: usize,
    /// Actor ascent steps per episode.
    pub actor_epochs: usize,
    /// Critic descent steps per episode.
    pub critic_epochs: usize,
    /// Discount in (0, 1].
    pub discount: f64,
    /// Weight of the KL penalty, ≥ 0.
    pub kl_weight: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    /// Hidden width of both networks.
    pub hidden: usize,
    pub seed: u64,
    /// Count `r_t` itself in the return-to-go at step `t`. Off by default:
    /// the return sums strictly later rewards, so accepting the last task
    /// credits earlier steps only.
    pub include_current_reward: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            episodes: 80,
            actor_epochs: 10,
            critic_epochs: 10,
            discount: 0.99,
            kl_weight: 0.5,
            actor_lr: 3e-4,
            critic_lr: 1e-3,
            hidden: 64,
            seed: 0,
            include_current_reward: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), PpoError> {
        let bad = |msg: String| Err(PpoError::Config(msg));
        if self.episodes == 0 || self.actor_epochs == 0 || self.critic_epochs == 0 {
            return bad("episodes, actor_epochs, critic_epochs must be >= 1".into());
        }
        if !(self.discount > 0.0 && self.discount <= 1.0) {
            return bad(format!("discount {} outside (0, 1]", self.discount));
        }
        if !self.kl_weight.is_finite() || self.kl_weight < 0.0 {
            return bad(format!("kl_weight {} must be >= 0", self.kl_weight));
        }
        for (name, lr) in [("actor_lr", self.actor_lr), ("critic_lr", self.critic_lr)] {
            if !lr.is_finite() || lr <= 0.0 {
                return bad(format!("{name} {lr} must be positive"));
            }
        }
        if self.hidden == 0 {
            return bad("hidden width must be >= 1".into());
        }
        Ok(())
    }
}

/// Outcome of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainResult {
    /// Decision vector of the best episode.
    pub best_decisions: Vec<u8>,
    pub best_reward: i64,
    /// Episode returns in order; `best_reward` is its maximum.
    pub reward_curve: Vec<i64>,
    pub actor: Mlp,
    pub critic: Mlp,
}

/// Action distribution `[p_reject, p_accept]` for one state.
pub fn forward_actor(actor: &Mlp, x: &[f64; 4]) -> Result<[f64; 2], PpoError> {
    let logits = actor.forward(x);
    debug_assert_eq!(logits.len(), 2);
    if !logits.iter().all(|v| v.is_finite()) {
        return Err(PpoError::NonFinite("actor logits"));
    }
    let p = softmax(&logits);
    Ok([p[0], p[1]])
}

/// Scalar value estimate for one state.
pub fn forward_critic(critic: &Mlp, x: &[f64; 4]) -> Result<f64, PpoError> {
    let out = critic.forward(x);
    debug_assert_eq!(out.len(), 1);
    if !out[0].is_finite() {
        return Err(PpoError::NonFinite("critic value"));
    }
    Ok(out[0])
}

/// Play one episode, sampling each accept with the actor's probability.
/// Returns the trajectory and the episode's full decision vector.
pub fn rollout(
    inst: &Instance,
    actor: &Mlp,
    rng: &mut impl Rng,
) -> Result<(Trajectory, Vec<u8>), PpoError> {
    let mut state = SchedState::reset(inst);
    let mut steps = Vec::new();
    while !state.is_terminal(inst) {
        let x = state.features(inst);
        let p = forward_actor(actor, &x)?;
        let action = if rng.gen::<f64>() < p[1] {
            Action::Accept
        } else {
            Action::Reject
        };
        let (reward, _) = state.step(action, inst)?;
        steps.push(StepRecord {
            features: x,
            action,
            reward,
            old_prob: p[action as usize],
        });
    }
    let decisions = state.decision_vector(inst);
    Ok((
        Trajectory {
            steps,
            terminal: true,
            episode_return: state.cumulative_reward,
        },
        decisions,
    ))
}

/// Discounted sum of strictly later rewards per step:
/// `G_t = Σ_{t'>t} γ^(t'-t) r_t'`, or the conventional `t' ≥ t` form when
/// `include_current` is set.
pub fn returns_to_go(rewards: &[i64], discount: f64, include_current: bool) -> Vec<f64> {
    let n = rewards.len();
    let mut out = vec![0.0; n];
    for t in (0..n).rev() {
        let g_next = out.get(t + 1).copied().unwrap_or(0.0);
        out[t] = if include_current {
            rewards[t] as f64 + discount * g_next
        } else {
            let r_next = rewards.get(t + 1).copied().unwrap_or(0) as f64;
            discount * (r_next + g_next)
        };
    }
    out
}

/// Monte-Carlo advantage per step: return-to-go minus the critic estimate.
pub fn advantages(
    traj: &Trajectory,
    critic: &Mlp,
    discount: f64,
    include_current: bool,
) -> Result<Vec<f64>, PpoError> {
    let rewards: Vec<i64> = traj.steps.iter().map(|s| s.reward).collect();
    let rtg = returns_to_go(&rewards, discount, include_current);
    let mut out = Vec::with_capacity(rtg.len());
    for (step, g) in traj.steps.iter().zip(rtg) {
        out.push(g - forward_critic(critic, &step.features)?);
    }
    Ok(out)
}

/// Exact KL divergence between two 2-way categorical distributions,
/// `Σ_a p(a) ln(p(a)/q(a))`. Zero `p` components contribute nothing; zero
/// `q` components are an error (infinite divergence).
pub fn kl_categorical(p: [f64; 2], q: [f64; 2]) -> Result<f64, PpoError> {
    let mut sum = 0.0;
    for a in 0..2 {
        if q[a] <= 0.0 {
            return Err(PpoError::Degenerate(format!(
                "q[{a}] = {} in KL denominator",
                q[a]
            )));
        }
        if p[a] > 0.0 {
            sum += p[a] * (p[a] / q[a]).ln();
        }
    }
    Ok(sum)
}

/// The surrogate objective maximized by [`actor_update`], with the
/// probability floor applied exactly as in the gradient path. Exposed so
/// tests can finite-difference it.
pub fn jppo_objective(
    actor: &Mlp,
    old_actor: &Mlp,
    trajs: &[Trajectory],
    advs: &[Vec<f64>],
    kl_weight: f64,
) -> Result<f64, PpoError> {
    let mut j = 0.0;
    for (traj, adv) in trajs.iter().zip(advs) {
        for (step, &a_hat) in traj.steps.iter().zip(adv) {
            let p = forward_actor(actor, &step.features)?;
            let q = forward_actor(old_actor, &step.features)?;
            let taken = step.action as usize;
            j += p[taken] / step.old_prob.max(PROB_FLOOR) * a_hat;
            let mut kl = 0.0;
            for a in 0..2 {
                if q[a] > 0.0 {
                    kl += q[a] * (q[a].max(PROB_FLOOR) / p[a].max(PROB_FLOOR)).ln();
                }
            }
            j -= kl_weight * kl;
        }
    }
    Ok(j)
}

/// Ascent gradient of [`jppo_objective`] with respect to the actor.
pub fn jppo_gradient(
    actor: &Mlp,
    old_actor: &Mlp,
    trajs: &[Trajectory],
    advs: &[Vec<f64>],
    kl_weight: f64,
) -> Result<Gradients, PpoError> {
    let mut grads = Gradients::zeros_like(actor);
    for (traj, adv) in trajs.iter().zip(advs) {
        for (step, &a_hat) in traj.steps.iter().zip(adv) {
            let (logits, cache) = actor.forward_cached(&step.features);
            if !logits.iter().all(|v| v.is_finite()) {
                return Err(PpoError::NonFinite("actor logits"));
            }
            let p = softmax(&logits);
            let q = forward_actor(old_actor, &step.features)?;
            let taken = step.action as usize;
            let ratio_scale = a_hat / step.old_prob.max(PROB_FLOOR);
            // d/dz_k of p[taken]: p[taken] (δ_{k,taken} - p_k); the KL term
            // contributes λ (q_k - p_k).
            let mut d_logits = [0.0; 2];
            for k in 0..2 {
                let indicator = if k == taken { 1.0 } else { 0.0 };
                d_logits[k] =
                    ratio_scale * p[taken] * (indicator - p[k]) + kl_weight * (q[k] - p[k]);
            }
            actor.backprop_into(&cache, &d_logits, &mut grads);
        }
    }
    Ok(grads)
}

/// `epochs` gradient-ascent steps on the surrogate objective. `old_actor`
/// stays fixed throughout (the snapshot that generated the trajectories).
pub fn actor_update(
    actor: &mut Mlp,
    old_actor: &Mlp,
    trajs: &[Trajectory],
    advs: &[Vec<f64>],
    kl_weight: f64,
    epochs: usize,
    lr: f64,
) -> Result<(), PpoError> {
    for _ in 0..epochs {
        let grads = jppo_gradient(actor, old_actor, trajs, advs, kl_weight)?;
        if !grads.is_finite() {
            return Err(PpoError::NonFinite("actor gradient"));
        }
        actor.ascend(&grads, lr);
    }
    Ok(())
}

/// Summed squared error between critic values and returns-to-go.
pub fn critic_loss(
    critic: &Mlp,
    trajs: &[Trajectory],
    discount: f64,
    include_current: bool,
) -> Result<f64, PpoError> {
    let mut loss = 0.0;
    for traj in trajs {
        let rewards: Vec<i64> = traj.steps.iter().map(|s| s.reward).collect();
        let rtg = returns_to_go(&rewards, discount, include_current);
        for (step, g) in traj.steps.iter().zip(rtg) {
            let v = forward_critic(critic, &step.features)?;
            loss += (g - v) * (g - v);
        }
    }
    Ok(loss)
}

/// Descent gradient of [`critic_loss`].
pub fn critic_gradient(
    critic: &Mlp,
    trajs: &[Trajectory],
    discount: f64,
    include_current: bool,
) -> Result<Gradients, PpoError> {
    let mut grads = Gradients::zeros_like(critic);
    for traj in trajs {
        let rewards: Vec<i64> = traj.steps.iter().map(|s| s.reward).collect();
        let rtg = returns_to_go(&rewards, discount, include_current);
        for (step, g) in traj.steps.iter().zip(rtg) {
            let (out, cache) = critic.forward_cached(&step.features);
            if !out[0].is_finite() {
                return Err(PpoError::NonFinite("critic value"));
            }
            critic.backprop_into(&cache, &[2.0 * (out[0] - g)], &mut grads);
        }
    }
    Ok(grads)
}

/// `epochs` descent steps on the squared return error.
pub fn critic_update(
    critic: &mut Mlp,
    trajs: &[Trajectory],
    discount: f64,
    epochs: usize,
    lr: f64,
    include_current: bool,
) -> Result<(), PpoError> {
    for _ in 0..epochs {
        let grads = critic_gradient(critic, trajs, discount, include_current)?;
        if !grads.is_finite() {
            return Err(PpoError::NonFinite("critic gradient"));
        }
        critic.descend(&grads, lr);
    }
    Ok(())
}

/// Run the full training loop and keep the best episode found.
pub fn train(inst: &Instance, cfg: &TrainConfig) -> Result<TrainResult, PpoError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sizes_actor = [4, cfg.hidden, cfg.hidden, 2];
    let sizes_critic = [4, cfg.hidden, cfg.hidden, 1];
    let mut actor = Mlp::xavier(&sizes_actor, &mut rng);
    let mut critic = Mlp::xavier(&sizes_critic, &mut rng);

    let mut reward_curve = Vec::with_capacity(cfg.episodes);
    let mut best_reward = i64::MIN;
    let mut best_decisions = Vec::new();
    for _ in 0..cfg.episodes {
        let (traj, decisions) = rollout(inst, &actor, &mut rng)?;
        debug_assert!(
            validate_schedule(inst, &decisions).is_ok_and(|r| r.valid),
            "environment produced an invalid schedule"
        );
        if !traj.steps.is_empty() {
            let advs = advantages(&traj, &critic, cfg.discount, cfg.include_current_reward)?;
            let old_actor = actor.clone();
            actor_update(
                &mut actor,
                &old_actor,
                std::slice::from_ref(&traj),
                std::slice::from_ref(&advs),
                cfg.kl_weight,
                cfg.actor_epochs,
                cfg.actor_lr,
            )?;
            critic_update(
                &mut critic,
                std::slice::from_ref(&traj),
                cfg.discount,
                cfg.critic_epochs,
                cfg.critic_lr,
                cfg.include_current_reward,
            )?;
        }
        if traj.episode_return > best_reward {
            best_reward = traj.episode_return;
            best_decisions = decisions;
        }
        reward_curve.push(traj.episode_return);
    }
    Ok(TrainResult {
        best_decisions,
        best_reward,
        reward_curve,
        actor,
        critic,
    })
}

fn write_net(w: &mut impl Write, net: &Mlp) -> io::Result<()> {
    let sizes = net.sizes();
    assert_eq!(sizes.len(), 4, "serialized networks have four layer sizes");
    w.write_all(PARAMS_MAGIC)?;
    w.write_all(&PARAMS_VERSION.to_le_bytes())?;
    for &s in sizes {
        let s16 = u16::try_from(s)
            .map_err(|_| io::Error::new(io::ErrorKind::InvalidInput, "layer size exceeds u16"))?;
        w.write_all(&s16.to_le_bytes())?;
    }
    for v in net.flat() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

fn read_net(r: &mut impl Read) -> io::Result<Mlp> {
    let bad = |msg: &str| io::Error::new(io::ErrorKind::InvalidData, msg);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != PARAMS_MAGIC {
        return Err(bad("bad magic tag"));
    }
    let mut ver = [0u8; 4];
    r.read_exact(&mut ver)?;
    if u32::from_le_bytes(ver) != PARAMS_VERSION {
        return Err(bad("unsupported version"));
    }
    let mut sizes = [0usize; 4];
    for s in &mut sizes {
        let mut b = [0u8; 2];
        r.read_exact(&mut b)?;
        *s = u16::from_le_bytes(b) as usize;
        if *s == 0 {
            return Err(bad("zero layer size"));
        }
    }
    let mut net = Mlp::zeros(&sizes);
    let mut flat = vec![0.0f64; net.param_count()];
    for v in &mut flat {
        let mut b = [0u8; 8];
        r.read_exact(&mut b)?;
        *v = f64::from_le_bytes(b);
    }
    net.set_flat(&flat);
    Ok(net)
}

/// Serialize actor then critic as two tagged records: magic `PPOW`, a
/// version word, four 16-bit layer sizes, then the flat parameters as
/// little-endian doubles.
pub fn write_params(w: &mut impl Write, actor: &Mlp, critic: &Mlp) -> io::Result<()> {
    write_net(w, actor)?;
    write_net(w, critic)
}

/// Inverse of [`write_params`].
pub fn read_params(r: &mut impl Read) -> io::Result<(Mlp, Mlp)> {
    let actor = read_net(r)?;
    let critic = read_net(r)?;
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(io::Error::new(
            io::ErrorKind::InvalidData,
            "trailing bytes after critic record",
        ));
    }
    Ok((actor, critic))
}
