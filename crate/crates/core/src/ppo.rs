//! Clipped-surrogate PPO with generalized advantage estimation.
//!
//! The loop follows the standard single-file reference recipe for
//! CartPole: fixed-length rollouts (one environment by default; parallel
//! copies are configurable), advantage normalization per minibatch,
//! clipped policy loss, unclipped quadratic value loss, entropy bonus,
//! global gradient-norm clipping, Adam with a linearly annealed learning
//! rate, and per-epoch minibatch reshuffling.
//! All gradients are assembled analytically from the agent's backward
//! passes; divergence (non-finite loss) aborts the run and is recorded on
//! the returned curve instead of being papered over.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::agent::{Agent, AgentKind, Categorical, ParamStore};
use crate::cartpole::CartPole;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    /// Total environment steps for the run.
    pub total_steps: u64,
    /// Steps collected per policy iteration.
    pub rollout_length: usize,
    /// Optimization epochs over each rollout.
    pub num_epochs: usize,
    /// Minibatches per epoch; must divide the batch
    /// (`rollout_length * num_envs`).
    pub num_minibatches: usize,
    /// Parallel environment copies collected per vector step.
    pub num_envs: usize,
    pub gamma: f64,
    pub gae_lambda: f64,
    /// Clipping radius for the probability ratio.
    pub clip_eps: f64,
    pub value_coef: f64,
    pub entropy_coef: f64,
    pub lr: f64,
    /// Linearly anneal the learning rate to (almost) zero over the run.
    pub anneal_lr: bool,
    pub max_grad_norm: f64,
}

impl Default for PpoConfig {
    fn default() -> Self {
        PpoConfig {
            total_steps: 100_000,
            rollout_length: 128,
            num_epochs: 4,
            num_minibatches: 4,
            num_envs: 1,
            gamma: 0.99,
            gae_lambda: 0.95,
            clip_eps: 0.2,
            value_coef: 0.5,
            entropy_coef: 0.01,
            lr: 1e-3,
            anneal_lr: true,
            max_grad_norm: 0.5,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rollout_length == 0
            || self.num_minibatches == 0
            || self.num_epochs == 0
            || self.num_envs == 0
        {
            return Err(Error::config(
                "rollout_length, num_epochs, num_minibatches and num_envs must be positive",
            ));
        }
        if self.batch_size() % self.num_minibatches != 0 {
            return Err(Error::config(format!(
                "num_minibatches ({}) must divide the batch (rollout_length {} x num_envs {})",
                self.num_minibatches, self.rollout_length, self.num_envs
            )));
        }
        if self.total_steps < self.batch_size() as u64 {
            return Err(Error::config("total_steps must cover at least one rollout"));
        }
        if !(0.0..=1.0).contains(&self.gamma) || !(0.0..=1.0).contains(&self.gae_lambda) {
            return Err(Error::config("gamma and gae_lambda must lie in [0, 1]"));
        }
        if self.clip_eps <= 0.0 || self.lr <= 0.0 || self.max_grad_norm <= 0.0 {
            return Err(Error::config("clip_eps, lr and max_grad_norm must be positive"));
        }
        if self.value_coef < 0.0 || self.entropy_coef < 0.0 {
            return Err(Error::config("loss coefficients must be nonnegative"));
        }
        Ok(())
    }

    /// Environment transitions gathered per policy iteration.
    pub fn batch_size(&self) -> usize {
        self.rollout_length * self.num_envs
    }

    /// Number of policy iterations the run performs.
    pub fn num_updates(&self) -> u64 {
        self.total_steps / self.batch_size() as u64
    }
}

/// One completed episode: the global env step at which it ended and its
/// undiscounted return.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub step: u64,
    pub episodic_return: f64,
}

/// Per-seed training result: every completed episode in order, plus an
/// abort diagnostic if the run diverged.
#[derive(Debug, Clone, PartialEq)]
pub struct LearningCurve {
    pub seed: u64,
    pub points: Vec<CurvePoint>,
    pub aborted: Option<String>,
}

/// Fixed-length on-policy buffer of one rollout across `num_envs`
/// parallel environments. Arrays are flattened vector-step-major: sample
/// `t * num_envs + e` is environment `e` at vector step `t`.
#[derive(Debug, Clone)]
pub struct Rollout {
    pub num_envs: usize,
    pub observations: Vec<[f64; 4]>,
    pub actions: Vec<usize>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    pub values: Vec<f64>,
    /// Whether the episode ended on this transition (either way).
    pub dones: Vec<bool>,
    /// Critic value of each environment's state after its final
    /// transition, for bootstrapping.
    pub next_values: Vec<f64>,
}

impl Rollout {
    /// GAE advantages and returns for the whole flattened batch, computed
    /// independently per environment along its time axis.
    pub fn gae(&self, gamma: f64, lambda: f64) -> (Vec<f64>, Vec<f64>) {
        let e_max = self.num_envs;
        let batch = self.rewards.len();
        let t_max = batch / e_max;
        let mut advantages = vec![0.0; batch];
        let mut returns = vec![0.0; batch];
        for e in 0..e_max {
            let pick = |v: &[f64]| (0..t_max).map(|t| v[t * e_max + e]).collect::<Vec<_>>();
            let rewards = pick(&self.rewards);
            let values = pick(&self.values);
            let dones: Vec<bool> = (0..t_max).map(|t| self.dones[t * e_max + e]).collect();
            let (adv, ret) =
                compute_gae(&rewards, &values, &dones, self.next_values[e], gamma, lambda);
            for t in 0..t_max {
                advantages[t * e_max + e] = adv[t];
                returns[t * e_max + e] = ret[t];
            }
        }
        (advantages, returns)
    }
}

/// `(advantages, returns)` under GAE(gamma, lambda). `dones[t]` cuts the
/// recursion: nothing after an episode boundary leaks backwards.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    dones: &[bool],
    next_value: f64,
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    let t_max = rewards.len();
    assert_eq!(values.len(), t_max);
    assert_eq!(dones.len(), t_max);
    let mut advantages = vec![0.0; t_max];
    let mut carry = 0.0;
    for t in (0..t_max).rev() {
        let mask = if dones[t] { 0.0 } else { 1.0 };
        let v_next = if t + 1 == t_max { next_value } else { values[t + 1] };
        let delta = rewards[t] + gamma * v_next * mask - values[t];
        carry = delta + gamma * lambda * mask * carry;
        advantages[t] = carry;
    }
    let returns = advantages.iter().zip(values).map(|(a, v)| a + v).collect();
    (advantages, returns)
}

/// Normalizes `adv` in place to mean 0 / sample std 1 (plus 1e-8); no-op
/// for singleton slices, whose sample std is undefined.
pub fn normalize_advantages(adv: &mut [f64]) {
    let n = adv.len();
    if n < 2 {
        return;
    }
    let mean = adv.iter().sum::<f64>() / n as f64;
    let var = adv.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / (n - 1) as f64;
    let denom = var.sqrt() + 1e-8;
    for a in adv.iter_mut() {
        *a = (*a - mean) / denom;
    }
}

/// The ongoing interaction state carried across rollout boundaries, so
/// episodes may span policy iterations. Environments advance in
/// lock-step; within a vector step they are processed in index order, so
/// random-number consumption is deterministic.
struct Driver {
    envs: Vec<CartPole>,
    next_obs: Vec<[f64; 4]>,
    episode_returns: Vec<f64>,
    global_step: u64,
}

impl Driver {
    fn new(num_envs: usize, rng: &mut impl Rng) -> Self {
        let mut envs: Vec<CartPole> = (0..num_envs).map(|_| CartPole::new()).collect();
        let next_obs = envs.iter_mut().map(|env| env.reset(rng)).collect();
        Driver { envs, next_obs, episode_returns: vec![0.0; num_envs], global_step: 0 }
    }

    /// Collects `len` vector steps (`len * num_envs` transitions) under
    /// the current policy, recording completed episodes on `curve`.
    fn collect(
        &mut self,
        agent: &Agent,
        params: &[f64],
        len: usize,
        rng: &mut impl Rng,
        curve: &mut LearningCurve,
    ) -> Result<Rollout> {
        let e_max = self.envs.len();
        let batch = len * e_max;
        let mut out = Rollout {
            num_envs: e_max,
            observations: Vec::with_capacity(batch),
            actions: Vec::with_capacity(batch),
            log_probs: Vec::with_capacity(batch),
            rewards: Vec::with_capacity(batch),
            values: Vec::with_capacity(batch),
            dones: Vec::with_capacity(batch),
            next_values: Vec::with_capacity(e_max),
        };
        for _ in 0..len {
            self.global_step += e_max as u64;
            for e in 0..e_max {
                let obs = self.next_obs[e];
                let (logits, _) = agent.actor_forward(params, &obs)?;
                let dist = Categorical::from_logits(&logits);
                let action = dist.sample(rng);
                let log_prob = dist.log_prob(action);
                let (value, _) = agent.critic_forward(params, &obs)?;

                let outcome = self.envs[e].step(action);
                self.episode_returns[e] += outcome.reward;

                out.observations.push(obs);
                out.actions.push(action);
                out.log_probs.push(log_prob);
                out.rewards.push(outcome.reward);
                out.values.push(value);
                out.dones.push(outcome.done());

                if outcome.done() {
                    curve.points.push(CurvePoint {
                        step: self.global_step,
                        episodic_return: self.episode_returns[e],
                    });
                    self.episode_returns[e] = 0.0;
                    self.next_obs[e] = self.envs[e].reset(rng);
                } else {
                    self.next_obs[e] = outcome.observation;
                }
            }
        }
        for e in 0..e_max {
            let (next_value, _) = agent.critic_forward(params, &self.next_obs[e])?;
            out.next_values.push(next_value);
        }
        Ok(out)
    }
}

/// Mean per-sample loss components of the last optimization epoch, mostly
/// for diagnostics.
#[derive(Debug, Clone, Copy, Default)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub entropy: f64,
    pub grad_norm: f64,
}

/// One PPO optimization phase over a collected rollout: `num_epochs`
/// passes, each reshuffled and split into minibatches, one Adam step per
/// minibatch. Returns stats from the final minibatch.
#[allow(clippy::too_many_arguments)]
pub fn ppo_update(
    agent: &Agent,
    store: &mut ParamStore,
    rollout: &Rollout,
    advantages: &[f64],
    returns: &[f64],
    config: &PpoConfig,
    lr: f64,
    update_index: u64,
    rng: &mut impl Rng,
) -> Result<UpdateStats> {
    let batch = rollout.observations.len();
    let mb_size = batch / config.num_minibatches;
    let mut indices: Vec<usize> = (0..batch).collect();
    let mut grads = vec![0.0; store.len()];
    let mut stats = UpdateStats::default();

    for epoch in 0..config.num_epochs {
        indices.shuffle(rng);
        for (mb, chunk) in indices.chunks(mb_size).enumerate() {
            let mut mb_adv: Vec<f64> = chunk.iter().map(|&i| advantages[i]).collect();
            normalize_advantages(&mut mb_adv);

            grads.iter_mut().for_each(|g| *g = 0.0);
            stats = UpdateStats::default();
            let params = store.values().to_vec();
            for (&i, &adv) in chunk.iter().zip(&mb_adv) {
                let obs = rollout.observations[i];
                let (logits, acache) = agent.actor_forward(&params, &obs)?;
                if logits.iter().any(|l| !l.is_finite()) {
                    return Err(Error::NonFinite(format!(
                        "logits diverged at update {update_index}, epoch {epoch}, minibatch {mb}"
                    )));
                }
                let dist = Categorical::from_logits(&logits);
                let action = rollout.actions[i];
                let new_logp = dist.log_prob(action);
                let ratio = (new_logp - rollout.log_probs[i]).exp();
                let (value, ccache) = agent.critic_forward(&params, &obs)?;

                let unclipped = ratio * adv;
                let clipped = ratio.clamp(1.0 - config.clip_eps, 1.0 + config.clip_eps) * adv;
                let pg_loss = -unclipped.min(clipped);
                let v_err = value - returns[i];
                let v_loss = config.value_coef * v_err * v_err;
                let entropy = dist.entropy();
                let loss = pg_loss + v_loss - config.entropy_coef * entropy;
                if !loss.is_finite() {
                    return Err(Error::NonFinite(format!(
                        "loss diverged at update {update_index}, epoch {epoch}, minibatch {mb} \
                         (pg {pg_loss}, value {v_loss}, entropy {entropy})"
                    )));
                }
                stats.policy_loss += pg_loss;
                stats.value_loss += v_loss;
                stats.entropy += entropy;

                // d(pg_loss)/d(log pi) = -adv * ratio on the active branch;
                // zero when the clipped branch is active and saturated
                // (ties go to the unclipped branch, where both agree).
                let d_logp = if unclipped <= clipped { -adv * ratio } else { 0.0 };
                let mut d_logits = dist.dlogp_dlogits(action);
                let d_entropy = dist.dentropy_dlogits();
                for (dl, de) in d_logits.iter_mut().zip(&d_entropy) {
                    *dl = d_logp * *dl - config.entropy_coef * de;
                }
                agent.actor_backward(&params, &acache, &d_logits, &mut grads)?;
                let d_value = 2.0 * config.value_coef * v_err;
                agent.critic_backward(&params, &ccache, d_value, &mut grads)?;
            }

            let scale = 1.0 / chunk.len() as f64;
            grads.iter_mut().for_each(|g| *g *= scale);
            stats.policy_loss *= scale;
            stats.value_loss *= scale;
            stats.entropy *= scale;
            let norm = store.apply_update(&mut grads, lr, config.max_grad_norm);
            if !norm.is_finite() {
                return Err(Error::NonFinite(format!(
                    "gradient norm diverged at update {update_index}, epoch {epoch}, minibatch {mb}"
                )));
            }
            stats.grad_norm = norm;
        }
    }
    Ok(stats)
}

/// Trains `kind` on CartPole for `config.total_steps` environment steps.
/// A single seeded generator drives initialization, environment resets,
/// action sampling, and shuffling, so runs are bitwise reproducible.
/// Divergence is recorded in `aborted` rather than returned as an error.
pub fn train(kind: &AgentKind, config: &PpoConfig, seed: u64) -> Result<LearningCurve> {
    config.validate()?;
    let agent = Agent::new(kind.clone())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut store = ParamStore::init(&agent, &mut rng);
    let mut driver = Driver::new(config.num_envs, &mut rng);
    let mut curve = LearningCurve { seed, points: Vec::new(), aborted: None };

    let num_updates = config.num_updates();
    for update in 0..num_updates {
        let lr = if config.anneal_lr {
            let frac = 1.0 - update as f64 / num_updates as f64;
            config.lr * frac
        } else {
            config.lr
        };
        let rollout = driver.collect(
            &agent,
            &store.values().to_vec(),
            config.rollout_length,
            &mut rng,
            &mut curve,
        )?;
        let (advantages, returns) = rollout.gae(config.gamma, config.gae_lambda);
        match ppo_update(
            &agent, &mut store, &rollout, &advantages, &returns, config, lr, update, &mut rng,
        ) {
            Ok(_) => {}
            Err(Error::NonFinite(diag)) => {
                curve.aborted = Some(diag);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(curve)
}
