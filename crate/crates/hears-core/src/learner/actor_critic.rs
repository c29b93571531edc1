//! Minimal deterministic-mean actor-critic with Gaussian exploration, one
//! critic, target networks, and replay. Shaped rewards enter only through
//! the critic's TD target; the actor sees critic-derived advantages and
//! never the base reward.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::envs::Environment;
use crate::error::{Error, Result};

use super::mlp::{clip_gradient, Mlp};
use super::replay::{ReplayBuffer, Transition};
use super::{EnvShaping, RunRecord};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AcConfig {
    pub episodes: usize,
    pub batch_size: usize,
    pub buffer_capacity: usize,
    /// Environment steps between update batches.
    pub update_every: usize,
    /// Minimum buffer fill before updates start.
    pub warmup: usize,
    pub sigma_start: f64,
    pub sigma_end: f64,
    pub lr_actor: f64,
    pub lr_critic: f64,
    pub tau: f64,
    pub hidden: Vec<usize>,
    pub grad_clip: f64,
}

impl Default for AcConfig {
    fn default() -> Self {
        Self {
            episodes: 100,
            batch_size: 64,
            buffer_capacity: 20_000,
            update_every: 1,
            warmup: 256,
            sigma_start: 0.4,
            sigma_end: 0.05,
            lr_actor: 1e-3,
            lr_critic: 3e-3,
            tau: 0.01,
            hidden: vec![32, 32],
            grad_clip: 1.0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AcNets {
    pub actor: Mlp,
    pub critic: Mlp,
    pub actor_target: Mlp,
    pub critic_target: Mlp,
    pub tau: f64,
}

impl AcNets {
    pub fn new(obs_dim: usize, action_dim: usize, hidden: &[usize], tau: f64, seed: u64) -> Result<Self> {
        let mut actor_sizes = vec![obs_dim];
        actor_sizes.extend_from_slice(hidden);
        actor_sizes.push(action_dim);
        let mut critic_sizes = vec![obs_dim];
        critic_sizes.extend_from_slice(hidden);
        critic_sizes.push(1);
        let actor = Mlp::new(actor_sizes, seed)?;
        let critic = Mlp::new(critic_sizes, seed.wrapping_add(1))?;
        Ok(Self {
            actor_target: actor.clone(),
            critic_target: critic.clone(),
            actor,
            critic,
            tau,
        })
    }

    /// `theta' <- theta + (1 - tau)(theta' - theta)`; algebraically the
    /// polyak rule, written so the gap contracts by exactly `1 - tau`.
    pub fn polyak_update(&mut self) {
        let tau = self.tau;
        for (t, s) in self.actor_target.params.iter_mut().zip(&self.actor.params) {
            *t = s + (1.0 - tau) * (*t - s);
        }
        for (t, s) in self.critic_target.params.iter_mut().zip(&self.critic.params) {
            *t = s + (1.0 - tau) * (*t - s);
        }
    }

    fn check_finite(&self) -> Result<()> {
        let bad = self
            .actor
            .params
            .iter()
            .chain(&self.critic.params)
            .any(|p| !p.is_finite());
        if bad {
            return Err(Error::Numerical("non-finite network parameter".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AcOutcome {
    pub record: RunRecord,
    pub nets: AcNets,
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box-Muller; two uniforms per sample keeps consumption deterministic
    let u1: f64 = rng.gen::<f64>().max(1e-300);
    let u2: f64 = rng.gen::<f64>();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Critic loss and gradient over a batch: `L = mean (V(s) - y)^2`.
/// Exposed for the finite-difference oracle.
pub fn critic_loss_grad(critic: &Mlp, obs: &[Vec<f64>], targets: &[f64]) -> Result<(f64, Vec<f64>)> {
    let mut loss = 0.0;
    let mut grads = vec![0.0; critic.params.len()];
    let n = obs.len() as f64;
    for (o, y) in obs.iter().zip(targets) {
        let (v, cache) = critic.forward(o)?;
        let err = v[0] - y;
        loss += err * err / n;
        let (g, _) = critic.backward(&cache, &[2.0 * err / n])?;
        for (acc, gi) in grads.iter_mut().zip(&g) {
            *acc += gi;
        }
    }
    Ok((loss, grads))
}

/// Algorithm-structured training loop: act with Gaussian exploration around
/// the actor mean, compute potentials after observing `s_{t+1}`, store the
/// shaped transition, and update critic then actor from replay batches.
pub fn actor_critic_train<E: Environment>(
    env: &mut E,
    shaping: &EnvShaping,
    config: &AcConfig,
    seed: u64,
) -> Result<AcOutcome> {
    let start = std::time::Instant::now();
    let obs_dim = {
        let s0 = env.reset(seed);
        env.observe(&s0).len()
    };
    let action_dim = env.action_dim();
    let low = env.action_low();
    let high = env.action_high();

    let mut nets = AcNets::new(obs_dim, action_dim, &config.hidden, config.tau, seed)?;
    let mut buffer = ReplayBuffer::new(
        config.buffer_capacity,
        shaping.gamma,
        shaping.lambda,
        seed.wrapping_add(2),
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(3));
    let mut record = RunRecord::default();
    let mut total_steps = 0usize;

    for ep in 0..config.episodes {
        let mut state = env.reset(seed.wrapping_add(ep as u64));
        let frac = if config.episodes > 1 { ep as f64 / (config.episodes - 1) as f64 } else { 0.0 };
        let sigma = config.sigma_start + (config.sigma_end - config.sigma_start) * frac;

        let mut base_ret = 0.0;
        let mut shaped_ret = 0.0;
        let mut len = 0usize;
        let mut tv = 0.0;
        let mut de = 0.0;
        let mut prev_action: Option<Vec<f64>> = None;
        let mut prev_energy = env.internal_energy(&state);

        loop {
            let obs = env.observe(&state);
            let (mean, _) = nets.actor.forward(&obs)?;
            let mut action = vec![0.0; action_dim];
            for i in 0..action_dim {
                action[i] = (mean[i] + sigma * gaussian(&mut rng)).clamp(low[i], high[i]);
            }
            let out = env.step(&state, &action)?;

            // shaping terms evaluated only after s_{t+1} is observed
            let phi_s = shaping.potential(env, &state);
            let phi_next = shaping.potential(env, &out.state);
            let energy_a = shaping.action_energy(&action)?;
            let r_shaped = shaping.shaped(out.base_reward, phi_s, phi_next, energy_a);

            if let Some(p) = &prev_action {
                tv += action
                    .iter()
                    .zip(p)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt();
            }
            let e_next = env.internal_energy(&out.state);
            de += (e_next - prev_energy).abs();
            prev_energy = e_next;
            prev_action = Some(action.clone());

            let obs_next = env.observe(&out.state);
            buffer.push(Transition {
                obs: obs.clone(),
                action: action.clone(),
                base_reward: out.base_reward,
                shaped_reward: r_shaped,
                phi_s,
                phi_next,
                energy_a,
                obs_next: obs_next.clone(),
                terminal: out.terminal,
            })?;

            base_ret += out.base_reward;
            shaped_ret += r_shaped;
            len += 1;
            total_steps += 1;

            if buffer.len() >= config.warmup && total_steps % config.update_every == 0 {
                update_batch(&mut nets, &mut buffer, shaping, config, sigma)?;
                nets.check_finite().map_err(|_| {
                    Error::Numerical(format!(
                        "NaN parameter after update at episode {ep}, step {len}"
                    ))
                })?;
            }

            if out.terminal {
                break;
            }
            state = out.state;
        }
        record.push_episode(base_ret, shaped_ret, len, tv, de);
    }
    record.wall_clock_secs = start.elapsed().as_secs_f64();
    Ok(AcOutcome { record, nets })
}

fn update_batch(
    nets: &mut AcNets,
    buffer: &mut ReplayBuffer,
    shaping: &EnvShaping,
    config: &AcConfig,
    sigma: f64,
) -> Result<()> {
    let idx = buffer.sample_indices(config.batch_size)?;
    let n = idx.len() as f64;

    // critic: y = R_shaped + gamma V_target(s') on non-terminal transitions
    let mut critic_grads = vec![0.0; nets.critic.params.len()];
    let mut targets = Vec::with_capacity(idx.len());
    for &i in &idx {
        let tr = buffer.get(i);
        let y = if tr.terminal {
            tr.shaped_reward
        } else {
            let (v_next, _) = nets.critic_target.forward(&tr.obs_next)?;
            tr.shaped_reward + shaping.gamma * v_next[0]
        };
        targets.push(y);
    }
    for (k, &i) in idx.iter().enumerate() {
        let tr = buffer.get(i);
        let (v, cache) = nets.critic.forward(&tr.obs)?;
        let err = v[0] - targets[k];
        let (g, _) = nets.critic.backward(&cache, &[2.0 * err / n])?;
        for (acc, gi) in critic_grads.iter_mut().zip(&g) {
            *acc += gi;
        }
    }
    clip_gradient(&mut critic_grads, config.grad_clip);
    for (p, g) in nets.critic.params.iter_mut().zip(&critic_grads) {
        *p -= config.lr_critic * g;
    }

    // actor: ascend E[grad log pi(a|s) * A] with A = y - V(s); the Gaussian
    // score for a fixed sigma is (a - mu)/sigma^2 through the mean head
    let sigma2 = sigma * sigma;
    let mut actor_grads = vec![0.0; nets.actor.params.len()];
    for (k, &i) in idx.iter().enumerate() {
        let tr = buffer.get(i);
        let (v, _) = nets.critic.forward(&tr.obs)?;
        let advantage = targets[k] - v[0];
        let (mean, cache) = nets.actor.forward(&tr.obs)?;
        let upstream: Vec<f64> = mean
            .iter()
            .zip(&tr.action)
            .map(|(m, a)| -advantage * (a - m) / sigma2 / n)
            .collect();
        let (g, _) = nets.actor.backward(&cache, &upstream)?;
        for (acc, gi) in actor_grads.iter_mut().zip(&g) {
            *acc += gi;
        }
    }
    clip_gradient(&mut actor_grads, config.grad_clip);
    for (p, g) in nets.actor.params.iter_mut().zip(&actor_grads) {
        *p -= config.lr_actor * g;
    }

    nets.polyak_update();
    Ok(())
}
