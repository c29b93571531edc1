//! Learners that consume shaped rewards: exact-oracle tabular Q-learning and
//! a minimal actor-critic. Both share the rule that shaping with all-zero
//! coefficients is arithmetically identical to no shaping at all.

pub mod actor_critic;
pub mod mlp;
pub mod replay;
pub mod tabular;

pub use actor_critic::{actor_critic_train, AcConfig, AcNets, AcOutcome};
pub use mlp::{clip_gradient, Mlp};
pub use replay::{ReplayBuffer, Transition};
pub use tabular::{q_learning_on_mdp, tabular_q_learning, QHyper, TabularOutcome, TabularShaping};

use serde::{Deserialize, Serialize};

use crate::envs::{EnvState, Environment};
use crate::error::{Error, Result};
use crate::shaping::{action_energy, shaped_reward};

/// H-EARS coefficients applied to a simulated environment:
/// `Phi(s) = alpha_task * Phi_task(s) - alpha_energy * E_int(s)` and
/// `E(a) = a^T Q a` with `Q = 0.5 I` by default.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnvShaping {
    pub alpha_task: f64,
    pub alpha_energy: f64,
    pub lambda: f64,
    pub gamma: f64,
    /// Row-major `action_dim x action_dim` energy weight.
    pub q_matrix: Vec<f64>,
    /// Symmetric clip on the total potential.
    pub phi_clip: f64,
}

impl EnvShaping {
    pub fn new(alpha_task: f64, alpha_energy: f64, lambda: f64, gamma: f64, action_dim: usize) -> Self {
        let mut q = vec![0.0; action_dim * action_dim];
        for i in 0..action_dim {
            q[i * action_dim + i] = 0.5;
        }
        Self { alpha_task, alpha_energy, lambda, gamma, q_matrix: q, phi_clip: f64::INFINITY }
    }

    /// The identity configuration: every shaping term is exactly zero.
    pub fn off(gamma: f64, action_dim: usize) -> Self {
        Self::new(0.0, 0.0, 0.0, gamma, action_dim)
    }

    pub fn is_off(&self) -> bool {
        self.alpha_task == 0.0 && self.alpha_energy == 0.0 && self.lambda == 0.0
    }

    pub fn potential<E: Environment + ?Sized>(&self, env: &E, state: &EnvState) -> f64 {
        let phi = self.alpha_task * env.task_potential(state)
            - self.alpha_energy * env.internal_energy(state);
        phi.clamp(-self.phi_clip, self.phi_clip)
    }

    pub fn action_energy(&self, a: &[f64]) -> Result<f64> {
        action_energy(a, &self.q_matrix)
    }

    pub fn shaped(&self, base: f64, phi_s: f64, phi_next: f64, energy_a: f64) -> f64 {
        shaped_reward(base, phi_s, phi_next, energy_a, self.gamma, self.lambda)
    }
}

/// Per-run metrics shared by both learners.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunRecord {
    pub base_returns: Vec<f64>,
    pub shaped_returns: Vec<f64>,
    pub episode_lengths: Vec<usize>,
    /// Per-episode total action variation `sum_t ||a_t - a_{t-1}||`.
    pub action_tv: Vec<f64>,
    /// Per-episode total absolute energy change `sum_t |dE_t|`.
    pub energy_change: Vec<f64>,
    pub wall_clock_secs: f64,
}

impl RunRecord {
    pub fn push_episode(
        &mut self,
        base: f64,
        shaped: f64,
        length: usize,
        tv: f64,
        de: f64,
    ) {
        self.base_returns.push(base);
        self.shaped_returns.push(shaped);
        self.episode_lengths.push(length);
        self.action_tv.push(tv);
        self.energy_change.push(de);
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ProbeResult {
    /// `sum_t ||a_t - a_{t-1}||`.
    pub action_total_variation: f64,
    /// `sum_t |dE_t|`, the per-step accumulation.
    pub energy_change_total: f64,
    /// `|E_end - E_start|`, the trajectory-level change the oscillation
    /// argument bounds.
    pub net_energy_change: f64,
}

/// Rolls a deterministic policy out of `env.reset(seed)` and accumulates
/// action variation and energy-change statistics.
pub fn oscillation_probe<E, P>(
    env: &mut E,
    mut policy: P,
    steps: usize,
    seed: u64,
) -> Result<ProbeResult>
where
    E: Environment,
    P: FnMut(&EnvState) -> Vec<f64>,
{
    if steps == 0 {
        return Err(Error::InvalidArgument("probe needs at least one step".into()));
    }
    let mut state = env.reset(seed);
    let mut prev_action: Option<Vec<f64>> = None;
    let first_energy = env.internal_energy(&state);
    let mut prev_energy = first_energy;
    let mut tv = 0.0;
    let mut de_total = 0.0;
    for _ in 0..steps {
        let a = policy(&state);
        if let Some(p) = &prev_action {
            tv += a.iter().zip(p).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
        }
        let out = env.step(&state, &a)?;
        let e = env.internal_energy(&out.state);
        de_total += (e - prev_energy).abs();
        prev_energy = e;
        prev_action = Some(a);
        if out.terminal {
            state = env.reset(seed);
            prev_energy = env.internal_energy(&state);
            prev_action = None;
        } else {
            state = out.state;
        }
    }
    Ok(ProbeResult {
        action_total_variation: tv,
        energy_change_total: de_total,
        net_energy_change: (prev_energy - first_energy).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::HopperLite;

    #[test]
    fn off_shaping_is_exact_identity() {
        let sh = EnvShaping::off(0.99, 2);
        assert!(sh.is_off());
        for r in [-3.5, 0.0, 7.25] {
            let phi = 0.0;
            let v = sh.shaped(r, phi, phi, 123.0);
            assert_eq!(v.to_bits(), r.to_bits());
        }
    }

    #[test]
    fn constant_policy_zero_tv() {
        let mut env = HopperLite::default();
        let probe = oscillation_probe(&mut env, |_| vec![0.2, 0.1, 0.0], 200, 0).unwrap();
        assert_eq!(probe.action_total_variation, 0.0);
    }

    #[test]
    fn alternating_policy_high_tv_low_net_energy_change() {
        // Theorem-style adversarial construction: a_t = (-1)^t a_max
        let mut env = HopperLite::default();
        let mut t = 0u64;
        let probe = oscillation_probe(
            &mut env,
            |_| {
                let sign = if t % 2 == 0 { 1.0 } else { -1.0 };
                t += 1;
                vec![sign, sign, sign]
            },
            250,
            0,
        )
        .unwrap();
        assert!(
            probe.action_total_variation > 100.0 * probe.net_energy_change,
            "tv {} vs net energy change {}",
            probe.action_total_variation,
            probe.net_energy_change
        );
    }

    #[test]
    fn potential_composition() {
        let env = HopperLite::default();
        let sh = EnvShaping::new(0.5, 0.01, 0.0005, 0.99, 3);
        let mut s = env.clone().reset(0);
        s.q[0] = 4.0;
        let expect = 0.5 * env.task_potential(&s) - 0.01 * env.internal_energy(&s);
        assert!((sh.potential(&env, &s) - expect).abs() < 1e-12);
        let clipped = EnvShaping { phi_clip: 0.1, ..sh };
        assert!(clipped.potential(&env, &s).abs() <= 0.1);
    }

    #[test]
    fn action_energy_half_norm() {
        let sh = EnvShaping::new(0.0, 0.0, 0.1, 0.99, 3);
        let e = sh.action_energy(&[1.0, 2.0, 2.0]).unwrap();
        assert!((e - 4.5).abs() < 1e-12);
    }
}
