//! Epsilon-greedy tabular Q-learning on shaped rewards, plus an off-policy
//! variant on explicit MDPs for oracle-convergence checks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::envs::gridnav::TabularEnv;
use crate::error::{Error, Result};
use crate::mdp::TabularMdp;
use crate::shaping::shaped_reward;

use super::RunRecord;

/// Tabular shaping: one potential value per state, one control-energy value
/// per action.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TabularShaping {
    pub potential: Vec<f64>,
    pub lambda: f64,
    pub action_energy: Vec<f64>,
}

impl TabularShaping {
    pub fn off(n_states: usize, n_actions: usize) -> Self {
        Self { potential: vec![0.0; n_states], lambda: 0.0, action_energy: vec![0.0; n_actions] }
    }

    pub fn shaped(&self, r: f64, s: usize, s_next: usize, a: usize, gamma: f64) -> f64 {
        shaped_reward(
            r,
            self.potential[s],
            self.potential[s_next],
            self.action_energy[a],
            gamma,
            self.lambda,
        )
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct QHyper {
    pub gamma: f64,
    pub epsilon: f64,
    /// Learning rate `alpha0 / (1 + decay * visits(s, a))`.
    pub alpha0: f64,
    pub alpha_decay: f64,
    pub max_steps_per_episode: usize,
}

impl Default for QHyper {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            epsilon: 0.1,
            alpha0: 0.5,
            alpha_decay: 0.0,
            max_steps_per_episode: 400,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TabularOutcome {
    pub record: RunRecord,
    pub q: Vec<Vec<f64>>,
    pub greedy: Vec<usize>,
}

const Q_DIVERGENCE_LIMIT: f64 = 1e6;

fn argmax_lowest(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in row.iter().enumerate().skip(1) {
        if *v > row[best] {
            best = i;
        }
    }
    best
}

/// Episode-based epsilon-greedy Q-learning on a deterministic tabular
/// environment. RNG consumption is independent of the shaping values, so
/// all-zero shaping is bit-identical to a vanilla run.
pub fn tabular_q_learning<E: TabularEnv>(
    env: &E,
    shaping: &TabularShaping,
    episodes: usize,
    seed: u64,
    hyper: &QHyper,
) -> Result<TabularOutcome> {
    if shaping.potential.len() != env.n_states() || shaping.action_energy.len() != env.n_actions()
    {
        return Err(Error::DimensionMismatch("shaping table sizes".into()));
    }
    let start = std::time::Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, na) = (env.n_states(), env.n_actions());
    let mut q = vec![vec![0.0; na]; n];
    let mut visits = vec![vec![0u64; na]; n];
    let mut record = RunRecord::default();

    for _ in 0..episodes {
        let mut s = env.start_state();
        let mut base_ret = 0.0;
        let mut shaped_ret = 0.0;
        let mut len = 0;
        for _ in 0..hyper.max_steps_per_episode {
            let a = if rng.gen::<f64>() < hyper.epsilon {
                rng.gen_range(0..na)
            } else {
                argmax_lowest(&q[s])
            };
            let (s2, r, done) = env.step_index(s, a);
            let rs = shaping.shaped(r, s, s2, a, hyper.gamma);
            let target = if done {
                rs
            } else {
                rs + hyper.gamma * q[s2].iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            };
            visits[s][a] += 1;
            let alpha = hyper.alpha0 / (1.0 + hyper.alpha_decay * visits[s][a] as f64);
            q[s][a] += alpha * (target - q[s][a]);
            if q[s][a].abs() > Q_DIVERGENCE_LIMIT {
                return Err(Error::Diverged(format!(
                    "Q({s},{a}) = {} after {} visits",
                    q[s][a], visits[s][a]
                )));
            }
            base_ret += r;
            shaped_ret += rs;
            len += 1;
            s = s2;
            if done {
                break;
            }
        }
        record.push_episode(base_ret, shaped_ret, len, 0.0, 0.0);
    }
    record.wall_clock_secs = start.elapsed().as_secs_f64();
    let greedy = q.iter().map(|row| argmax_lowest(row)).collect();
    Ok(TabularOutcome { record, q, greedy })
}

/// Off-policy Q-learning on an explicit (possibly stochastic) MDP with
/// uniform state-action exploration; converges to the optimal Q of the
/// shaped MDP under a decaying learning rate.
pub fn q_learning_on_mdp(
    mdp: &TabularMdp,
    shaping: &TabularShaping,
    steps: usize,
    seed: u64,
    hyper: &QHyper,
) -> Result<Vec<Vec<f64>>> {
    if shaping.potential.len() != mdp.n_states() || shaping.action_energy.len() != mdp.n_actions()
    {
        return Err(Error::DimensionMismatch("shaping table sizes".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, na) = (mdp.n_states(), mdp.n_actions());
    let mut q = vec![vec![0.0; na]; n];
    let mut visits = vec![vec![0u64; na]; n];
    for _ in 0..steps {
        let s = rng.gen_range(0..n);
        let a = rng.gen_range(0..na);
        if mdp.is_terminal(s) {
            continue;
        }
        // sample s' from the transition row
        let row = mdp.transition_row(s, a);
        let u: f64 = rng.gen();
        let mut acc = 0.0;
        let mut s2 = n - 1;
        for (j, p) in row.iter().enumerate() {
            acc += p;
            if u <= acc {
                s2 = j;
                break;
            }
        }
        let r = mdp.reward_row(s, a)[s2];
        let rs = shaping.shaped(r, s, s2, a, mdp.gamma());
        let target = if mdp.is_terminal(s2) {
            rs
        } else {
            rs + mdp.gamma() * q[s2].iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        };
        visits[s][a] += 1;
        let alpha = hyper.alpha0 / (1.0 + hyper.alpha_decay * visits[s][a] as f64);
        q[s][a] += alpha * (target - q[s][a]);
        if q[s][a].abs() > Q_DIVERGENCE_LIMIT {
            return Err(Error::Diverged(format!("Q({s},{a}) = {}", q[s][a])));
        }
    }
    Ok(q)
}
