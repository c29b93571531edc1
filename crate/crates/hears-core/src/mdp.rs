//! Finite tabular MDPs and exact solvers.
//!
//! Everything in this module is deterministic and side-effect free; the
//! solvers serve as ground-truth oracles for the shaping checks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

const ROW_SUM_TOL: f64 = 1e-9;

/// A finite MDP with dense transition tensor `P[s][a][s']` and reward tensor
/// `R[s][a][s']`. Terminal states self-loop with zero reward so the
/// infinite-horizon formulas apply uniformly.
#[derive(Debug, Clone)]
pub struct TabularMdp {
    n_states: usize,
    n_actions: usize,
    /// Row-major `[s][a][s']`, each `(s,a)` row sums to 1.
    transition: Vec<f64>,
    /// Row-major `[s][a][s']`.
    reward: Vec<f64>,
    gamma: f64,
    terminal: Vec<bool>,
}

impl TabularMdp {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transition: Vec<f64>,
        reward: Vec<f64>,
        gamma: f64,
        terminal: Vec<bool>,
    ) -> Result<Self> {
        let len = n_states * n_actions * n_states;
        if transition.len() != len || reward.len() != len {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries in P and R, got {} and {}",
                len,
                transition.len(),
                reward.len()
            )));
        }
        if terminal.len() != n_states {
            return Err(Error::DimensionMismatch(format!(
                "terminal mask has {} entries for {} states",
                terminal.len(),
                n_states
            )));
        }
        if !(gamma > 0.0 && gamma < 1.0) {
            return Err(Error::InvalidMdp(format!("gamma must be in (0,1), got {gamma}")));
        }
        let mdp = Self {
            n_states,
            n_actions,
            transition,
            reward,
            gamma,
            terminal,
        };
        mdp.validate()?;
        Ok(mdp)
    }

    fn validate(&self) -> Result<()> {
        for s in 0..self.n_states {
            for a in 0..self.n_actions {
                let row = self.transition_row(s, a);
                let mut sum = 0.0;
                for &p in row {
                    if !(0.0..=1.0 + ROW_SUM_TOL).contains(&p) {
                        return Err(Error::InvalidMdp(format!(
                            "P[{s}][{a}] contains probability {p} outside [0,1]"
                        )));
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > ROW_SUM_TOL {
                    return Err(Error::InvalidMdp(format!(
                        "P[{s}][{a}] sums to {sum}, expected 1"
                    )));
                }
            }
        }
        for s in 0..self.n_states {
            if self.terminal[s] {
                for a in 0..self.n_actions {
                    let row = self.transition_row(s, a);
                    if (row[s] - 1.0).abs() > ROW_SUM_TOL {
                        return Err(Error::InvalidMdp(format!(
                            "terminal state {s} must self-loop"
                        )));
                    }
                    if self.reward_row(s, a).iter().any(|&r| r != 0.0) {
                        return Err(Error::InvalidMdp(format!(
                            "terminal state {s} must have zero reward"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    #[inline]
    fn idx(&self, s: usize, a: usize) -> usize {
        (s * self.n_actions + a) * self.n_states
    }

    #[inline]
    pub fn transition_row(&self, s: usize, a: usize) -> &[f64] {
        let i = self.idx(s, a);
        &self.transition[i..i + self.n_states]
    }

    #[inline]
    pub fn reward_row(&self, s: usize, a: usize) -> &[f64] {
        let i = self.idx(s, a);
        &self.reward[i..i + self.n_states]
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal[s]
    }

    pub fn terminal_mask(&self) -> &[bool] {
        &self.terminal
    }

    /// Returns a copy with every reward replaced by `f(s, a, s', r)`.
    /// Terminal self-loops keep zero reward so the absorbing convention holds.
    pub fn map_rewards(&self, f: impl Fn(usize, usize, usize, f64) -> f64) -> Result<Self> {
        let mut reward = self.reward.clone();
        for s in 0..self.n_states {
            if self.terminal[s] {
                continue;
            }
            for a in 0..self.n_actions {
                let base = self.idx(s, a);
                for s2 in 0..self.n_states {
                    reward[base + s2] = f(s, a, s2, self.reward[base + s2]);
                }
            }
        }
        Self::new(
            self.n_states,
            self.n_actions,
            self.transition.clone(),
            reward,
            self.gamma,
            self.terminal.clone(),
        )
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::new(
            self.n_states,
            self.n_actions,
            self.transition.clone(),
            self.reward.clone(),
            gamma,
            self.terminal.clone(),
        )
    }
}

/// Converged state values and action values.
#[derive(Debug, Clone)]
pub struct ValueTable {
    pub v: Vec<f64>,
    /// Row-major `[s][a]`.
    pub q: Vec<f64>,
    pub n_actions: usize,
}

impl ValueTable {
    #[inline]
    pub fn q_row(&self, s: usize) -> &[f64] {
        &self.q[s * self.n_actions..(s + 1) * self.n_actions]
    }
}

fn backup(mdp: &TabularMdp, v: &[f64], q: &mut [f64]) {
    let n = mdp.n_states();
    for s in 0..n {
        for a in 0..mdp.n_actions() {
            let p = mdp.transition_row(s, a);
            let r = mdp.reward_row(s, a);
            let mut sum = 0.0;
            for s2 in 0..n {
                if p[s2] != 0.0 {
                    sum += p[s2] * (r[s2] + mdp.gamma() * v[s2]);
                }
            }
            q[s * mdp.n_actions() + a] = sum;
        }
    }
}

/// Synchronous value iteration to a sup-norm Bellman residual of `tol`.
pub fn value_iteration(mdp: &TabularMdp, tol: f64, max_iters: usize) -> Result<ValueTable> {
    if tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tol must be > 0, got {tol}")));
    }
    let n = mdp.n_states();
    let na = mdp.n_actions();
    let mut v = vec![0.0; n];
    let mut q = vec![0.0; n * na];
    let mut residual = f64::INFINITY;
    for _ in 0..max_iters {
        backup(mdp, &v, &mut q);
        residual = 0.0;
        for s in 0..n {
            let best = q[s * na..(s + 1) * na]
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            residual = residual.max((best - v[s]).abs());
            v[s] = best;
        }
        if residual <= tol {
            // final Q consistent with the returned V
            backup(mdp, &v, &mut q);
            return Ok(ValueTable { v, q, n_actions: na });
        }
    }
    Err(Error::NoConvergence {
        iters: max_iters,
        residual,
    })
}

/// Greedy policy from converged action values. Ties break to the lowest
/// action index so oracle comparisons are deterministic.
pub fn greedy_policy(values: &ValueTable) -> Vec<usize> {
    let n = values.v.len();
    let mut policy = Vec::with_capacity(n);
    for s in 0..n {
        let row = values.q_row(s);
        let mut best = 0;
        for (a, &qa) in row.iter().enumerate() {
            if qa > row[best] {
                best = a;
            }
        }
        policy.push(best);
    }
    policy
}

/// Exact evaluation of a deterministic policy by iterative application of the
/// Bellman expectation operator, to residual `tol`.
pub fn evaluate_policy(mdp: &TabularMdp, policy: &[usize], tol: f64) -> Result<Vec<f64>> {
    if policy.len() != mdp.n_states() {
        return Err(Error::DimensionMismatch(format!(
            "policy covers {} states, MDP has {}",
            policy.len(),
            mdp.n_states()
        )));
    }
    if tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tol must be > 0, got {tol}")));
    }
    let n = mdp.n_states();
    let mut v = vec![0.0; n];
    // contraction with modulus gamma; iteration count bounded accordingly
    let max_iters = ((tol.ln() - 20.0) / mdp.gamma().ln()).ceil().max(64.0) as usize;
    let mut residual = f64::INFINITY;
    for _ in 0..max_iters {
        residual = 0.0;
        let mut next = vec![0.0; n];
        for s in 0..n {
            let a = policy[s];
            let p = mdp.transition_row(s, a);
            let r = mdp.reward_row(s, a);
            let mut sum = 0.0;
            for s2 in 0..n {
                if p[s2] != 0.0 {
                    sum += p[s2] * (r[s2] + mdp.gamma() * v[s2]);
                }
            }
            next[s] = sum;
            residual = residual.max((sum - v[s]).abs());
        }
        v = next;
        if residual <= tol {
            return Ok(v);
        }
    }
    Err(Error::NoConvergence {
        iters: max_iters,
        residual,
    })
}

/// Expected value under a start-state distribution.
pub fn expected_start_value(values: &[f64], start_distribution: &[f64]) -> f64 {
    values
        .iter()
        .zip(start_distribution)
        .map(|(v, p)| v * p)
        .sum()
}

/// Deterministic random MDP generator: row-stochastic P from a symmetric
/// Dirichlet-like construction, rewards uniform in `[-reward_scale, reward_scale]`,
/// gamma fixed at 0.9 (override with [`TabularMdp::with_gamma`]).
pub fn random_mdp(seed: u64, n_states: usize, n_actions: usize, reward_scale: f64) -> Result<TabularMdp> {
    if n_states < 2 || n_actions < 2 {
        return Err(Error::InvalidArgument(
            "random_mdp needs at least 2 states and 2 actions".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = n_states * n_actions * n_states;
    let mut transition = vec![0.0; len];
    let mut reward = vec![0.0; len];
    for row in 0..n_states * n_actions {
        let base = row * n_states;
        let mut sum = 0.0;
        for s2 in 0..n_states {
            // -ln(U) gives Exp(1) draws; normalizing yields Dirichlet(1,..,1)
            let e = -rng.gen_range(f64::MIN_POSITIVE..1.0f64).ln();
            transition[base + s2] = e;
            sum += e;
        }
        for s2 in 0..n_states {
            transition[base + s2] /= sum;
            reward[base + s2] = rng.gen_range(-reward_scale..=reward_scale);
        }
    }
    TabularMdp::new(
        n_states,
        n_actions,
        transition,
        reward,
        0.9,
        vec![false; n_states],
    )
}
