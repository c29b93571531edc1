//! Sparse-reward grid navigation: deterministic moves on a `w x h` board,
//! reward 1 only on entering the goal cell. The canonical hard-exploration
//! testbed for the shaping-acceleration experiments.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::mdp::TabularMdp;

use super::{EnvState, Environment, StepOutcome};

/// Discrete environments that admit an exact tabular embedding.
pub trait TabularEnv {
    fn n_states(&self) -> usize;
    fn n_actions(&self) -> usize;
    fn start_state(&self) -> usize;
    /// Deterministic transition: `(next_state, base_reward, terminal)`.
    fn step_index(&self, state: usize, action: usize) -> (usize, f64, bool);
    fn is_terminal(&self, state: usize) -> bool;
    fn to_mdp(&self, gamma: f64) -> Result<TabularMdp>;
}

#[derive(Debug, Clone)]
pub struct GridNav {
    pub width: usize,
    pub height: usize,
    pub start: (usize, usize),
    pub goal: (usize, usize),
    walls: Vec<bool>,
    /// BFS shortest-path steps to goal per cell; usize::MAX when unreachable.
    dist: Vec<usize>,
    pub max_steps: u64,
}

const MOVES: [(isize, isize); 4] = [(0, 1), (0, -1), (-1, 0), (1, 0)];

impl GridNav {
    pub fn new(width: usize, height: usize) -> Result<Self> {
        Self::with_walls(width, height, (0, 0), (width - 1, height - 1), &[])
    }

    pub fn with_walls(
        width: usize,
        height: usize,
        start: (usize, usize),
        goal: (usize, usize),
        walls: &[(usize, usize)],
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument("empty grid".into()));
        }
        let mut wall_mask = vec![false; width * height];
        for &(x, y) in walls {
            if x >= width || y >= height {
                return Err(Error::InvalidArgument(format!("wall ({x},{y}) outside grid")));
            }
            wall_mask[y * width + x] = true;
        }
        let sid = start.1 * width + start.0;
        let gid = goal.1 * width + goal.0;
        if start.0 >= width || start.1 >= height || goal.0 >= width || goal.1 >= height {
            return Err(Error::InvalidArgument("start/goal outside grid".into()));
        }
        if wall_mask[sid] || wall_mask[gid] {
            return Err(Error::InvalidArgument("start/goal on a wall".into()));
        }
        let mut env = Self {
            width,
            height,
            start,
            goal,
            walls: wall_mask,
            dist: Vec::new(),
            max_steps: (width * height * 4) as u64,
        };
        env.dist = env.bfs_from_goal();
        if env.dist[sid] == usize::MAX {
            return Err(Error::InvalidArgument("goal unreachable from start".into()));
        }
        Ok(env)
    }

    fn bfs_from_goal(&self) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.width * self.height];
        let gid = self.goal.1 * self.width + self.goal.0;
        dist[gid] = 0;
        let mut queue = VecDeque::from([gid]);
        while let Some(id) = queue.pop_front() {
            let (x, y) = (id % self.width, id / self.width);
            for (dx, dy) in MOVES {
                let nx = x as isize + dx;
                let ny = y as isize + dy;
                if nx < 0 || ny < 0 || nx >= self.width as isize || ny >= self.height as isize {
                    continue;
                }
                let nid = ny as usize * self.width + nx as usize;
                if !self.walls[nid] && dist[nid] == usize::MAX {
                    dist[nid] = dist[id] + 1;
                    queue.push_back(nid);
                }
            }
        }
        dist
    }

    pub fn state_id(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    /// Negative shortest-path distance to the goal; the task potential.
    pub fn potential_of(&self, state: usize) -> f64 {
        match self.dist[state] {
            usize::MAX => -((self.width * self.height) as f64),
            d => -(d as f64),
        }
    }

    pub fn potential_table(&self) -> Vec<f64> {
        (0..self.width * self.height).map(|s| self.potential_of(s)).collect()
    }
}

impl TabularEnv for GridNav {
    fn n_states(&self) -> usize {
        self.width * self.height
    }

    fn n_actions(&self) -> usize {
        4
    }

    fn start_state(&self) -> usize {
        self.state_id(self.start.0, self.start.1)
    }

    fn step_index(&self, state: usize, action: usize) -> (usize, f64, bool) {
        let gid = self.state_id(self.goal.0, self.goal.1);
        if state == gid {
            return (state, 0.0, true);
        }
        let (x, y) = (state % self.width, state / self.width);
        let (dx, dy) = MOVES[action];
        let nx = x as isize + dx;
        let ny = y as isize + dy;
        let next = if nx < 0 || ny < 0 || nx >= self.width as isize || ny >= self.height as isize {
            state
        } else {
            let nid = ny as usize * self.width + nx as usize;
            if self.walls[nid] {
                state
            } else {
                nid
            }
        };
        if next == gid {
            (next, 1.0, true)
        } else {
            (next, 0.0, false)
        }
    }

    fn is_terminal(&self, state: usize) -> bool {
        state == self.state_id(self.goal.0, self.goal.1)
    }

    fn to_mdp(&self, gamma: f64) -> Result<TabularMdp> {
        let n = self.n_states();
        let na = self.n_actions();
        let mut transition = vec![0.0; n * na * n];
        let mut reward = vec![0.0; n * na * n];
        let mut terminal = vec![false; n];
        let gid = self.state_id(self.goal.0, self.goal.1);
        terminal[gid] = true;
        for s in 0..n {
            for a in 0..na {
                let (s2, r, _) = self.step_index(s, a);
                let (s2, r) = if s == gid { (gid, 0.0) } else { (s2, r) };
                let idx = (s * na + a) * n + s2;
                transition[idx] = 1.0;
                reward[idx] = r;
            }
        }
        TabularMdp::new(n, na, transition, reward, gamma, terminal)
    }
}

impl Environment for GridNav {
    fn reset(&mut self, _seed: u64) -> EnvState {
        EnvState::new(vec![self.start.0 as f64, self.start.1 as f64], vec![])
    }

    fn step(&mut self, state: &EnvState, action: &[f64]) -> Result<StepOutcome> {
        state.check_finite()?;
        let a = (action[0].round() as usize).min(3);
        let sid = self.state_id(state.q[0] as usize, state.q[1] as usize);
        let (s2, r, done) = self.step_index(sid, a);
        let mut next = EnvState::new(
            vec![(s2 % self.width) as f64, (s2 / self.width) as f64],
            vec![],
        );
        next.t = state.t + 1;
        Ok(StepOutcome {
            state: next,
            base_reward: r,
            terminal: done,
            clipped: false,
        })
    }

    fn task_potential(&self, state: &EnvState) -> f64 {
        self.potential_of(self.state_id(state.q[0] as usize, state.q[1] as usize))
    }

    fn internal_energy(&self, _state: &EnvState) -> f64 {
        0.0
    }

    fn observe(&self, state: &EnvState) -> Vec<f64> {
        vec![
            state.q[0] / self.width as f64,
            state.q[1] / self.height as f64,
        ]
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn action_low(&self) -> Vec<f64> {
        vec![0.0]
    }

    fn action_high(&self) -> Vec<f64> {
        vec![3.0]
    }

    fn dt(&self) -> f64 {
        1.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{greedy_policy, value_iteration};

    #[test]
    fn move_into_goal_is_rewarded_terminal() {
        let env = GridNav::new(3, 3).unwrap();
        let pre = env.state_id(1, 2);
        let (s2, r, done) = env.step_index(pre, 3); // move +x into (2,2)
        assert_eq!(s2, env.state_id(2, 2));
        assert_eq!(r, 1.0);
        assert!(done);
    }

    #[test]
    fn boundary_moves_are_no_ops() {
        let env = GridNav::new(3, 3).unwrap();
        let s = env.state_id(0, 0);
        let (s2, r, done) = env.step_index(s, 1); // -y off the board
        assert_eq!(s2, s);
        assert_eq!(r, 0.0);
        assert!(!done);
    }

    #[test]
    fn bfs_matches_manhattan_without_walls() {
        let env = GridNav::new(5, 4).unwrap();
        for y in 0..4 {
            for x in 0..5 {
                let d = (4 - x) + (3 - y);
                assert_eq!(env.potential_of(env.state_id(x, y)), -(d as f64));
            }
        }
    }

    #[test]
    fn walls_lengthen_paths() {
        // vertical wall with a gap at the top
        let walls: Vec<(usize, usize)> = (0..4).map(|y| (2, y)).collect();
        let env = GridNav::with_walls(5, 5, (0, 0), (4, 0), &walls).unwrap();
        // straight-line distance 4, detour over y=4 costs 4+2*4
        assert_eq!(env.potential_of(env.state_id(0, 0)), -12.0);
        assert!(GridNav::with_walls(3, 1, (0, 0), (2, 0), &[(1, 0)]).is_err());
    }

    #[test]
    fn embedding_optimal_value_matches_distance() {
        let env = GridNav::new(4, 4).unwrap();
        let gamma = 0.95;
        let mdp = env.to_mdp(gamma).unwrap();
        let vt = value_iteration(&mdp, 1e-12, 10_000).unwrap();
        // deterministic shortest path: V*(s) = gamma^(d-1)
        for s in 0..16 {
            let d = -env.potential_of(s);
            let expect = if d == 0.0 { 0.0 } else { gamma.powf(d - 1.0) };
            assert!((vt.v[s] - expect).abs() < 1e-9, "state {s}");
        }
        // greedy policy decreases distance everywhere off-goal
        let pol = greedy_policy(&vt);
        for s in 0..16 {
            if env.is_terminal(s) {
                continue;
            }
            let (s2, _, _) = env.step_index(s, pol[s]);
            assert_eq!(-env.potential_of(s2), -env.potential_of(s) - 1.0);
        }
    }

    #[test]
    fn env_trait_rollout_matches_indices() {
        let mut env = GridNav::new(3, 3).unwrap();
        let s0 = env.reset(0);
        let out = env.step(&s0, &[3.0]).unwrap();
        assert_eq!(out.state.q, vec![1.0, 0.0]);
        assert_eq!(out.state.t, 1);
        assert!(!out.terminal);
    }
}
