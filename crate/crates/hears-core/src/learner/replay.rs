//! Seeded ring-buffer experience replay. Sampling is a pure function of the
//! seed and the insertion order.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shaping::shaped_reward;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Transition {
    pub obs: Vec<f64>,
    pub action: Vec<f64>,
    pub base_reward: f64,
    pub shaped_reward: f64,
    pub phi_s: f64,
    pub phi_next: f64,
    pub energy_a: f64,
    pub obs_next: Vec<f64>,
    pub terminal: bool,
}

#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    gamma: f64,
    lambda: f64,
    entries: Vec<Transition>,
    cursor: usize,
    rng: ChaCha8Rng,
}

impl ReplayBuffer {
    pub fn new(capacity: usize, gamma: f64, lambda: f64, seed: u64) -> Result<Self> {
        if capacity == 0 {
            return Err(Error::InvalidArgument("replay capacity must be positive".into()));
        }
        Ok(Self {
            capacity,
            gamma,
            lambda,
            entries: Vec::with_capacity(capacity),
            cursor: 0,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Inserts a transition; the cached shaped reward must equal the shaping
    /// formula recomputed from the cached potentials, bit for bit.
    pub fn push(&mut self, tr: Transition) -> Result<()> {
        let recomputed = shaped_reward(
            tr.base_reward,
            tr.phi_s,
            tr.phi_next,
            tr.energy_a,
            self.gamma,
            self.lambda,
        );
        if recomputed.to_bits() != tr.shaped_reward.to_bits() {
            return Err(Error::InvalidArgument(format!(
                "stored shaped reward {} disagrees with recomputation {}",
                tr.shaped_reward, recomputed
            )));
        }
        if self.entries.len() < self.capacity {
            self.entries.push(tr);
        } else {
            self.entries[self.cursor] = tr;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
        Ok(())
    }

    /// Uniform-with-replacement minibatch of indices.
    pub fn sample_indices(&mut self, batch: usize) -> Result<Vec<usize>> {
        if self.entries.is_empty() {
            return Err(Error::InvalidArgument("cannot sample an empty buffer".into()));
        }
        Ok((0..batch).map(|_| self.rng.gen_range(0..self.entries.len())).collect())
    }

    pub fn get(&self, idx: usize) -> &Transition {
        &self.entries[idx]
    }
}
