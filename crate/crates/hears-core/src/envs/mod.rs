//! In-house environments with deterministic, seedable dynamics.
//!
//! Every environment owns its RNG stream (seeded at reset) and is a pure
//! state machine otherwise: identical (seed, action sequence) pairs give
//! bit-identical trajectories.

pub mod gridnav;
pub mod hopper;
pub mod lander;
pub mod pendulum;
pub mod road;
pub mod vehicle;

pub use gridnav::GridNav;
pub use hopper::HopperLite;
pub use lander::Lander2D;
pub use pendulum::PendulumSwingUp;
pub use road::{generate_road, RoadProfile, SegmentSpec};
pub use vehicle::{tire_lateral_force, vehicle_base_reward, BicycleVehicle, VehicleParams};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Generalized state `(q, q_dot)` plus environment bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    pub q: Vec<f64>,
    pub q_dot: Vec<f64>,
    /// Contact flags, road state, cached previous commands.
    pub aux: Vec<f64>,
    pub t: u64,
}

impl EnvState {
    pub fn new(q: Vec<f64>, q_dot: Vec<f64>) -> Self {
        Self { q, q_dot, aux: Vec::new(), t: 0 }
    }

    pub fn check_finite(&self) -> Result<()> {
        let bad = self
            .q
            .iter()
            .chain(&self.q_dot)
            .chain(&self.aux)
            .any(|x| !x.is_finite());
        if bad {
            return Err(Error::Numerical(format!(
                "non-finite state at t={}: q={:?} q_dot={:?} aux={:?}",
                self.t, self.q, self.q_dot, self.aux
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StepOutcome {
    pub state: EnvState,
    pub base_reward: f64,
    pub terminal: bool,
    /// Set when the requested action had to be clipped into bounds.
    pub clipped: bool,
}

/// Common surface consumed by the learners and the harness.
pub trait Environment {
    fn reset(&mut self, seed: u64) -> EnvState;
    fn step(&mut self, state: &EnvState, action: &[f64]) -> Result<StepOutcome>;
    fn task_potential(&self, state: &EnvState) -> f64;
    /// Total internal energy `E(q, q_dot)` used by the energy potential.
    fn internal_energy(&self, state: &EnvState) -> f64;
    /// Feature vector fed to function approximators.
    fn observe(&self, state: &EnvState) -> Vec<f64>;
    fn action_dim(&self) -> usize;
    fn action_low(&self) -> Vec<f64>;
    fn action_high(&self) -> Vec<f64>;
    fn dt(&self) -> f64;
}

/// Wraps an angle to `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut a = theta % two_pi;
    if a <= -std::f64::consts::PI {
        a += two_pi;
    } else if a > std::f64::consts::PI {
        a -= two_pi;
    }
    a
}

/// Clips `action` into `[low, high]`; returns whether anything moved.
pub fn clip_action(action: &[f64], low: &[f64], high: &[f64]) -> Result<(Vec<f64>, bool)> {
    if action.len() != low.len() || action.len() != high.len() {
        return Err(Error::DimensionMismatch(format!(
            "action dim {} vs bounds dim {}",
            action.len(),
            low.len()
        )));
    }
    if action.iter().any(|a| !a.is_finite()) {
        return Err(Error::Numerical("non-finite action".into()));
    }
    let mut clipped = false;
    let out: Vec<f64> = action
        .iter()
        .zip(low.iter().zip(high))
        .map(|(a, (lo, hi))| {
            let c = a.clamp(*lo, *hi);
            if c != *a {
                clipped = true;
            }
            c
        })
        .collect();
    Ok((out, clipped))
}
