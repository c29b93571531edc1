//! Planar lander with main and lateral thrusters. State layout is the
//! 8-dim (x, y, v_x, v_y, theta, omega, c1, c2) vector split as
//! q = (x, y, theta), q_dot = (v_x, v_y, omega), aux = leg contacts.

use crate::error::Result;

use super::{clip_action, wrap_angle, EnvState, Environment, StepOutcome};

#[derive(Debug, Clone)]
pub struct Lander2D {
    pub mass: f64,
    pub inertia: f64,
    pub gravity: f64,
    pub main_thrust: f64,
    pub side_force: f64,
    pub side_torque: f64,
    pub dt: f64,
    pub max_steps: u64,
    pub w_task: f64,
    pub start_altitude: f64,
}

impl Default for Lander2D {
    fn default() -> Self {
        Self {
            mass: 1.0,
            inertia: 0.2,
            gravity: 1.62,
            main_thrust: 4.0,
            side_force: 0.4,
            side_torque: 0.8,
            dt: 0.02,
            max_steps: 400,
            w_task: 0.5,
            start_altitude: 5.0,
        }
    }
}

/// Hash-based deterministic unit sample in [-1, 1] per seed.
fn seed_offset(seed: u64) -> f64 {
    let mut h = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    h ^= h >> 31;
    h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
    h ^= h >> 29;
    2.0 * ((h >> 11) as f64 / (1u64 << 53) as f64) - 1.0
}

impl Lander2D {
    fn landed_softly(&self, s: &EnvState) -> bool {
        s.q[0].abs() < 0.5
            && s.q_dot[0].abs() < 0.5
            && s.q_dot[1].abs() < 1.0
            && s.q[2].abs() < 0.3
    }
}

impl Environment for Lander2D {
    fn reset(&mut self, seed: u64) -> EnvState {
        let mut s = EnvState::new(
            vec![seed_offset(seed), self.start_altitude, 0.0],
            vec![0.0, -0.5, 0.0],
        );
        s.aux = vec![0.0, 0.0];
        s
    }

    fn step(&mut self, state: &EnvState, action: &[f64]) -> Result<StepOutcome> {
        state.check_finite()?;
        let (a, clipped) = clip_action(action, &self.action_low(), &self.action_high())?;
        let theta = state.q[2];
        // body-up unit vector; main thruster pushes along it
        let (ux, uy) = (-theta.sin(), theta.cos());
        let f_main = self.main_thrust * a[0];
        let f_side = self.side_force * a[1];
        let ax = (f_main * ux + f_side * theta.cos()) / self.mass;
        let ay = (f_main * uy + f_side * theta.sin()) / self.mass - self.gravity;
        let alpha = self.side_torque * a[1] / self.inertia;

        // semi-implicit Euler
        let vx = state.q_dot[0] + ax * self.dt;
        let vy = state.q_dot[1] + ay * self.dt;
        let omega = state.q_dot[2] + alpha * self.dt;
        let x = state.q[0] + vx * self.dt;
        let y = state.q[1] + vy * self.dt;
        let th = wrap_angle(theta + omega * self.dt);

        let touched = y <= 0.0;
        let mut next = EnvState::new(vec![x, y.max(0.0), th], vec![vx, vy, omega]);
        next.aux = vec![touched as u8 as f64, touched as u8 as f64];
        next.t = state.t + 1;
        next.check_finite()?;

        let fuel = 0.3 * a[0].abs() + 0.03 * a[1].abs();
        let mut reward = -fuel;
        let mut terminal = next.t >= self.max_steps;
        if touched {
            terminal = true;
            reward += if self.landed_softly(&next) { 100.0 } else { -100.0 };
        } else if x.abs() > 10.0 || y > 4.0 * self.start_altitude {
            terminal = true;
            reward += -100.0;
        }
        Ok(StepOutcome { state: next, base_reward: reward, terminal, clipped })
    }

    fn task_potential(&self, state: &EnvState) -> f64 {
        let (x, y, theta) = (state.q[0], state.q[1], state.q[2]);
        -self.w_task * ((x * x + y * y).sqrt() + 0.5 * theta.abs())
    }

    fn internal_energy(&self, state: &EnvState) -> f64 {
        let (vx, vy, omega) = (state.q_dot[0], state.q_dot[1], state.q_dot[2]);
        0.5 * self.mass * (vx * vx + vy * vy)
            + 0.5 * self.inertia * omega * omega
            + self.mass * self.gravity * state.q[1].max(0.0)
    }

    fn observe(&self, state: &EnvState) -> Vec<f64> {
        vec![
            state.q[0] / 5.0,
            state.q[1] / self.start_altitude,
            state.q_dot[0] / 5.0,
            state.q_dot[1] / 5.0,
            state.q[2],
            state.q_dot[2],
            state.aux.first().copied().unwrap_or(0.0),
            state.aux.get(1).copied().unwrap_or(0.0),
        ]
    }

    fn action_dim(&self) -> usize {
        2
    }

    fn action_low(&self) -> Vec<f64> {
        vec![0.0, -1.0]
    }

    fn action_high(&self) -> Vec<f64> {
        vec![1.0, 1.0]
    }

    fn dt(&self) -> f64 {
        self.dt
    }
}
