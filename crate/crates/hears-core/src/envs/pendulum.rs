//! Torque-limited pendulum swing-up. Angle is measured from upright, so the
//! goal state is `theta = 0` and rest-at-bottom is `theta = pi`.
//!
//! The free dynamics are integrated with a 4th-order Yoshida composition of
//! velocity-Verlet substeps: symplectic, with energy error well below the
//! 1e-4 budget of the conservation oracle at dt = 0.01.

use crate::error::Result;

use super::{clip_action, wrap_angle, EnvState, Environment, StepOutcome};

#[derive(Debug, Clone)]
pub struct PendulumSwingUp {
    pub mass: f64,
    pub gravity: f64,
    pub length: f64,
    pub damping: f64,
    pub max_torque: f64,
    pub max_speed: f64,
    pub dt: f64,
    pub max_steps: u64,
    pub w_task: f64,
}

impl Default for PendulumSwingUp {
    fn default() -> Self {
        Self {
            mass: 1.0,
            gravity: 9.81,
            length: 1.0,
            damping: 0.0,
            max_torque: 2.0,
            max_speed: 8.0,
            dt: 0.02,
            max_steps: 200,
            w_task: 1.0,
        }
    }
}

impl PendulumSwingUp {
    fn accel(&self, theta: f64, omega: f64, torque: f64) -> f64 {
        let ml2 = self.mass * self.length * self.length;
        // snap the 1e-16 residue of sin at the representable pi so both
        // equilibria are exact fixed points
        let s = theta.sin();
        let s = if s.abs() < 1e-12 { 0.0 } else { s };
        (self.gravity / self.length) * s + torque / ml2 - self.damping * omega / ml2
    }

    fn verlet(&self, theta: f64, omega: f64, torque: f64, h: f64) -> (f64, f64) {
        let a0 = self.accel(theta, omega, torque);
        let theta1 = theta + omega * h + 0.5 * a0 * h * h;
        let a1 = self.accel(theta1, omega, torque);
        let omega1 = omega + 0.5 * (a0 + a1) * h;
        (theta1, omega1)
    }

    /// One step of the (possibly forced) dynamics: Yoshida's 4th-order
    /// composition of three Verlet substeps.
    pub fn integrate(&self, theta: f64, omega: f64, torque: f64) -> (f64, f64) {
        let cbrt2 = 2f64.cbrt();
        let w1 = 1.0 / (2.0 - cbrt2);
        let w0 = -cbrt2 / (2.0 - cbrt2);
        let (t1, o1) = self.verlet(theta, omega, torque, w1 * self.dt);
        let (t2, o2) = self.verlet(t1, o1, torque, w0 * self.dt);
        self.verlet(t2, o2, torque, w1 * self.dt)
    }

    pub fn energy(&self, theta: f64, omega: f64) -> f64 {
        let t = 0.5 * self.mass * self.length * self.length * omega * omega;
        let u = self.mass * self.gravity * self.length * (1.0 + theta.cos());
        t + u
    }
}

impl Environment for PendulumSwingUp {
    fn reset(&mut self, _seed: u64) -> EnvState {
        EnvState::new(vec![std::f64::consts::PI], vec![0.0])
    }

    fn step(&mut self, state: &EnvState, action: &[f64]) -> Result<StepOutcome> {
        state.check_finite()?;
        let (a, clipped) = clip_action(action, &self.action_low(), &self.action_high())?;
        let theta = state.q[0];
        let omega = state.q_dot[0];
        let (theta1, omega1) = self.integrate(theta, omega, a[0]);
        let omega1 = omega1.clamp(-self.max_speed, self.max_speed);
        let mut next = EnvState::new(vec![wrap_angle(theta1)], vec![omega1]);
        next.t = state.t + 1;
        next.check_finite()?;
        let th = wrap_angle(theta1);
        let base_reward = -(th * th + 0.1 * omega1 * omega1 + 0.001 * a[0] * a[0]);
        let terminal = next.t >= self.max_steps;
        Ok(StepOutcome { state: next, base_reward, terminal, clipped })
    }

    fn task_potential(&self, state: &EnvState) -> f64 {
        -self.w_task * (1.0 - state.q[0].cos())
    }

    fn internal_energy(&self, state: &EnvState) -> f64 {
        self.energy(state.q[0], state.q_dot[0])
    }

    fn observe(&self, state: &EnvState) -> Vec<f64> {
        vec![state.q[0].cos(), state.q[0].sin(), state.q_dot[0] / self.max_speed]
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn action_low(&self) -> Vec<f64> {
        vec![-self.max_torque]
    }

    fn action_high(&self) -> Vec<f64> {
        vec![self.max_torque]
    }

    fn dt(&self) -> f64 {
        self.dt
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bottom_equilibrium_is_fixed_point() {
        let mut env = PendulumSwingUp::default();
        let s0 = env.reset(0);
        let out = env.step(&s0, &[0.0]).unwrap();
        assert_eq!(out.state.q[0], s0.q[0]);
        assert_eq!(out.state.q_dot[0], 0.0);
        assert_eq!(out.state.t, 1);
        assert!(!out.clipped);
    }

    #[test]
    fn task_potential_extremes() {
        let env = PendulumSwingUp::default();
        let up = EnvState::new(vec![0.0], vec![0.0]);
        let down = EnvState::new(vec![std::f64::consts::PI], vec![0.0]);
        assert_eq!(env.task_potential(&up), 0.0);
        assert!((env.task_potential(&down) + 2.0).abs() < 1e-12);
    }

    #[test]
    fn energy_extremes() {
        let env = PendulumSwingUp::default();
        let down = EnvState::new(vec![std::f64::consts::PI], vec![0.0]);
        let up = EnvState::new(vec![0.0], vec![0.0]);
        assert!(env.internal_energy(&down).abs() < 1e-12);
        assert!((env.internal_energy(&up) - 19.62).abs() < 1e-10);
    }

    #[test]
    fn free_swing_energy_drift_small() {
        // conservation oracle setup: frictionless, uncontrolled, dt = 0.01
        let env = PendulumSwingUp { dt: 0.01, ..Default::default() };
        let mut theta = 2.5;
        let mut omega = 0.0;
        let e0 = env.energy(theta, omega);
        let mut worst: f64 = 0.0;
        for _ in 0..10_000 {
            let (t1, w1) = env.integrate(theta, omega, 0.0);
            theta = t1;
            omega = w1;
            worst = worst.max((env.energy(theta, omega) - e0).abs() / e0);
        }
        assert!(worst <= 1e-4, "relative drift {worst}");
    }

    #[test]
    fn torque_clipping_flagged() {
        let mut env = PendulumSwingUp::default();
        let s0 = env.reset(0);
        let out = env.step(&s0, &[100.0]).unwrap();
        assert!(out.clipped);
        // clipped to +2: symmetric response vs -2
        let out_neg = env.step(&s0, &[-100.0]).unwrap();
        assert!((out.state.q_dot[0] + out_neg.state.q_dot[0]).abs() < 1e-12);
    }

    #[test]
    fn determinism() {
        let mut env = PendulumSwingUp::default();
        let mut s = env.reset(7);
        let mut s2 = env.reset(7);
        for k in 0..50 {
            let a = [((k as f64) * 0.37).sin() * 2.0];
            s = env.step(&s, &a).unwrap().state;
            s2 = env.step(&s2, &a).unwrap().state;
        }
        assert_eq!(s, s2);
    }
}
