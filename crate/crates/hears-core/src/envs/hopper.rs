//! One-dimensional spring-mass hopper with three actuated joints.
//! q = (x, h, theta1, theta2, theta3), q_dot matching; the three actions are
//! joint torques: leg extension (thrust while in contact), hip drive
//! (forward force while in contact), and posture correction.

use crate::error::Result;

use super::{clip_action, EnvState, Environment, StepOutcome};

#[derive(Debug, Clone)]
pub struct HopperLite {
    pub mass: f64,
    pub joint_inertia: f64,
    pub gravity: f64,
    pub rest_height: f64,
    pub spring_k: f64,
    pub thrust_gain: f64,
    pub drive_gain: f64,
    pub posture_gain: f64,
    pub dt: f64,
    pub max_steps: u64,
    pub w_task: f64,
}

impl Default for HopperLite {
    fn default() -> Self {
        Self {
            mass: 2.0,
            joint_inertia: 0.1,
            gravity: 9.81,
            rest_height: 1.0,
            spring_k: 120.0,
            thrust_gain: 25.0,
            drive_gain: 8.0,
            posture_gain: 5.0,
            dt: 0.02,
            max_steps: 300,
            w_task: 0.5,
        }
    }
}

impl HopperLite {
    fn in_contact(&self, h: f64) -> bool {
        h <= self.rest_height
    }
}

impl Environment for HopperLite {
    fn reset(&mut self, _seed: u64) -> EnvState {
        // start at the spring equilibrium so the uncontrolled state is a
        // fixed point
        let h0 = self.rest_height - self.mass * self.gravity / self.spring_k;
        EnvState::new(vec![0.0, h0, 0.0, 0.0, 0.0], vec![0.0, 0.0, 0.0, 0.0, 0.0])
    }

    fn step(&mut self, state: &EnvState, action: &[f64]) -> Result<StepOutcome> {
        state.check_finite()?;
        let (a, clipped) = clip_action(action, &self.action_low(), &self.action_high())?;
        let (x, h) = (state.q[0], state.q[1]);
        let contact = self.in_contact(h) as u8 as f64;

        // vertical: spring leg plus actuated extension while grounded
        let spring = self.spring_k * (self.rest_height - h).max(0.0);
        let ah = (spring + self.thrust_gain * a[0] * contact) / self.mass - self.gravity;
        // horizontal: hip drive while grounded, mild ground drag
        let ax = (self.drive_gain * a[1] * contact - 0.8 * state.q_dot[0] * contact) / self.mass;
        // joints: damped second-order response to torques; a[2] splits across
        // the two passive posture joints
        let torques = [a[0], a[1], a[2]];
        let mut q_dot = vec![0.0; 5];
        let mut q = vec![0.0; 5];
        q_dot[0] = state.q_dot[0] + ax * self.dt;
        q_dot[1] = state.q_dot[1] + ah * self.dt;
        for j in 0..3 {
            let theta = state.q[2 + j];
            let omega = state.q_dot[2 + j];
            let alpha =
                (self.posture_gain * torques[j] - 8.0 * theta - 1.5 * omega) / self.joint_inertia;
            q_dot[2 + j] = omega + alpha * self.dt;
        }
        q[0] = x + q_dot[0] * self.dt;
        q[1] = (h + q_dot[1] * self.dt).max(0.0);
        for j in 0..3 {
            q[2 + j] = state.q[2 + j] + q_dot[2 + j] * self.dt;
        }

        let mut next = EnvState::new(q, q_dot);
        next.t = state.t + 1;
        next.check_finite()?;

        let fallen = next.q[1] < 0.3 * self.rest_height || next.q[2].abs() > 1.2;
        let control_cost = 0.01 * (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]);
        let reward = next.q_dot[0] + 0.5 - control_cost - if fallen { 10.0 } else { 0.0 };
        let terminal = fallen || next.t >= self.max_steps;
        Ok(StepOutcome { state: next, base_reward: reward, terminal, clipped })
    }

    fn task_potential(&self, state: &EnvState) -> f64 {
        self.w_task * state.q[0].max(0.0).sqrt()
    }

    fn internal_energy(&self, state: &EnvState) -> f64 {
        let kin_lin =
            0.5 * self.mass * (state.q_dot[0] * state.q_dot[0] + state.q_dot[1] * state.q_dot[1]);
        let kin_rot = 0.5
            * self.joint_inertia
            * (2..5).map(|j| state.q_dot[j] * state.q_dot[j]).sum::<f64>();
        let grav = self.mass * self.gravity * state.q[1].max(0.0);
        let posture = 0.1 * (2..5).map(|j| state.q[j] * state.q[j]).sum::<f64>();
        kin_lin + kin_rot + grav + posture
    }

    fn observe(&self, state: &EnvState) -> Vec<f64> {
        vec![
            state.q[1] / self.rest_height,
            state.q[2],
            state.q[3],
            state.q[4],
            state.q_dot[0] / 3.0,
            state.q_dot[1] / 3.0,
            state.q_dot[2],
            state.q_dot[3],
            state.q_dot[4],
        ]
    }

    fn action_dim(&self) -> usize {
        3
    }

    fn action_low(&self) -> Vec<f64> {
        vec![-1.0; 3]
    }

    fn action_high(&self) -> Vec<f64> {
        vec![1.0; 3]
    }

    fn dt(&self) -> f64 {
        self.dt
    }
}
