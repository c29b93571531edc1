//! Mechanical-energy models `E(q, q_dot) = T + U`, the energy potential
//! `Phi_energy = -E`, discrete energy-derivative diagnostics, and
//! controlled-error approximate models.
//!
//! The energy datum is chosen per environment so `min U = 0`; shaping is
//! invariant to additive constants, so any datum would do, but a zero minimum
//! keeps clipping symmetric.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::min_eigenvalue_symmetric;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComponentKind {
    /// Depends on velocities only; must be nonnegative.
    Kinetic,
    /// Depends on configuration only.
    Potential,
    /// Anything else (pseudo-energy terms, injected noise).
    Other,
}

/// One additive term of a mechanical-energy model, `(q, q_dot) -> energy`.
#[derive(Clone)]
pub struct EnergyComponent {
    pub name: &'static str,
    pub kind: ComponentKind,
    pub eval: Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>,
}

/// `E(q, q_dot)` as a sum of named components, with a characteristic scale
/// used to express the potential in dimensionless units.
#[derive(Clone)]
pub struct EnergyModel {
    pub components: Vec<EnergyComponent>,
    pub normalizer: f64,
    /// Closed-form gradient of the configuration-dependent part, for
    /// analytic-vs-numeric checks.
    pub grad_potential: Option<Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>>,
}

impl EnergyModel {
    pub fn new(components: Vec<EnergyComponent>, normalizer: f64) -> Self {
        Self {
            components,
            normalizer,
            grad_potential: None,
        }
    }

    pub fn total_energy(&self, q: &[f64], q_dot: &[f64]) -> Result<f64> {
        if q.iter().chain(q_dot).any(|x| !x.is_finite()) {
            return Err(Error::Numerical("non-finite state in energy evaluation".into()));
        }
        Ok(self
            .components
            .iter()
            .map(|c| (c.eval)(q, q_dot))
            .sum())
    }

    pub fn kinetic(&self, q: &[f64], q_dot: &[f64]) -> f64 {
        self.components
            .iter()
            .filter(|c| c.kind == ComponentKind::Kinetic)
            .map(|c| (c.eval)(q, q_dot))
            .sum()
    }

    pub fn potential_part(&self, q: &[f64], q_dot: &[f64]) -> f64 {
        self.components
            .iter()
            .filter(|c| c.kind == ComponentKind::Potential)
            .map(|c| (c.eval)(q, q_dot))
            .sum()
    }
}

/// `Phi_energy(s) = -E / normalizer`, clipped to `[-phi_max, phi_max]`.
pub fn energy_potential(model: &EnergyModel, q: &[f64], q_dot: &[f64], phi_max: f64) -> Result<f64> {
    let e = model.total_energy(q, q_dot)?;
    Ok((-e / model.normalizer).clamp(-phi_max, phi_max))
}

/// Finite-difference Hessian of `E` with respect to configuration `q` at
/// fixed velocities, returned row-major.
pub fn config_hessian(model: &EnergyModel, q: &[f64], q_dot: &[f64], h: f64) -> Result<Vec<f64>> {
    let d = q.len();
    let mut hess = vec![0.0; d * d];
    let e0 = model.total_energy(q, q_dot)?;
    let mut qp = q.to_vec();
    for i in 0..d {
        for j in 0..d {
            if i == j {
                qp.copy_from_slice(q);
                qp[i] = q[i] + h;
                let ep = model.total_energy(&qp, q_dot)?;
                qp[i] = q[i] - h;
                let em = model.total_energy(&qp, q_dot)?;
                hess[i * d + i] = (ep - 2.0 * e0 + em) / (h * h);
            } else {
                qp.copy_from_slice(q);
                qp[i] = q[i] + h;
                qp[j] = q[j] + h;
                let epp = model.total_energy(&qp, q_dot)?;
                qp[j] = q[j] - h;
                let epm = model.total_energy(&qp, q_dot)?;
                qp[i] = q[i] - h;
                let emm = model.total_energy(&qp, q_dot)?;
                qp[j] = q[j] + h;
                let emp = model.total_energy(&qp, q_dot)?;
                hess[i * d + j] = (epp - epm - emp + emm) / (4.0 * h * h);
            }
        }
    }
    Ok(hess)
}

/// Minimum eigenvalue of the finite-difference configuration Hessian; the
/// mechanical-stability hypothesis requires this to be positive at equilibria.
pub fn config_hessian_min_eig(model: &EnergyModel, q: &[f64], q_dot: &[f64], h: f64) -> Result<f64> {
    let hess = config_hessian(model, q, q_dot, h)?;
    Ok(min_eigenvalue_symmetric(&hess, q.len()))
}

/// Per-step energy bookkeeping along a trajectory.
///
/// `delta_phi[t]` is constructed as the bitwise negation of `delta_e[t]`, so
/// the sign identity holds exactly by construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyTrace {
    pub energy: Vec<f64>,
    pub delta_e: Vec<f64>,
    pub delta_phi: Vec<f64>,
    /// Analytic `Edot * dt` estimate per step, evaluated at the step start.
    pub edot_dt: Vec<f64>,
    /// Optional Lyapunov-candidate series for monotonicity diagnostics.
    pub lyapunov: Option<Vec<f64>>,
}

impl EnergyTrace {
    pub fn from_energies(energy: Vec<f64>, edot_dt: Vec<f64>) -> Result<Self> {
        if energy.len() < 2 {
            return Err(Error::InvalidArgument(
                "energy trace needs at least 2 samples".into(),
            ));
        }
        if edot_dt.len() != energy.len() - 1 {
            return Err(Error::DimensionMismatch(
                "edot_dt must have one entry per step".into(),
            ));
        }
        let delta_e: Vec<f64> = energy.windows(2).map(|w| w[1] - w[0]).collect();
        let delta_phi: Vec<f64> = delta_e.iter().map(|d| -d).collect();
        Ok(Self {
            energy,
            delta_e,
            delta_phi,
            edot_dt,
            lyapunov: None,
        })
    }

    pub fn with_lyapunov(mut self, lyapunov: Vec<f64>) -> Self {
        self.lyapunov = Some(lyapunov);
        self
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LyapunovReport {
    /// `max_t |dE[t] - Edot[t]*dt|`; expected O(dt^2) for smooth segments.
    pub max_discretization_residual: f64,
    /// Fraction of steps where sign(dPhi) = -sign(dE); 1.0 by construction.
    pub sign_agreement: f64,
    /// Fraction of steps with non-increasing Lyapunov candidate; `None` when
    /// no candidate is attached or the trace carries no energy variation.
    pub monotone_fraction: Option<f64>,
}

pub fn lyapunov_heuristic_check(trace: &EnergyTrace, _dt: f64) -> Result<LyapunovReport> {
    if trace.energy.len() < 2 {
        return Err(Error::InvalidArgument("trace shorter than 2 steps".into()));
    }
    let mut max_res: f64 = 0.0;
    for (de, edt) in trace.delta_e.iter().zip(&trace.edot_dt) {
        max_res = max_res.max((de - edt).abs());
    }
    let agree = trace
        .delta_e
        .iter()
        .zip(&trace.delta_phi)
        .filter(|(de, dp)| {
            (de.abs() == 0.0 && dp.abs() == 0.0) || de.signum() == -dp.signum()
        })
        .count();
    let sign_agreement = agree as f64 / trace.delta_e.len() as f64;

    let constant_energy = trace.delta_e.iter().all(|d| *d == 0.0);
    let monotone_fraction = match (&trace.lyapunov, constant_energy) {
        (Some(l), false) if l.len() >= 2 => {
            let non_inc = l.windows(2).filter(|w| w[1] <= w[0] + 1e-12).count();
            Some(non_inc as f64 / (l.len() - 1) as f64)
        }
        _ => None,
    };

    Ok(LyapunovReport {
        max_discretization_residual: max_res,
        sign_agreement,
        monotone_fraction,
    })
}

/// Deterministic per-state noise in `[-delta, delta]`, keyed on the state
/// bits so the perturbed model is still a function of state.
fn state_noise(q: &[f64], q_dot: &[f64], delta: f64, seed: u64) -> f64 {
    let mut h = seed ^ 0x9e37_79b9_7f4a_7c15;
    for x in q.iter().chain(q_dot) {
        h ^= x.to_bits();
        h = h.wrapping_mul(0xbf58_476d_1ce4_e5b9);
        h ^= h >> 29;
    }
    h ^= h >> 32;
    let unit = (h >> 11) as f64 / (1u64 << 53) as f64; // [0,1)
    (2.0 * unit - 1.0) * delta
}

/// Drops the named components and optionally injects bounded noise, yielding
/// a controlled-error approximate model.
pub fn approximate_model(
    model: &EnergyModel,
    omit: &[&str],
    noise_delta: f64,
    noise_seed: u64,
) -> Result<EnergyModel> {
    for name in omit {
        if !model.components.iter().any(|c| c.name == *name) {
            return Err(Error::InvalidArgument(format!(
                "cannot omit unknown component '{name}'"
            )));
        }
    }
    let mut components: Vec<EnergyComponent> = model
        .components
        .iter()
        .filter(|c| !omit.contains(&c.name))
        .cloned()
        .collect();
    if components.is_empty() {
        return Err(Error::InvalidArgument(
            "cannot omit every energy component".into(),
        ));
    }
    if noise_delta > 0.0 {
        components.push(EnergyComponent {
            name: "approximation-noise",
            kind: ComponentKind::Other,
            eval: Arc::new(move |q, q_dot| state_noise(q, q_dot, noise_delta, noise_seed)),
        });
    }
    Ok(EnergyModel {
        components,
        normalizer: model.normalizer,
        grad_potential: model.grad_potential.clone(),
    })
}

/// Sup-norm gap between two models' energies over sampled states, in model
/// units; dividing by `sup |E_complete|` gives the epsilon of the
/// performance bound.
pub fn approximation_error(
    complete: &EnergyModel,
    approx: &EnergyModel,
    states: &[(Vec<f64>, Vec<f64>)],
) -> Result<f64> {
    let mut sup: f64 = 0.0;
    for (q, q_dot) in states {
        let a = complete.total_energy(q, q_dot)?;
        let b = approx.total_energy(q, q_dot)?;
        sup = sup.max((a - b).abs());
    }
    Ok(sup)
}

/// Normalizers for the vehicle internal-energy terms.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct VehicleEnergyNormalizers {
    pub v_target: f64,
    pub r_typical: f64,
    pub r_ref: f64,
    pub v_ideal: f64,
}

impl VehicleEnergyNormalizers {
    pub fn validate(&self) -> Result<()> {
        if self.v_target <= 0.0 || self.r_typical <= 0.0 || self.r_ref <= 0.0 || self.v_ideal <= 0.0
        {
            return Err(Error::MissingConfig(
                "vehicle energy normalizers must be strictly positive".into(),
            ));
        }
        Ok(())
    }
}

/// Dimensionless vehicle internal energy: normalized linear and yaw kinetic
/// terms plus slip, yaw-rate-change, and speed-deviation terms with fixed
/// coefficients 2.0, 1.0, 0.5.
pub fn vehicle_internal_energy(
    v_x: f64,
    v_y: f64,
    yaw_rate: f64,
    sideslip: f64,
    prev_yaw_rate: f64,
    norm: &VehicleEnergyNormalizers,
) -> Result<f64> {
    norm.validate()?;
    let e_lin = (v_x * v_x + v_y * v_y) / (norm.v_target * norm.v_target);
    let e_ang = (yaw_rate * yaw_rate) / (norm.r_typical * norm.r_typical);
    let e_slip = 2.0 * sideslip * sideslip;
    let dr = yaw_rate - prev_yaw_rate;
    let e_dr = 1.0 * dr * dr / (norm.r_ref * norm.r_ref);
    let dv = (v_x - norm.v_ideal) / norm.v_ideal;
    let e_dv = 0.5 * dv * dv;
    Ok(e_lin + e_ang + e_slip + e_dr + e_dv)
}

// --- built-in models ---------------------------------------------------

/// Point-mass pendulum: `T = 1/2 m l^2 w^2`, `U = m g l (1 - cos theta)`.
pub fn pendulum_energy_model(mass: f64, gravity: f64, length: f64) -> EnergyModel {
    let kinetic = EnergyComponent {
        name: "rotational-kinetic",
        kind: ComponentKind::Kinetic,
        eval: Arc::new(move |_q, q_dot| 0.5 * mass * length * length * q_dot[0] * q_dot[0]),
    };
    let grav = EnergyComponent {
        name: "gravitational",
        kind: ComponentKind::Potential,
        eval: Arc::new(move |q, _| mass * gravity * length * (1.0 - q[0].cos())),
    };
    let mut model = EnergyModel::new(vec![kinetic, grav], mass * gravity * length * 2.0);
    model.grad_potential = Some(Arc::new(move |q| vec![mass * gravity * length * q[0].sin()]));
    model
}

/// Planar lander: `E = 1/2 m (vx^2 + vy^2) + 1/2 I w^2 + m g h`,
/// with `q = (x, y, theta)`, `q_dot = (vx, vy, w)`, altitude `h = y`.
pub fn lander_energy_model(mass: f64, inertia: f64, gravity: f64, altitude_scale: f64) -> EnergyModel {
    let lin = EnergyComponent {
        name: "linear-kinetic",
        kind: ComponentKind::Kinetic,
        eval: Arc::new(move |_q, q_dot| 0.5 * mass * (q_dot[0] * q_dot[0] + q_dot[1] * q_dot[1])),
    };
    let rot = EnergyComponent {
        name: "rotational-kinetic",
        kind: ComponentKind::Kinetic,
        eval: Arc::new(move |_q, q_dot| 0.5 * inertia * q_dot[2] * q_dot[2]),
    };
    let grav = EnergyComponent {
        name: "gravitational",
        kind: ComponentKind::Potential,
        eval: Arc::new(move |q, _| mass * gravity * q[1].max(0.0)),
    };
    let mut model = EnergyModel::new(vec![lin, rot, grav], mass * gravity * altitude_scale);
    model.grad_potential = Some(Arc::new(move |q| {
        vec![0.0, if q[1] > 0.0 { mass * gravity } else { 0.0 }, 0.0]
    }));
    model
}

/// Hopper analog: planar kinetic terms, gravitational term, and the posture
/// pseudo-energy `0.1 * sum theta_i^2` (not mechanical energy; kept as given
/// and flagged by its `Other` kind).
/// `q = (x, h, theta1, theta2, theta3)`, matching `q_dot` layout.
pub fn hopper_energy_model(mass: f64, inertia: f64, gravity: f64, height_scale: f64) -> EnergyModel {
    let lin = EnergyComponent {
        name: "linear-kinetic",
        kind: ComponentKind::Kinetic,
        eval: Arc::new(move |_q, q_dot| 0.5 * mass * (q_dot[0] * q_dot[0] + q_dot[1] * q_dot[1])),
    };
    let rot = EnergyComponent {
        name: "rotational-kinetic",
        kind: ComponentKind::Kinetic,
        eval: Arc::new(move |_q, q_dot| {
            0.5 * inertia * (q_dot[2] * q_dot[2] + q_dot[3] * q_dot[3] + q_dot[4] * q_dot[4])
        }),
    };
    let grav = EnergyComponent {
        name: "gravitational",
        kind: ComponentKind::Potential,
        eval: Arc::new(move |q, _| mass * gravity * q[1].max(0.0)),
    };
    let posture = EnergyComponent {
        name: "posture-pseudo-energy",
        kind: ComponentKind::Other,
        eval: Arc::new(|q, _| 0.1 * (q[2] * q[2] + q[3] * q[3] + q[4] * q[4])),
    };
    EnergyModel::new(vec![lin, rot, grav, posture], mass * gravity * height_scale)
}

/// Vehicle kinetic model over `q = (x, y, psi)`, `q_dot = (v_x, v_y, r)`:
/// the dominant terms `1/2 m (vx^2 + vy^2) + 1/2 I_z r^2`.
pub fn vehicle_energy_model(mass: f64, yaw_inertia: f64, v_target: f64) -> EnergyModel {
    let lin = EnergyComponent {
        name: "linear-kinetic",
        kind: ComponentKind::Kinetic,
        eval: Arc::new(move |_q, q_dot| 0.5 * mass * (q_dot[0] * q_dot[0] + q_dot[1] * q_dot[1])),
    };
    let yaw = EnergyComponent {
        name: "yaw-kinetic",
        kind: ComponentKind::Kinetic,
        eval: Arc::new(move |_q, q_dot| 0.5 * yaw_inertia * q_dot[2] * q_dot[2]),
    };
    EnergyModel::new(vec![lin, yaw], 0.5 * mass * v_target * v_target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pendulum_rest_energies() {
        let model = pendulum_energy_model(1.0, 9.81, 1.0);
        assert_eq!(model.total_energy(&[0.0], &[0.0]).unwrap(), 0.0);
        let inverted = model.total_energy(&[std::f64::consts::PI], &[0.0]).unwrap();
        assert!((inverted - 19.62).abs() < 1e-10);
        assert!(model.total_energy(&[f64::NAN], &[0.0]).is_err());
    }

    #[test]
    fn lander_zero_state() {
        let model = lander_energy_model(1.0, 0.2, 9.81, 5.0);
        assert_eq!(model.total_energy(&[0.0, 0.0, 0.1], &[0.0, 0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn energy_potential_definitional() {
        let model = pendulum_energy_model(1.0, 9.81, 1.0);
        let q = [1.2];
        let qd = [0.5];
        let e = model.total_energy(&q, &qd).unwrap();
        let phi = energy_potential(&model, &q, &qd, 1e9).unwrap();
        assert!((phi + e / model.normalizer).abs() < 1e-14);
        // zero-energy state maps to zero
        assert_eq!(energy_potential(&model, &[0.0], &[0.0], 1.0).unwrap(), 0.0);
        // clipping
        let clipped = energy_potential(&model, &[std::f64::consts::PI], &[10.0], 0.3).unwrap();
        assert_eq!(clipped, -0.3);
    }

    #[test]
    fn vehicle_internal_energy_hand_values() {
        let norm = VehicleEnergyNormalizers {
            v_target: 15.0,
            r_typical: 0.5,
            r_ref: 1.0,
            v_ideal: 15.0,
        };
        // beta = 0, r = r_prev = 0, v_x = v_ideal = v_target, v_y = 0
        let e = vehicle_internal_energy(15.0, 0.0, 0.0, 0.0, 0.0, &norm).unwrap();
        assert!((e - 1.0).abs() < 1e-12);
        // beta doubles -> slip term quadruples
        let base = vehicle_internal_energy(15.0, 0.0, 0.0, 0.1, 0.0, &norm).unwrap() - e;
        let doubled = vehicle_internal_energy(15.0, 0.0, 0.0, 0.2, 0.0, &norm).unwrap() - e;
        assert!((doubled / base - 4.0).abs() < 1e-9);
        // r == r_prev -> no rate-change term
        let with_r = vehicle_internal_energy(15.0, 0.0, 0.3, 0.0, 0.3, &norm).unwrap();
        let expect = 1.0 + 0.09 / 0.25;
        assert!((with_r - expect).abs() < 1e-12);
        let bad = VehicleEnergyNormalizers { v_target: 0.0, ..norm };
        assert!(vehicle_internal_energy(1.0, 0.0, 0.0, 0.0, 0.0, &bad).is_err());
    }

    #[test]
    fn kinetic_nonnegative_everywhere() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let models = [
            pendulum_energy_model(1.0, 9.81, 1.0),
            lander_energy_model(1.0, 0.2, 9.81, 5.0),
            hopper_energy_model(2.0, 0.1, 9.81, 1.0),
            vehicle_energy_model(2100.0, 4116.0, 15.0),
        ];
        for model in &models {
            for _ in 0..200 {
                let q: Vec<f64> = (0..5).map(|_| rng.gen_range(-3.0..3.0)).collect();
                let qd: Vec<f64> = (0..5).map(|_| rng.gen_range(-3.0..3.0)).collect();
                assert!(model.kinetic(&q, &qd) >= 0.0);
            }
        }
    }

    #[test]
    fn hessian_positive_at_stable_equilibria() {
        let pend = pendulum_energy_model(1.0, 9.81, 1.0);
        let eig = config_hessian_min_eig(&pend, &[0.0], &[0.0], 1e-4).unwrap();
        assert!(eig > 0.0, "pendulum-down Hessian eig {eig}");
        // inverted equilibrium is unstable: negative curvature
        let eig_up = config_hessian_min_eig(&pend, &[std::f64::consts::PI], &[0.0], 1e-4).unwrap();
        assert!(eig_up < 0.0);
    }

    #[test]
    fn analytic_vs_numeric_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let models = [
            pendulum_energy_model(1.3, 9.81, 0.8),
            lander_energy_model(1.0, 0.2, 9.81, 5.0),
        ];
        for model in &models {
            let grad = model.grad_potential.as_ref().unwrap();
            for _ in 0..100 {
                let dim = if model.components.len() == 2 { 1 } else { 3 };
                let q: Vec<f64> = (0..dim).map(|_| rng.gen_range(0.1..2.5)).collect();
                let qd = vec![0.0; dim];
                let g = grad(&q);
                let h = 1e-6;
                for i in 0..dim {
                    let mut qp = q.clone();
                    qp[i] += h;
                    let mut qm = q.clone();
                    qm[i] -= h;
                    let fd = (model.potential_part(&qp, &qd) - model.potential_part(&qm, &qd))
                        / (2.0 * h);
                    let denom = g[i].abs().max(1e-8);
                    assert!(
                        (fd - g[i]).abs() / denom < 1e-5,
                        "component {i}: fd {fd} vs analytic {}",
                        g[i]
                    );
                }
            }
        }
    }

    #[test]
    fn trace_sign_identity_and_constant_case() {
        let tr = EnergyTrace::from_energies(vec![1.0, 1.0, 1.0], vec![0.0, 0.0]).unwrap();
        let rep = lyapunov_heuristic_check(&tr, 0.01).unwrap();
        assert_eq!(rep.max_discretization_residual, 0.0);
        assert_eq!(rep.sign_agreement, 1.0);
        assert!(rep.monotone_fraction.is_none());

        let tr = EnergyTrace::from_energies(vec![2.0, 1.5, 1.8, 0.9], vec![-0.5, 0.3, -0.9])
            .unwrap()
            .with_lyapunov(vec![2.0, 1.5, 1.8, 0.9]);
        let rep = lyapunov_heuristic_check(&tr, 0.01).unwrap();
        assert_eq!(rep.sign_agreement, 1.0);
        // delta_phi is the exact bitwise negation
        for (dp, de) in tr.delta_phi.iter().zip(&tr.delta_e) {
            assert_eq!(dp.to_bits(), (-de).to_bits());
        }
        assert!((rep.monotone_fraction.unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!(EnergyTrace::from_energies(vec![1.0], vec![]).is_err());
    }

    #[test]
    fn approximate_model_contracts() {
        let model = lander_energy_model(1.0, 0.2, 9.81, 5.0);
        let same = approximate_model(&model, &[], 0.0, 0).unwrap();
        let mut states = Vec::new();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            states.push((
                (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect::<Vec<f64>>(),
                (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect::<Vec<f64>>(),
            ));
        }
        assert_eq!(approximation_error(&model, &same, &states).unwrap(), 0.0);

        let delta = 0.25;
        let noisy = approximate_model(&model, &[], delta, 42).unwrap();
        let gap = approximation_error(&model, &noisy, &states).unwrap();
        assert!(gap <= delta && gap > 0.0);

        let dropped = approximate_model(&model, &["rotational-kinetic"], 0.0, 0).unwrap();
        let gap = approximation_error(&model, &dropped, &states).unwrap();
        assert!(gap > 0.0);

        assert!(approximate_model(&model, &["no-such-term"], 0.0, 0).is_err());
        assert!(approximate_model(
            &model,
            &["linear-kinetic", "rotational-kinetic", "gravitational"],
            0.0,
            0
        )
        .is_err());
    }
}
