//! Finite-horizon tracking MPC: condensed projected gradient over the input
//! sequence with box and rate constraints, plus the 2-DOF vehicle
//! linearization it runs on.
//!
//! The feasibility ratio counts prediction steps whose inputs sit strictly
//! inside every box and rate constraint; saturated steps mark the reference
//! as locally unreachable and feed the cooperation reward.

use serde::{Deserialize, Serialize};

use crate::envs::vehicle::{VehicleParams, CORNERING_STIFFNESS};
use crate::error::{Error, Result};
use crate::linalg::{expm, identity, matvec, min_eigenvalue_symmetric, solve_dense};

/// Discrete or continuous linear system `x' = A x + B u`, `y = C x`,
/// row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearModel {
    pub n_x: usize,
    pub n_u: usize,
    pub n_y: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl LinearModel {
    pub fn validate(&self) -> Result<()> {
        if self.a.len() != self.n_x * self.n_x
            || self.b.len() != self.n_x * self.n_u
            || self.c.len() != self.n_y * self.n_x
        {
            return Err(Error::DimensionMismatch("linear model matrix shapes".into()));
        }
        Ok(())
    }

    fn step(&self, x: &[f64], u: &[f64], out: &mut [f64]) {
        for i in 0..self.n_x {
            let mut acc = 0.0;
            for j in 0..self.n_x {
                acc += self.a[i * self.n_x + j] * x[j];
            }
            for j in 0..self.n_u {
                acc += self.b[i * self.n_u + j] * u[j];
            }
            out[i] = acc;
        }
    }

    fn output(&self, x: &[f64], out: &mut [f64]) {
        matvec(&self.c, self.n_y, self.n_x, x, out);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Discretization {
    MatrixExponential,
    Bilinear,
}

/// Zero-order-hold (or bilinear) discretization of a continuous model.
pub fn discretize(cont: &LinearModel, dt: f64, method: Discretization) -> Result<LinearModel> {
    cont.validate()?;
    let n = cont.n_x;
    let m = cont.n_u;
    let (ad, bd) = match method {
        Discretization::MatrixExponential => {
            // exp of the augmented [[A, B], [0, 0]] block matrix
            let d = n + m;
            let mut aug = vec![0.0; d * d];
            for i in 0..n {
                for j in 0..n {
                    aug[i * d + j] = cont.a[i * n + j] * dt;
                }
                for j in 0..m {
                    aug[i * d + n + j] = cont.b[i * m + j] * dt;
                }
            }
            let e = expm(&aug, d);
            let mut ad = vec![0.0; n * n];
            let mut bd = vec![0.0; n * m];
            for i in 0..n {
                for j in 0..n {
                    ad[i * n + j] = e[i * d + j];
                }
                for j in 0..m {
                    bd[i * m + j] = e[i * d + n + j];
                }
            }
            (ad, bd)
        }
        Discretization::Bilinear => {
            // Ad = (I - A dt/2)^-1 (I + A dt/2), Bd = (I - A dt/2)^-1 B dt
            let mut plus = identity(n);
            let mut minus = identity(n);
            for i in 0..n * n {
                plus[i] += 0.5 * dt * cont.a[i];
                minus[i] -= 0.5 * dt * cont.a[i];
            }
            let mut ad = vec![0.0; n * n];
            let mut bd = vec![0.0; n * m];
            for col in 0..n {
                let mut lhs = minus.clone();
                let mut rhs: Vec<f64> = (0..n).map(|i| plus[i * n + col]).collect();
                let x = solve_dense(&mut lhs, &mut rhs, n)
                    .ok_or_else(|| Error::Numerical("singular bilinear factor".into()))?;
                for i in 0..n {
                    ad[i * n + col] = x[i];
                }
            }
            for col in 0..m {
                let mut lhs = minus.clone();
                let mut rhs: Vec<f64> = (0..n).map(|i| cont.b[i * m + col] * dt).collect();
                let x = solve_dense(&mut lhs, &mut rhs, n)
                    .ok_or_else(|| Error::Numerical("singular bilinear factor".into()))?;
                for i in 0..n {
                    bd[i * m + col] = x[i];
                }
            }
            (ad, bd)
        }
    };
    Ok(LinearModel { n_x: n, n_u: m, n_y: cont.n_y, a: ad, b: bd, c: cont.c.clone() })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub v_x: f64,
    pub mu: f64,
    /// Slip angles the tire slope is evaluated at; 0 is the linear region.
    pub alpha_f: f64,
    pub alpha_r: f64,
}

impl OperatingPoint {
    pub fn cruise(v_x: f64) -> Self {
        Self { v_x, mu: 1.0, alpha_f: 0.0, alpha_r: 0.0 }
    }
}

fn local_stiffness(alpha: f64, normal_load: f64, mu: f64) -> f64 {
    // d/dalpha of mu Fz tanh(C alpha / (mu Fz))
    let cap = mu * normal_load;
    let t = (CORNERING_STIFFNESS * alpha / cap).tanh();
    CORNERING_STIFFNESS * (1.0 - t * t)
}

/// Continuous 2-state lateral model (v_y, r) with inputs (delta, M_z) and
/// outputs (r, beta).
pub fn linearize_vehicle(params: &VehicleParams, op: &OperatingPoint) -> Result<LinearModel> {
    params.validate()?;
    if op.v_x <= 0.5 {
        return Err(Error::InvalidArgument(format!(
            "v_x = {} below the 0.5 m/s linearization guard",
            op.v_x
        )));
    }
    let (f_zf, f_zr) = params.axle_loads();
    let cf = local_stiffness(op.alpha_f, f_zf, op.mu);
    let cr = local_stiffness(op.alpha_r, f_zr, op.mu);
    let (m, iz, a, b, vx) = (params.m, params.i_z, params.a, params.b, op.v_x);
    let a_mat = vec![
        -(cf + cr) / (m * vx),
        -(a * cf - b * cr) / (m * vx) - vx,
        -(a * cf - b * cr) / (iz * vx),
        -(a * a * cf + b * b * cr) / (iz * vx),
    ];
    let b_mat = vec![cf / m, 0.0, a * cf / iz, 1.0 / iz];
    let c_mat = vec![0.0, 1.0, 1.0 / vx, 0.0];
    Ok(LinearModel { n_x: 2, n_u: 2, n_y: 2, a: a_mat, b: b_mat, c: c_mat })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MpcProblem {
    pub model: LinearModel,
    pub n_p: usize,
    pub n_c: usize,
    /// Stage output-error weight, `n_y x n_y` PSD.
    pub q: Vec<f64>,
    /// Input-rate weight, `n_u x n_u` PSD.
    pub r: Vec<f64>,
    pub u_min: Vec<f64>,
    pub u_max: Vec<f64>,
    pub du_max: Vec<f64>,
    /// Input applied at the previous control period; anchors the first rate
    /// constraint.
    pub u_prev: Vec<f64>,
    pub max_iters: usize,
    pub tol: f64,
}

impl MpcProblem {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        let nu = self.model.n_u;
        let ny = self.model.n_y;
        if self.n_c == 0 || self.n_c > self.n_p {
            return Err(Error::InvalidArgument("require 1 <= N_c <= N_p".into()));
        }
        if self.q.len() != ny * ny || self.r.len() != nu * nu {
            return Err(Error::DimensionMismatch("weight matrix shapes".into()));
        }
        if min_eigenvalue_symmetric(&self.q, ny) < -1e-9
            || min_eigenvalue_symmetric(&self.r, nu) < -1e-9
        {
            return Err(Error::InvalidArgument("weights must be PSD".into()));
        }
        if self.u_min.len() != nu
            || self.u_max.len() != nu
            || self.du_max.len() != nu
            || self.u_prev.len() != nu
        {
            return Err(Error::DimensionMismatch("bound vector shapes".into()));
        }
        if self.u_min.iter().zip(&self.u_max).any(|(lo, hi)| lo >= hi) {
            return Err(Error::InvalidArgument("need u_min < u_max elementwise".into()));
        }
        if self.du_max.iter().any(|d| *d <= 0.0) {
            return Err(Error::InvalidArgument("rate bounds must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MpcReport {
    pub u0: Vec<f64>,
    pub inputs: Vec<Vec<f64>>,
    /// Predicted outputs y_1..y_Np under the returned input sequence.
    pub predicted: Vec<Vec<f64>>,
    pub feasibility: f64,
    pub iterations: usize,
    pub converged: bool,
    pub cost: f64,
}

const ACTIVE_TOL: f64 = 1e-9;

struct Condensed {
    /// `(N_p n_y) x (N_c n_u)` map from stacked inputs to stacked outputs.
    h: Vec<f64>,
    /// Output response to x0 with zero input, stacked.
    y_free: Vec<f64>,
    n_dec: usize,
    n_out: usize,
}

fn condense(p: &MpcProblem, x0: &[f64]) -> Condensed {
    let nu = p.model.n_u;
    let ny = p.model.n_y;
    let n_dec = p.n_c * nu;
    let n_out = p.n_p * ny;
    let mut h = vec![0.0; n_out * n_dec];
    let mut y_free = vec![0.0; n_out];

    let simulate = |x_start: &[f64], z: Option<usize>, out: &mut [f64]| {
        let mut x = x_start.to_vec();
        let mut xn = vec![0.0; p.model.n_x];
        let mut y = vec![0.0; ny];
        for k in 0..p.n_p {
            let step_ctrl = k.min(p.n_c - 1);
            let mut u = vec![0.0; nu];
            if let Some(j) = z {
                if j / nu == step_ctrl {
                    u[j % nu] = 1.0;
                }
            }
            p.model.step(&x, &u, &mut xn);
            std::mem::swap(&mut x, &mut xn);
            p.model.output(&x, &mut y);
            out[k * ny..(k + 1) * ny].copy_from_slice(&y);
        }
    };

    simulate(x0, None, &mut y_free);
    let zero_x = vec![0.0; p.model.n_x];
    let mut col = vec![0.0; n_out];
    for j in 0..n_dec {
        simulate(&zero_x, Some(j), &mut col);
        for i in 0..n_out {
            h[i * n_dec + j] = col[i];
        }
    }
    Condensed { h, y_free, n_dec, n_out }
}

/// Clamp into the box, then forward-clamp rates starting from `u_prev`;
/// the result satisfies every input and rate constraint.
fn project(p: &MpcProblem, z: &mut [f64]) {
    let nu = p.model.n_u;
    let mut prev = p.u_prev.clone();
    for k in 0..p.n_c {
        for i in 0..nu {
            let lo = p.u_min[i].max(prev[i] - p.du_max[i]);
            let hi = p.u_max[i].min(prev[i] + p.du_max[i]);
            z[k * nu + i] = z[k * nu + i].clamp(lo, hi);
        }
        prev.copy_from_slice(&z[k * nu..(k + 1) * nu]);
    }
}

fn apply_block_diag(w: &[f64], d: usize, v: &[f64], out: &mut [f64]) {
    let blocks = v.len() / d;
    for b in 0..blocks {
        for i in 0..d {
            let mut acc = 0.0;
            for j in 0..d {
                acc += w[i * d + j] * v[b * d + j];
            }
            out[b * d + i] = acc;
        }
    }
}

fn rate_sequence(p: &MpcProblem, z: &[f64], out: &mut [f64]) {
    let nu = p.model.n_u;
    for k in 0..p.n_c {
        for i in 0..nu {
            let prev = if k == 0 { p.u_prev[i] } else { z[(k - 1) * nu + i] };
            out[k * nu + i] = z[k * nu + i] - prev;
        }
    }
}

fn cost_and_grad(
    p: &MpcProblem,
    c: &Condensed,
    z: &[f64],
    y_ref: &[f64],
    grad: Option<&mut [f64]>,
) -> f64 {
    let nu = p.model.n_u;
    let ny = p.model.n_y;
    // output residual
    let mut y = c.y_free.clone();
    for i in 0..c.n_out {
        for j in 0..c.n_dec {
            y[i] += c.h[i * c.n_dec + j] * z[j];
        }
    }
    let mut res = vec![0.0; c.n_out];
    for i in 0..c.n_out {
        res[i] = y[i] - y_ref[i];
    }
    let mut qres = vec![0.0; c.n_out];
    apply_block_diag(&p.q, ny, &res, &mut qres);
    let mut cost: f64 = res.iter().zip(&qres).map(|(a, b)| a * b).sum();

    let mut du = vec![0.0; c.n_dec];
    rate_sequence(p, z, &mut du);
    let mut rdu = vec![0.0; c.n_dec];
    apply_block_diag(&p.r, nu, &du, &mut rdu);
    cost += du.iter().zip(&rdu).map(|(a, b)| a * b).sum::<f64>();

    if let Some(g) = grad {
        for j in 0..c.n_dec {
            let mut acc = 0.0;
            for i in 0..c.n_out {
                acc += c.h[i * c.n_dec + j] * qres[i];
            }
            g[j] = 2.0 * acc;
        }
        // D^T R (Dz - e): difference operator transpose
        for k in 0..p.n_c {
            for i in 0..nu {
                let mut acc = rdu[k * nu + i];
                if k + 1 < p.n_c {
                    acc -= rdu[(k + 1) * nu + i];
                }
                g[k * nu + i] += 2.0 * acc;
            }
        }
    }
    cost
}

fn lipschitz_estimate(p: &MpcProblem, c: &Condensed) -> f64 {
    // power iteration on z -> H^T Qbar H z + D^T Rbar D z
    let nu = p.model.n_u;
    let ny = p.model.n_y;
    let mut v = vec![1.0; c.n_dec];
    v[0] += 0.5;
    let mut lam = 1.0;
    for _ in 0..60 {
        let mut hv = vec![0.0; c.n_out];
        for i in 0..c.n_out {
            for j in 0..c.n_dec {
                hv[i] += c.h[i * c.n_dec + j] * v[j];
            }
        }
        let mut qhv = vec![0.0; c.n_out];
        apply_block_diag(&p.q, ny, &hv, &mut qhv);
        let mut w = vec![0.0; c.n_dec];
        for j in 0..c.n_dec {
            for i in 0..c.n_out {
                w[j] += c.h[i * c.n_dec + j] * qhv[i];
            }
        }
        // rate part with u_prev = 0 (homogeneous operator)
        let mut du = vec![0.0; c.n_dec];
        for k in 0..p.n_c {
            for i in 0..nu {
                let prev = if k == 0 { 0.0 } else { v[(k - 1) * nu + i] };
                du[k * nu + i] = v[k * nu + i] - prev;
            }
        }
        let mut rdu = vec![0.0; c.n_dec];
        apply_block_diag(&p.r, nu, &du, &mut rdu);
        for k in 0..p.n_c {
            for i in 0..nu {
                let mut acc = rdu[k * nu + i];
                if k + 1 < p.n_c {
                    acc -= rdu[(k + 1) * nu + i];
                }
                w[k * nu + i] += acc;
            }
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-30 {
            return 1.0;
        }
        for j in 0..c.n_dec {
            v[j] = w[j] / norm;
        }
        lam = norm;
    }
    2.0 * lam
}

pub fn solve(p: &MpcProblem, x0: &[f64], y_ref: &[Vec<f64>]) -> Result<MpcReport> {
    p.validate()?;
    if x0.len() != p.model.n_x {
        return Err(Error::DimensionMismatch("x0 length".into()));
    }
    if y_ref.len() < p.n_p {
        return Err(Error::InvalidArgument(format!(
            "reference length {} shorter than N_p = {}",
            y_ref.len(),
            p.n_p
        )));
    }
    let ny = p.model.n_y;
    let mut y_ref_flat = vec![0.0; p.n_p * ny];
    for k in 0..p.n_p {
        if y_ref[k].len() != ny {
            return Err(Error::DimensionMismatch("reference row length".into()));
        }
        y_ref_flat[k * ny..(k + 1) * ny].copy_from_slice(&y_ref[k]);
    }

    let c = condense(p, x0);
    let lip = lipschitz_estimate(p, &c).max(1e-12);
    let base_step = 1.0 / lip;

    let nu = p.model.n_u;
    // warm start: hold the previous input
    let mut z = vec![0.0; c.n_dec];
    for k in 0..p.n_c {
        z[k * nu..(k + 1) * nu].copy_from_slice(&p.u_prev);
    }
    project(p, &mut z);
    let mut grad = vec![0.0; c.n_dec];
    let mut cost = cost_and_grad(p, &c, &z, &y_ref_flat, Some(&mut grad));
    let mut converged = false;
    let mut iters = 0;

    for it in 0..p.max_iters {
        iters = it + 1;
        let mut step = base_step;
        let mut accepted = false;
        let mut cand = vec![0.0; c.n_dec];
        // backtracking keeps the iterate sequence monotone even though the
        // rate projection is inexact
        for _ in 0..40 {
            for j in 0..c.n_dec {
                cand[j] = z[j] - step * grad[j];
            }
            project(p, &mut cand);
            let cand_cost = cost_and_grad(p, &c, &cand, &y_ref_flat, None);
            if cand_cost <= cost + 1e-14 {
                let moved: f64 = cand
                    .iter()
                    .zip(&z)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                z.copy_from_slice(&cand);
                cost = cand_cost;
                accepted = true;
                if moved / base_step < p.tol {
                    converged = true;
                }
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            converged = true; // no descent direction remains at float precision
        }
        if converged {
            break;
        }
        cost = cost_and_grad(p, &c, &z, &y_ref_flat, Some(&mut grad));
    }

    // final bookkeeping: predicted outputs and per-step constraint activity
    let mut inputs = Vec::with_capacity(p.n_p);
    for k in 0..p.n_p {
        let kk = k.min(p.n_c - 1);
        inputs.push(z[kk * nu..(kk + 1) * nu].to_vec());
    }
    let mut predicted = Vec::with_capacity(p.n_p);
    {
        let mut x = x0.to_vec();
        let mut xn = vec![0.0; p.model.n_x];
        let mut y = vec![0.0; ny];
        for u in &inputs {
            p.model.step(&x, u, &mut xn);
            std::mem::swap(&mut x, &mut xn);
            p.model.output(&x, &mut y);
            predicted.push(y.clone());
        }
    }
    let mut free_steps = 0usize;
    for k in 0..p.n_p {
        let u = &inputs[k];
        let prev = if k == 0 { &p.u_prev } else { &inputs[k - 1] };
        let mut active = false;
        for i in 0..nu {
            if (u[i] - p.u_min[i]).abs() <= ACTIVE_TOL
                || (u[i] - p.u_max[i]).abs() <= ACTIVE_TOL
                || ((u[i] - prev[i]).abs() - p.du_max[i]).abs() <= ACTIVE_TOL
            {
                active = true;
                break;
            }
        }
        if !active {
            free_steps += 1;
        }
    }

    Ok(MpcReport {
        u0: inputs[0].clone(),
        inputs,
        predicted,
        feasibility: free_steps as f64 / p.n_p as f64,
        iterations: iters,
        converged,
        cost,
    })
}

/// Default tracking problem for the vehicle loop at the given operating
/// speed: N_p = 10, N_c = 5, dt = 0.02 s, matrix-exponential discretization.
pub fn vehicle_tracking_problem(params: &VehicleParams, v_x: f64, u_prev: &[f64]) -> Result<MpcProblem> {
    let cont = linearize_vehicle(params, &OperatingPoint::cruise(v_x))?;
    let model = discretize(&cont, 0.02, Discretization::MatrixExponential)?;
    Ok(MpcProblem {
        model,
        n_p: 10,
        n_c: 5,
        q: vec![5.0, 0.0, 0.0, 20.0],
        r: vec![2.0, 0.0, 0.0, 1e-8],
        u_min: vec![-0.5, -20_000.0],
        u_max: vec![0.5, 20_000.0],
        du_max: vec![0.1, 4000.0],
        u_prev: u_prev.to_vec(),
        max_iters: 200,
        tol: 1e-8,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::spectral_radius_2x2;

    fn scalar_problem(a: f64, b: f64, bounds: (f64, f64), du: f64, n_p: usize, n_c: usize) -> MpcProblem {
        MpcProblem {
            model: LinearModel { n_x: 1, n_u: 1, n_y: 1, a: vec![a], b: vec![b], c: vec![1.0] },
            n_p,
            n_c,
            q: vec![1.0],
            r: vec![0.0],
            u_min: vec![bounds.0],
            u_max: vec![bounds.1],
            du_max: vec![du],
            u_prev: vec![0.0],
            max_iters: 500,
            tol: 1e-10,
        }
    }

    #[test]
    fn already_tracking_gives_zero_input_full_feasibility() {
        let p = scalar_problem(1.0, 1.0, (-1.0, 1.0), 10.0, 5, 3);
        let rep = solve(&p, &[0.0], &vec![vec![0.0]; 5]).unwrap();
        assert!(rep.u0[0].abs() < 1e-9);
        assert_eq!(rep.feasibility, 1.0);
        assert!(rep.converged);
        assert!(rep.cost < 1e-15);
    }

    #[test]
    fn one_step_unconstrained_matches_least_squares() {
        // min (a x0 + b u - yref)^2 -> u* = (yref - a x0)/b
        let p = scalar_problem(0.7, 2.0, (-100.0, 100.0), 1000.0, 1, 1);
        let x0 = 0.3;
        let y_ref = 1.9;
        let rep = solve(&p, &[x0], &[vec![y_ref]]).unwrap();
        let expect = (y_ref - 0.7 * x0) / 2.0;
        assert!((rep.u0[0] - expect).abs() < 1e-8, "{} vs {expect}", rep.u0[0]);
    }

    #[test]
    fn unreachable_reference_saturates_every_step() {
        let p = scalar_problem(1.0, 1.0, (-0.01, 0.01), 1.0, 4, 2);
        let rep = solve(&p, &[0.0], &vec![vec![100.0]; 4]).unwrap();
        assert_eq!(rep.feasibility, 0.0);
        assert!((rep.u0[0] - 0.01).abs() < 1e-12);
    }

    #[test]
    fn solver_matches_brute_force_grid() {
        // 1-input, N_p = 3 with rate coupling; grid search over the box
        let p = MpcProblem {
            r: vec![0.3],
            ..scalar_problem(0.9, 1.0, (-1.0, 1.0), 0.6, 3, 3)
        };
        let x0 = [0.5];
        let y_ref = vec![vec![1.0], vec![-0.5], vec![0.2]];
        let rep = solve(&p, &x0, &y_ref).unwrap();

        let c = condense(&p, &x0);
        let flat: Vec<f64> = y_ref.iter().flatten().copied().collect();
        let mut best = f64::INFINITY;
        let n = 81;
        for i0 in 0..=n {
            for i1 in 0..=n {
                for i2 in 0..=n {
                    let mut z = vec![
                        -1.0 + 2.0 * i0 as f64 / n as f64,
                        -1.0 + 2.0 * i1 as f64 / n as f64,
                        -1.0 + 2.0 * i2 as f64 / n as f64,
                    ];
                    // only rate-feasible grid points compete
                    let mut prev = 0.0;
                    let mut ok = true;
                    for u in &mut z {
                        if (*u - prev).abs() > 0.6 + 1e-12 {
                            ok = false;
                            break;
                        }
                        prev = *u;
                    }
                    if !ok {
                        continue;
                    }
                    let cost = cost_and_grad(&p, &c, &z, &flat, None);
                    best = best.min(cost);
                }
            }
        }
        assert!(rep.cost <= best + 1e-6, "solver {} vs grid {best}", rep.cost);
    }

    #[test]
    fn iterates_respect_bounds_and_rates() {
        let p = MpcProblem {
            r: vec![0.1],
            ..scalar_problem(1.0, 0.5, (-0.4, 0.4), 0.15, 6, 4)
        };
        let rep = solve(&p, &[1.0], &vec![vec![-2.0]; 6]).unwrap();
        let mut prev = p.u_prev[0];
        for u in &rep.inputs[..p.n_c] {
            assert!(u[0] >= -0.4 - 1e-12 && u[0] <= 0.4 + 1e-12);
            assert!((u[0] - prev).abs() <= 0.15 + 1e-12);
            prev = u[0];
        }
    }

    #[test]
    fn cost_monotone_over_iterations() {
        // re-solve with increasing iteration caps; cost must not increase
        let mut prev_cost = f64::INFINITY;
        for iters in [1, 2, 5, 10, 50, 200] {
            let mut p = MpcProblem {
                r: vec![0.2],
                ..scalar_problem(0.95, 0.8, (-1.0, 1.0), 0.3, 5, 3)
            };
            p.max_iters = iters;
            let rep = solve(&p, &[0.8], &vec![vec![-0.6]; 5]).unwrap();
            assert!(rep.cost <= prev_cost + 1e-12);
            prev_cost = rep.cost;
        }
    }

    #[test]
    fn zero_stiffness_limit_reduces_dynamics() {
        // mu -> tiny saturates instantly at alpha != 0; instead evaluate the
        // slope at deep saturation where it vanishes
        let params = VehicleParams::default();
        let op = OperatingPoint { v_x: 15.0, mu: 0.1, alpha_f: 1.0, alpha_r: 1.0 };
        let m = linearize_vehicle(&params, &op).unwrap();
        // cf, cr ~ 0: A row 1 ~ [0, -vx]; r row ~ 0; B ~ [[0,0],[0,1/Iz]]
        assert!(m.a[0].abs() < 1e-6);
        assert!((m.a[1] + 15.0).abs() < 1e-4);
        assert!(m.a[2].abs() < 1e-6 && m.a[3].abs() < 1e-6);
        assert!(m.b[0].abs() < 1e-8);
        assert!((m.b[3] - 1.0 / params.i_z).abs() < 1e-15);
    }

    #[test]
    fn discretization_consistency_at_small_dt() {
        let params = VehicleParams::default();
        let cont = linearize_vehicle(&params, &OperatingPoint::cruise(15.0)).unwrap();
        for method in [Discretization::MatrixExponential, Discretization::Bilinear] {
            let dt = 1e-4;
            let disc = discretize(&cont, dt, method).unwrap();
            for i in 0..4 {
                let eye = if i % 3 == 0 { 1.0 } else { 0.0 };
                let approx = (disc.a[i] - eye) / dt;
                assert!(
                    (approx - cont.a[i]).abs() <= 1e-3 * cont.a[i].abs().max(1.0),
                    "{method:?} entry {i}: {approx} vs {}",
                    cont.a[i]
                );
            }
        }
    }

    #[test]
    fn table_parameters_give_stable_discrete_model() {
        let params = VehicleParams::default();
        let cont = linearize_vehicle(&params, &OperatingPoint::cruise(15.0)).unwrap();
        let disc = discretize(&cont, 0.02, Discretization::MatrixExponential).unwrap();
        let a: [f64; 4] = disc.a.clone().try_into().unwrap();
        let rho = spectral_radius_2x2(&a);
        assert!(rho < 1.0, "spectral radius {rho}");
    }

    #[test]
    fn low_speed_guard() {
        let params = VehicleParams::default();
        assert!(linearize_vehicle(&params, &OperatingPoint::cruise(0.3)).is_err());
    }

    #[test]
    fn validation_rejects_bad_problems() {
        let mut p = scalar_problem(1.0, 1.0, (-1.0, 1.0), 0.5, 3, 3);
        p.n_c = 4;
        assert!(p.validate().is_err());
        let mut p2 = scalar_problem(1.0, 1.0, (1.0, -1.0), 0.5, 3, 3);
        assert!(p2.validate().is_err());
        p2.u_min = vec![-1.0];
        p2.u_max = vec![1.0];
        p2.q = vec![-1.0];
        assert!(p2.validate().is_err());
    }

    #[test]
    fn feasibility_recomputation_agrees() {
        let p = MpcProblem {
            r: vec![0.05],
            ..scalar_problem(1.0, 0.5, (-0.3, 0.3), 0.1, 8, 4)
        };
        let rep = solve(&p, &[0.0], &vec![vec![3.0]; 8]).unwrap();
        // recompute activity independently
        let mut free = 0;
        for k in 0..p.n_p {
            let u = rep.inputs[k][0];
            let prev = if k == 0 { 0.0 } else { rep.inputs[k - 1][0] };
            let active = (u - 0.3).abs() <= 1e-9
                || (u + 0.3).abs() <= 1e-9
                || ((u - prev).abs() - 0.1).abs() <= 1e-9;
            if !active {
                free += 1;
            }
        }
        assert!((rep.feasibility - free as f64 / p.n_p as f64).abs() < 1e-12);
    }
}
