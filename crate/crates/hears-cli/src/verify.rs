//! The `verify` subcommand: a fast theorem suite over the exact tabular
//! oracles and physics invariants. Each check prints one PASS/FAIL line;
//! any failure makes the process exit nonzero.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use hears_core::envs::{Environment, PendulumSwingUp};
use hears_core::learner::Mlp;
use hears_core::mdp::{greedy_policy, random_mdp, value_iteration};
use hears_core::shaping::{
    approx_potential_gap_check, embed_shaped_mdp, lambda_max, performance_bound_value,
    shaped_reward,
};

pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check { name, passed, detail }
}

fn random_instance(rng: &mut ChaCha8Rng, idx: u64) -> (hears_core::mdp::TabularMdp, Vec<f64>, Vec<f64>) {
    let n = rng.gen_range(5..=12);
    let na = rng.gen_range(2..=4);
    let mdp = random_mdp(idx, n, na, 1.0).expect("random MDP construction");
    let potential: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let energy: Vec<f64> = (0..na).map(|_| rng.gen_range(0.0..1.0)).collect();
    (mdp, potential, energy)
}

fn pbrs_invariance_and_value_shift() -> (Check, Check) {
    let mut rng = ChaCha8Rng::seed_from_u64(100);
    let lambda = 0.02;
    let mut mismatches = 0usize;
    let mut worst_shift: f64 = 0.0;
    let instances = 20;
    let potentials_each = 5;
    for i in 0..instances {
        let (mdp, _, energy) = random_instance(&mut rng, i);
        let n = mdp.n_states();
        let zero_potential = vec![0.0; n];
        let reg = embed_shaped_mdp(&mdp, &zero_potential, lambda, &energy).expect("embed");
        let vt_reg = value_iteration(&reg, 1e-12, 2_000_000).expect("VI");
        let pi_reg = greedy_policy(&vt_reg);
        for _ in 0..potentials_each {
            let potential: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let shaped = embed_shaped_mdp(&mdp, &potential, lambda, &energy).expect("embed");
            let vt_sh = value_iteration(&shaped, 1e-12, 2_000_000).expect("VI");
            let pi_sh = greedy_policy(&vt_sh);
            mismatches += pi_sh.iter().zip(&pi_reg).filter(|(a, b)| a != b).count();
            // shaping r + gamma*Phi(s') - Phi(s) shifts values by -Phi
            for s in 0..n {
                worst_shift = worst_shift.max((vt_sh.v[s] - vt_reg.v[s] + potential[s]).abs());
            }
        }
    }
    (
        check(
            "pbrs-invariance",
            mismatches == 0,
            format!("{mismatches} greedy mismatches over {instances}x{potentials_each} instances"),
        ),
        check(
            "value-shift",
            worst_shift <= 1e-8,
            format!("sup-norm deviation {worst_shift:.3e} (budget 1e-8)"),
        ),
    )
}

fn reward_bound() -> Check {
    let (r_max, gamma, phi_max, mean_e) = (10.0, 0.99, 1.0, 100.0);
    let lmax = lambda_max(r_max, gamma, phi_max, mean_e).expect("lambda_max");
    if !(0.050..=0.051).contains(&lmax) {
        return check("reward-bound", false, format!("lambda_max {lmax} outside [0.050, 0.051]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let max_e = 4.0 * mean_e;
    let threshold = r_max + 2.0 * gamma * phi_max + lmax * max_e;
    let mut violations = 0usize;
    let samples = 100_000;
    for _ in 0..samples {
        let r = rng.gen_range(-r_max..r_max);
        let phi_s: f64 = rng.gen_range(-phi_max..phi_max);
        let phi_n: f64 = rng.gen_range(-phi_max..phi_max);
        let e = rng.gen_range(0.0..max_e);
        if shaped_reward(r, phi_s, phi_n, e, gamma, lmax).abs() > threshold {
            violations += 1;
        }
    }
    check(
        "reward-bound",
        violations == 0,
        format!("{violations} violations over {samples} samples, lambda_max {lmax:.6}"),
    )
}

fn envelope() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(200);
    let mut worst_rel: f64 = 0.0;
    let mut usable = 0usize;
    for i in 0..10u64 {
        let (mdp, potential, energy) = random_instance(&mut rng, 1000 + i);
        let ck = hears_core::shaping::envelope_derivative_check(&mdp, &potential, &energy, 0.05, 1e-6)
            .expect("envelope check");
        if ck.policy_locally_constant {
            usable += 1;
            let rel = (ck.finite_diff - ck.expected).abs() / ck.expected.abs().max(1e-12);
            worst_rel = worst_rel.max(rel);
        }
    }
    check(
        "envelope-derivative",
        usable > 0 && worst_rel <= 1e-6,
        format!("worst relative error {worst_rel:.3e} over {usable} locally-constant instances"),
    )
}

fn gap_report() -> Check {
    let bound = performance_bound_value(0.2, 0.99, 0.01).expect("bound value");
    if (bound - 0.495).abs() > 1e-3 {
        return check("gap-report", false, format!("bound {bound} != 0.495 +- 1e-3"));
    }
    let mdp = random_mdp(5, 8, 3, 1.0).expect("mdp");
    let potential: Vec<f64> = (0..8).map(|s| (s as f64) / 8.0).collect();
    let exact = approx_potential_gap_check(&mdp, &potential, 0.01, 0.0, 3, 9).expect("gap check");
    let zero_gap = exact.worst_gap.abs() <= 1e-9;
    let note_ok = exact.note.contains("5%");
    check(
        "gap-report",
        zero_gap && note_ok,
        format!(
            "exact-potential gap {:.3e}, bound(0.2, 0.99, 0.01) = {bound:.4}, discrepancy note {}",
            exact.worst_gap,
            if note_ok { "emitted" } else { "missing" }
        ),
    )
}

fn energy_drift() -> Check {
    let mut env = PendulumSwingUp {
        dt: 0.01,
        damping: 0.0,
        max_steps: u64::MAX,
        ..Default::default()
    };
    let mut state = env.reset(0);
    state.q[0] = 2.0;
    let e0 = env.internal_energy(&state);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let out = env.step(&state, &[0.0]).expect("pendulum step");
        state = out.state;
        worst = worst.max((env.internal_energy(&state) - e0).abs() / e0.abs());
    }
    check("energy-drift", worst <= 1e-4, format!("relative drift {worst:.3e} over 1e4 steps"))
}

fn gradients() -> Check {
    let mut worst: f64 = 0.0;
    for seed in 0..5u64 {
        let net = Mlp::new(vec![3, 6, 2], seed).expect("net");
        let x = [0.3, -0.7, 0.2];
        let (_, cache) = net.forward(&x).expect("forward");
        let (grad, _) = net.backward(&cache, &[1.0, 1.0]).expect("backward");
        let h = 1e-6;
        for p in 0..net.params.len() {
            let mut plus = net.clone();
            plus.params[p] += h;
            let mut minus = net.clone();
            minus.params[p] -= h;
            let f = |m: &Mlp| m.forward(&x).expect("forward").0.iter().sum::<f64>();
            let fd = (f(&plus) - f(&minus)) / (2.0 * h);
            worst = worst.max((fd - grad[p]).abs() / grad[p].abs().max(1e-6));
        }
    }
    check("mlp-gradients", worst <= 1e-4, format!("worst relative error {worst:.3e} over 5 nets"))
}

/// Runs the whole suite, printing one line per check; returns true when all
/// checks pass.
pub fn run_all() -> bool {
    let (c1, c2) = pbrs_invariance_and_value_shift();
    let checks = vec![c1, c2, reward_bound(), envelope(), gap_report(), energy_drift(), gradients()];
    let mut ok = true;
    for c in &checks {
        let tag = if c.passed { "PASS" } else { "FAIL" };
        println!("{tag} {}: {}", c.name, c.detail);
        ok &= c.passed;
    }
    ok
}
