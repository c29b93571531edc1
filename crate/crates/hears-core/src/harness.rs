//! Experiment orchestration: presets, seeded fan-out, summary statistics,
//! ablation grids, the vehicle reference-tracking loop, and file emission.
//! Every run is a pure function of (config, seed); reruns are byte-identical.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::envs::vehicle::{BaseRewardWeights, MpcFeedback};
use crate::envs::{
    generate_road, BicycleVehicle, EnvState, Environment, GridNav, HopperLite, Lander2D,
    PendulumSwingUp, SegmentSpec, VehicleParams,
};
use crate::envs::gridnav::TabularEnv;
use crate::error::{Error, Result};
use crate::learner::{
    actor_critic_train, tabular_q_learning, AcConfig, AcNets, EnvShaping, QHyper, RunRecord,
    TabularShaping,
};
use crate::mpc::{solve, vehicle_tracking_problem};
use crate::shaping::WeightSchedule;

pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Half the squared norm of a unit grid move.
const GRID_MOVE_ENERGY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LearnerKind {
    Tabular,
    ActorCritic,
}

/// Named coefficient presets `(alpha_task, alpha_energy, lambda)`.
pub fn preset(name: &str) -> Result<(f64, f64, f64)> {
    match name {
        "ant" => Ok((0.005, 0.03, 0.01)),
        "hopper-appendix" => Ok((0.5, 0.01, 0.0001)),
        "hopper-table" => Ok((0.5, 0.001, 0.0005)),
        "lander" => Ok((0.5, 0.001, 0.0001)),
        "vehicle" => Ok((0.45, 0.35, 0.20)),
        other => Err(Error::MissingConfig(format!("unknown preset '{other}'"))),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub env: String,
    pub learner: LearnerKind,
    pub alpha_task: f64,
    pub alpha_energy: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub seeds: Vec<u64>,
    pub episodes: usize,
    /// Base-return threshold for episodes-to-threshold; when absent the
    /// summary derives it as 88.5% of the mean final stable return.
    pub threshold: Option<f64>,
    /// Trailing window for the threshold test.
    pub window: usize,
    /// Recorded and hashed; consumed by `plotdata`, not by the learners
    /// (weights are constant within a run).
    pub schedule: Option<WeightSchedule>,
}

impl ExperimentConfig {
    pub fn new(env: &str, learner: LearnerKind, coeffs: (f64, f64, f64)) -> Self {
        Self {
            env: env.to_string(),
            learner,
            alpha_task: coeffs.0,
            alpha_energy: coeffs.1,
            lambda: coeffs.2,
            gamma: 0.99,
            seeds: vec![12345, 22345, 32345, 42345, 52345],
            episodes: 100,
            threshold: None,
            window: 10,
            schedule: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::InvalidArgument("window must be >= 1".into()));
        }
        if !(0.0..1.0).contains(&self.gamma) {
            return Err(Error::InvalidArgument("gamma must lie in [0, 1)".into()));
        }
        if self.alpha_task < 0.0 || self.alpha_energy < 0.0 || self.lambda < 0.0 {
            return Err(Error::InvalidArgument("coefficients must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn coeffs(&self) -> (f64, f64, f64) {
        (self.alpha_task, self.alpha_energy, self.lambda)
    }

    pub fn with_coeffs(&self, coeffs: (f64, f64, f64)) -> Self {
        Self {
            alpha_task: coeffs.0,
            alpha_energy: coeffs.1,
            lambda: coeffs.2,
            ..self.clone()
        }
    }

    /// SHA-256 of the canonical JSON serialization.
    pub fn hash(&self) -> Result<String> {
        let json = serde_json::to_string(self)?;
        let digest = Sha256::digest(json.as_bytes());
        let mut hex = String::with_capacity(64);
        for b in digest {
            write!(hex, "{b:02x}").expect("writing to String cannot fail");
        }
        Ok(hex)
    }
}

/// `sigma / mu * 100` with the sample (n - 1) standard deviation, so that
/// {90, 100, 110} gives exactly 10.0. A single value has CV 0.
pub fn coefficient_of_variation(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidArgument("CV of an empty sequence".into()));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if mean.abs() <= 1e-12 {
        return Err(Error::Numerical("CV undefined: |mean| <= 1e-12".into()));
    }
    if values.len() == 1 {
        return Ok(0.0);
    }
    let var =
        values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok(var.sqrt() / mean * 100.0)
}

/// First episode index at which the trailing `window`-mean of `returns`
/// reaches `threshold`; `None` if it never does.
pub fn episodes_to_threshold(returns: &[f64], threshold: f64, window: usize) -> Option<usize> {
    if window == 0 || returns.len() < window {
        return None;
    }
    let mut acc: f64 = returns[..window].iter().sum();
    if acc / window as f64 >= threshold {
        return Some(window - 1);
    }
    for i in window..returns.len() {
        acc += returns[i] - returns[i - window];
        if acc / window as f64 >= threshold {
            return Some(i);
        }
    }
    None
}

/// The 2^3 component lattice: each variant keeps or zeroes
/// (alpha_task, alpha_energy, lambda) independently.
pub fn ablation_grid(base: &ExperimentConfig) -> Vec<(String, ExperimentConfig)> {
    let (at, ae, l) = base.coeffs();
    [
        ("Vanilla", (0.0, 0.0, 0.0)),
        ("Energy Only", (0.0, ae, 0.0)),
        ("Task Only", (at, 0.0, 0.0)),
        ("Regularization Only", (0.0, 0.0, l)),
        ("Without Regularization", (at, ae, 0.0)),
        ("Without Energy", (at, 0.0, l)),
        ("Without Task", (0.0, ae, l)),
        ("Full", (at, ae, l)),
    ]
    .into_iter()
    .map(|(name, coeffs)| (name.to_string(), base.with_coeffs(coeffs)))
    .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MpcLogRow {
    pub step: u64,
    pub feasibility: f64,
    pub iterations: usize,
    pub converged: bool,
    pub cost: f64,
    pub delta: f64,
    pub m_z: f64,
    pub r_ref: f64,
    pub beta_ref: f64,
    pub r_exec: f64,
    pub beta_exec: f64,
}

/// Two-layer vehicle control: the policy emits yaw-rate / sideslip
/// references, the tracking MPC converts them into steering and yaw-moment
/// commands, and the plant steps on those. The cooperation reward sees the
/// real feasibility and reference-execution error.
pub struct VehicleMpcEnv {
    pub inner: BicycleVehicle,
    pub weights: BaseRewardWeights,
    pub log: Vec<MpcLogRow>,
    u_prev: Vec<f64>,
}

/// Guard below which the lateral linearization is singular; the loop falls
/// back to straight-line open loop there.
const LOW_SPEED_GUARD: f64 = 0.5;

impl VehicleMpcEnv {
    pub fn new(inner: BicycleVehicle) -> Self {
        Self { inner, weights: BaseRewardWeights::default(), log: Vec::new(), u_prev: vec![0.0; 2] }
    }

    /// The 300 m mixed-adhesion test road at 15 m/s target speed.
    pub fn test_track(road_seed: u64) -> Result<Self> {
        let road = generate_road(road_seed, 300.0, &SegmentSpec::default())?;
        Ok(Self::new(BicycleVehicle::new(VehicleParams::default(), road, 15.0)?))
    }
}

impl Environment for VehicleMpcEnv {
    fn reset(&mut self, seed: u64) -> EnvState {
        self.log.clear();
        self.u_prev = vec![0.0; 2];
        self.inner.reset(seed)
    }

    fn step(&mut self, state: &EnvState, action: &[f64]) -> Result<crate::envs::StepOutcome> {
        let r_ref = action[0].clamp(-0.5, 0.5);
        let beta_ref = action[1].clamp(-0.17, 0.17);
        let v_x = state.q_dot[0];
        let (u, feasibility, iterations, converged, cost) = if v_x <= LOW_SPEED_GUARD {
            (vec![0.0, 0.0], 1.0, 0, true, 0.0)
        } else {
            let problem = vehicle_tracking_problem(&self.inner.params, v_x, &self.u_prev)?;
            let x0 = [state.q_dot[1], state.q_dot[2]];
            let y_ref = vec![vec![r_ref, beta_ref]; problem.n_p];
            let rep = solve(&problem, &x0, &y_ref)?;
            (rep.u0, rep.feasibility, rep.iterations, rep.converged, rep.cost)
        };
        let out = self.inner.step(state, &u)?;

        // swap the inner step's neutral cooperation term for the real one
        let neutral = crate::envs::vehicle_base_reward(
            &self.inner,
            &out.state,
            &MpcFeedback::neutral(),
            &BaseRewardWeights::default(),
        )?;
        let fb = MpcFeedback {
            feasibility,
            y_ref: [r_ref, beta_ref],
            y_exec: [out.state.q_dot[2], BicycleVehicle::sideslip(&out.state)],
            y_max: [1.0, 0.17],
        };
        let real = crate::envs::vehicle_base_reward(&self.inner, &out.state, &fb, &self.weights)?;
        let base_reward = out.base_reward + 0.05 * (real - neutral);

        self.log.push(MpcLogRow {
            step: out.state.t,
            feasibility,
            iterations,
            converged,
            cost,
            delta: u[0],
            m_z: u[1],
            r_ref,
            beta_ref,
            r_exec: out.state.q_dot[2],
            beta_exec: BicycleVehicle::sideslip(&out.state),
        });
        self.u_prev = u;
        Ok(crate::envs::StepOutcome { base_reward, ..out })
    }

    fn task_potential(&self, state: &EnvState) -> f64 {
        self.inner.task_potential(state)
    }

    fn internal_energy(&self, state: &EnvState) -> f64 {
        self.inner.internal_energy(state)
    }

    fn observe(&self, state: &EnvState) -> Vec<f64> {
        self.inner.observe(state)
    }

    fn action_dim(&self) -> usize {
        2
    }

    fn action_low(&self) -> Vec<f64> {
        vec![-0.5, -0.17]
    }

    fn action_high(&self) -> Vec<f64> {
        vec![0.5, 0.17]
    }

    fn dt(&self) -> f64 {
        self.inner.dt
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceRow {
    pub step: u64,
    pub energy: f64,
    pub potential: f64,
    pub base_reward: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Summary {
    pub config_hash: String,
    pub code_version: String,
    pub seeds: Vec<u64>,
    /// Mean base return over the last 20% of episodes, per seed.
    pub final_returns: Vec<f64>,
    pub mean_final: Option<f64>,
    /// Population standard deviation.
    pub std_final: Option<f64>,
    pub cv_percent: Option<f64>,
    pub cv_flag: Option<String>,
    pub threshold: Option<f64>,
    pub episodes_to_threshold: Vec<Option<usize>>,
    /// Set when a seed failed; earlier seeds' results are preserved.
    pub aborted: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct ExperimentOutcome {
    pub records: Vec<RunRecord>,
    pub summary: Summary,
    /// Greedy-policy evaluation rollout per seed.
    pub traces: Vec<Vec<TraceRow>>,
    /// Populated only for the vehicle environment.
    pub mpc_logs: Vec<Vec<MpcLogRow>>,
}

fn final_stable_mean(returns: &[f64]) -> f64 {
    if returns.is_empty() {
        return f64::NAN;
    }
    let tail = (returns.len() / 5).max(1);
    let slice = &returns[returns.len() - tail..];
    slice.iter().sum::<f64>() / slice.len() as f64
}

fn parse_gridnav(env: &str) -> Result<GridNav> {
    let size = match env {
        "gridnav" => 20,
        other => match other.strip_prefix("gridnav-") {
            Some(n) => n
                .parse::<usize>()
                .map_err(|_| Error::MissingConfig(format!("bad gridnav size in '{other}'")))?,
            None => return Err(Error::MissingConfig(format!("'{env}' is not a tabular env"))),
        },
    };
    GridNav::new(size, size)
}

fn run_tabular_seed(
    config: &ExperimentConfig,
    seed: u64,
) -> Result<(RunRecord, Vec<TraceRow>)> {
    let env = parse_gridnav(&config.env)?;
    let table: Vec<f64> =
        env.potential_table().iter().map(|p| config.alpha_task * p).collect();
    let shaping = TabularShaping {
        potential: table,
        lambda: config.lambda,
        action_energy: vec![GRID_MOVE_ENERGY; env.n_actions()],
    };
    let hyper = QHyper { gamma: config.gamma, ..QHyper::default() };
    let outcome = tabular_q_learning(&env, &shaping, config.episodes, seed, &hyper)?;

    // greedy evaluation rollout; the grid has no mechanical energy
    let mut trace = Vec::new();
    let mut s = env.start_state();
    for step in 0..hyper.max_steps_per_episode as u64 {
        let (s2, r, done) = env.step_index(s, outcome.greedy[s]);
        trace.push(TraceRow {
            step,
            energy: 0.0,
            potential: env.potential_table()[s2],
            base_reward: r,
        });
        s = s2;
        if done {
            break;
        }
    }
    Ok((outcome.record, trace))
}

fn eval_rollout<E: Environment>(
    env: &mut E,
    nets: &AcNets,
    seed: u64,
    max_steps: usize,
) -> Result<Vec<TraceRow>> {
    let mut trace = Vec::new();
    let mut state = env.reset(seed);
    let low = env.action_low();
    let high = env.action_high();
    for _ in 0..max_steps {
        let obs = env.observe(&state);
        let (mean, _) = nets.actor.forward(&obs)?;
        let action: Vec<f64> =
            mean.iter().enumerate().map(|(i, m)| m.clamp(low[i], high[i])).collect();
        let out = env.step(&state, &action)?;
        trace.push(TraceRow {
            step: out.state.t,
            energy: env.internal_energy(&out.state),
            potential: env.task_potential(&out.state),
            base_reward: out.base_reward,
        });
        if out.terminal {
            break;
        }
        state = out.state;
    }
    Ok(trace)
}

fn run_ac_seed(
    config: &ExperimentConfig,
    seed: u64,
    ac: &AcConfig,
) -> Result<(RunRecord, Vec<TraceRow>, Vec<MpcLogRow>)> {
    const EVAL_STEPS: usize = 20_000;
    match config.env.as_str() {
        "pendulum" => {
            let mut env = PendulumSwingUp::default();
            let shaping = env_shaping(config, env.action_dim());
            let out = actor_critic_train(&mut env, &shaping, ac, seed)?;
            let trace = eval_rollout(&mut env, &out.nets, seed, EVAL_STEPS)?;
            Ok((out.record, trace, Vec::new()))
        }
        "lander" => {
            let mut env = Lander2D::default();
            let shaping = env_shaping(config, env.action_dim());
            let out = actor_critic_train(&mut env, &shaping, ac, seed)?;
            let trace = eval_rollout(&mut env, &out.nets, seed, EVAL_STEPS)?;
            Ok((out.record, trace, Vec::new()))
        }
        "hopper" => {
            let mut env = HopperLite::default();
            let shaping = env_shaping(config, env.action_dim());
            let out = actor_critic_train(&mut env, &shaping, ac, seed)?;
            let trace = eval_rollout(&mut env, &out.nets, seed, EVAL_STEPS)?;
            Ok((out.record, trace, Vec::new()))
        }
        "vehicle" => {
            let mut env = VehicleMpcEnv::test_track(0)?;
            let shaping = env_shaping(config, env.action_dim());
            let out = actor_critic_train(&mut env, &shaping, ac, seed)?;
            let trace = eval_rollout(&mut env, &out.nets, seed, EVAL_STEPS)?;
            let log = std::mem::take(&mut env.log);
            Ok((out.record, trace, log))
        }
        other => Err(Error::MissingConfig(format!("unknown environment '{other}'"))),
    }
}

fn env_shaping(config: &ExperimentConfig, action_dim: usize) -> EnvShaping {
    EnvShaping::new(
        config.alpha_task,
        config.alpha_energy,
        config.lambda,
        config.gamma,
        action_dim,
    )
}

/// One deterministic run per seed, merged in seed order. A failed seed
/// aborts the fan-out but preserves and marks the completed results.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    run_experiment_with(config, &AcConfig::default())
}

pub fn run_experiment_with(
    config: &ExperimentConfig,
    ac: &AcConfig,
) -> Result<ExperimentOutcome> {
    config.validate()?;
    let ac = AcConfig { episodes: config.episodes, ..ac.clone() };
    let mut records = Vec::new();
    let mut traces = Vec::new();
    let mut mpc_logs = Vec::new();
    let mut aborted = None;

    for &seed in &config.seeds {
        let result = match config.learner {
            LearnerKind::Tabular => {
                run_tabular_seed(config, seed).map(|(r, t)| (r, t, Vec::new()))
            }
            LearnerKind::ActorCritic => run_ac_seed(config, seed, &ac),
        };
        match result {
            Ok((record, trace, log)) => {
                records.push(record);
                traces.push(trace);
                mpc_logs.push(log);
            }
            Err(e) => {
                aborted = Some(format!("seed {seed}: {e}"));
                break;
            }
        }
    }

    let final_returns: Vec<f64> =
        records.iter().map(|r| final_stable_mean(&r.base_returns)).collect();
    let (mean_final, std_final) = if final_returns.is_empty() {
        (None, None)
    } else {
        let n = final_returns.len() as f64;
        let mean = final_returns.iter().sum::<f64>() / n;
        let var =
            final_returns.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        (Some(mean), Some(var.sqrt()))
    };
    let (cv_percent, cv_flag) = if final_returns.is_empty() {
        (None, None)
    } else {
        match coefficient_of_variation(&final_returns) {
            Ok(cv) => (Some(cv), None),
            Err(e) => (None, Some(e.to_string())),
        }
    };
    let threshold = config
        .threshold
        .or_else(|| mean_final.map(|m| 0.885 * m));
    let ett: Vec<Option<usize>> = match threshold {
        Some(th) => records
            .iter()
            .map(|r| episodes_to_threshold(&r.base_returns, th, config.window))
            .collect(),
        None => vec![None; records.len()],
    };

    let summary = Summary {
        config_hash: config.hash()?,
        code_version: CODE_VERSION.to_string(),
        seeds: config.seeds[..records.len()].to_vec(),
        final_returns,
        mean_final,
        std_final,
        cv_percent,
        cv_flag,
        threshold,
        episodes_to_threshold: ett,
        aborted,
    };
    Ok(ExperimentOutcome { records, summary, traces, mpc_logs })
}

/// Writes `summary.json`, `episodes.csv`, `energy_trace.csv`, and
/// `mpc_log.csv` into `dir`. Output bytes depend only on the outcome.
pub fn write_outputs(outcome: &ExperimentOutcome, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let summary = serde_json::to_string_pretty(&outcome.summary)?;
    std::fs::write(dir.join("summary.json"), summary + "\n")?;

    let mut episodes =
        String::from("seed,episode,base_return,shaped_return,length,action_tv,energy_change\n");
    for (record, seed) in outcome.records.iter().zip(&outcome.summary.seeds) {
        for i in 0..record.base_returns.len() {
            writeln!(
                episodes,
                "{seed},{i},{},{},{},{},{}",
                record.base_returns[i],
                record.shaped_returns[i],
                record.episode_lengths[i],
                record.action_tv[i],
                record.energy_change[i],
            )
            .expect("writing to String cannot fail");
        }
    }
    std::fs::write(dir.join("episodes.csv"), episodes)?;

    let mut trace_csv = String::from("seed,step,energy,potential,base_reward\n");
    for (trace, seed) in outcome.traces.iter().zip(&outcome.summary.seeds) {
        for row in trace {
            writeln!(
                trace_csv,
                "{seed},{},{},{},{}",
                row.step, row.energy, row.potential, row.base_reward
            )
            .expect("writing to String cannot fail");
        }
    }
    std::fs::write(dir.join("energy_trace.csv"), trace_csv)?;

    let mut mpc_csv = String::from(
        "seed,step,feasibility,iterations,converged,cost,delta,m_z,r_ref,beta_ref,r_exec,beta_exec\n",
    );
    for (log, seed) in outcome.mpc_logs.iter().zip(&outcome.summary.seeds) {
        for row in log {
            writeln!(
                mpc_csv,
                "{seed},{},{},{},{},{},{},{},{},{},{},{}",
                row.step,
                row.feasibility,
                row.iterations,
                row.converged,
                row.cost,
                row.delta,
                row.m_z,
                row.r_ref,
                row.beta_ref,
                row.r_exec,
                row.beta_exec,
            )
            .expect("writing to String cannot fail");
        }
    }
    std::fs::write(dir.join("mpc_log.csv"), mpc_csv)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_match_tables() {
        assert_eq!(preset("ant").unwrap(), (0.005, 0.03, 0.01));
        assert_eq!(preset("hopper-appendix").unwrap(), (0.5, 0.01, 0.0001));
        assert_eq!(preset("hopper-table").unwrap(), (0.5, 0.001, 0.0005));
        assert_eq!(preset("lander").unwrap(), (0.5, 0.001, 0.0001));
        assert_eq!(preset("vehicle").unwrap(), (0.45, 0.35, 0.20));
        assert!(preset("walker").is_err());
    }

    #[test]
    fn cv_hand_values() {
        assert_eq!(coefficient_of_variation(&[5.0, 5.0, 5.0]).unwrap(), 0.0);
        // sample sigma: sqrt((100 + 0 + 100) / 2) = 10, mean 100
        let cv = coefficient_of_variation(&[90.0, 100.0, 110.0]).unwrap();
        assert!((cv - 10.0).abs() < 1e-12, "cv {cv}");
        let scaled: Vec<f64> = [90.0, 100.0, 110.0].iter().map(|v| v * 7.5).collect();
        assert!((coefficient_of_variation(&scaled).unwrap() - cv).abs() < 1e-10);
        assert!(coefficient_of_variation(&[1e-13, -1e-13]).is_err());
        assert!(coefficient_of_variation(&[]).is_err());
    }

    #[test]
    fn threshold_crossing_cases() {
        assert_eq!(episodes_to_threshold(&[5.0; 10], 1.0, 3), Some(2));
        assert_eq!(episodes_to_threshold(&[0.0; 10], 1.0, 3), None);
        // ramp 0,1,2,...: window-3 mean at index i is i-1; crosses 5 at i=6
        let ramp: Vec<f64> = (0..10).map(|i| i as f64).collect();
        assert_eq!(episodes_to_threshold(&ramp, 5.0, 3), Some(6));
        assert_eq!(episodes_to_threshold(&[1.0], 0.0, 3), None);
    }

    #[test]
    fn ablation_grid_covers_lattice() {
        let base = ExperimentConfig::new("gridnav-5", LearnerKind::Tabular, preset("ant").unwrap());
        let grid = ablation_grid(&base);
        assert_eq!(grid.len(), 8);
        let by_name = |n: &str| grid.iter().find(|(name, _)| name == n).unwrap().1.coeffs();
        assert_eq!(by_name("Vanilla"), (0.0, 0.0, 0.0));
        assert_eq!(by_name("Without Task"), (0.0, 3e-2, 1e-2));
        assert_eq!(by_name("Full"), base.coeffs());
        let mut coeffs: Vec<_> = grid.iter().map(|(_, c)| {
            let (a, b, l) = c.coeffs();
            (a.to_bits(), b.to_bits(), l.to_bits())
        }).collect();
        coeffs.sort();
        coeffs.dedup();
        assert_eq!(coeffs.len(), 8, "lattice has duplicates");
    }

    #[test]
    fn config_hash_is_stable_and_sensitive() {
        let a = ExperimentConfig::new("pendulum", LearnerKind::ActorCritic, (0.1, 0.2, 0.3));
        assert_eq!(a.hash().unwrap(), a.hash().unwrap());
        assert_eq!(a.hash().unwrap().len(), 64);
        let b = a.with_coeffs((0.1, 0.2, 0.31));
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
    }

    #[test]
    fn zero_episode_config_gives_skeleton() {
        let mut config =
            ExperimentConfig::new("gridnav-4", LearnerKind::Tabular, (0.0, 0.0, 0.0));
        config.episodes = 0;
        config.seeds = vec![1, 2];
        let out = run_experiment(&config).unwrap();
        assert_eq!(out.records.len(), 2);
        assert!(out.records.iter().all(|r| r.base_returns.is_empty()));
        assert!(out.summary.mean_final.unwrap().is_nan());
        assert!(out.summary.aborted.is_none());
    }

    #[test]
    fn rerun_is_byte_identical() {
        let mut config =
            ExperimentConfig::new("gridnav-5", LearnerKind::Tabular, (0.3, 0.0, 0.01));
        config.episodes = 30;
        config.seeds = vec![7, 8];
        let dir_a = std::env::temp_dir().join("hears-test-run-a");
        let dir_b = std::env::temp_dir().join("hears-test-run-b");
        write_outputs(&run_experiment(&config).unwrap(), &dir_a).unwrap();
        write_outputs(&run_experiment(&config).unwrap(), &dir_b).unwrap();
        for f in ["summary.json", "episodes.csv", "energy_trace.csv", "mpc_log.csv"] {
            let a = std::fs::read(dir_a.join(f)).unwrap();
            let b = std::fs::read(dir_b.join(f)).unwrap();
            assert_eq!(a, b, "{f} differs between reruns");
        }
    }

    #[test]
    fn summary_recomputable_from_episode_records() {
        let mut config =
            ExperimentConfig::new("gridnav-5", LearnerKind::Tabular, (0.3, 0.0, 0.0));
        config.episodes = 25;
        config.seeds = vec![3];
        let out = run_experiment(&config).unwrap();
        let returns = &out.records[0].base_returns;
        let tail = (returns.len() / 5).max(1);
        let recomputed =
            returns[returns.len() - tail..].iter().sum::<f64>() / tail as f64;
        assert_eq!(out.summary.final_returns[0], recomputed);
        assert_eq!(out.summary.mean_final, Some(recomputed));
    }

    #[test]
    fn shaped_gridnav_not_slower_smoke() {
        // small-scale version of the acceleration experiment: the BFS
        // potential should never hurt on a sparse grid
        let vanilla = ExperimentConfig {
            episodes: 150,
            seeds: vec![1, 2, 3],
            threshold: Some(0.5),
            window: 5,
            ..ExperimentConfig::new("gridnav-8", LearnerKind::Tabular, (0.0, 0.0, 0.0))
        };
        let shaped = vanilla.with_coeffs((1.0, 0.0, 0.0));
        let a = run_experiment(&vanilla).unwrap();
        let b = run_experiment(&shaped).unwrap();
        let sum = |o: &ExperimentOutcome| -> usize {
            o.summary
                .episodes_to_threshold
                .iter()
                .map(|e| e.unwrap_or(vanilla.episodes))
                .sum()
        };
        assert!(sum(&b) <= sum(&a), "shaped {} vs vanilla {}", sum(&b), sum(&a));
    }

    #[test]
    fn vehicle_mpc_loop_logs_and_respects_bounds() {
        let mut env = VehicleMpcEnv::test_track(1).unwrap();
        let mut state = env.reset(0);
        for _ in 0..40 {
            let out = env.step(&state, &[0.05, 0.0]).unwrap();
            if out.terminal {
                break;
            }
            state = out.state;
        }
        assert!(!env.log.is_empty());
        for row in &env.log {
            assert!((0.0..=1.0).contains(&row.feasibility));
            assert!(row.delta.abs() <= 0.5 + 1e-12);
            assert!(row.m_z.abs() <= 20_000.0 + 1e-9);
        }
        // cruise control spins the vehicle up from rest through the guard
        assert!(state.q_dot[0] > 0.0);
    }
}
