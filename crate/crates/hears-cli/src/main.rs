//! `hears`: experiment runner for energy-aware reward shaping.

mod verify;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use hears_core::harness::{
    ablation_grid, preset, run_experiment, write_outputs, ExperimentConfig, LearnerKind,
};

#[derive(Parser)]
#[command(name = "hears", about = "Energy-aware reward shaping experiments", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// JSON config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Environment: gridnav[-N], pendulum, lander, hopper, vehicle.
    #[arg(long)]
    env: Option<String>,
    /// Coefficient preset: ant, hopper-appendix, hopper-table, lander, vehicle.
    #[arg(long)]
    preset: Option<String>,
    /// Comma-separated seed list.
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    episodes: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write summary.json plus the CSV outputs.
    Run(RunArgs),
    /// Emit the 8-variant ablation grid; optionally execute every variant.
    Ablate {
        #[command(flatten)]
        args: RunArgs,
        /// Run each variant instead of only writing the manifest.
        #[arg(long)]
        execute: bool,
    },
    /// Run the theorem suite; exits nonzero on any failed check.
    Verify,
    /// Run an experiment and additionally emit figure-ready CSV data.
    Plotdata(RunArgs),
}

fn parse_seeds(spec: &str) -> Result<Vec<u64>> {
    spec.split(',')
        .map(|s| s.trim().parse::<u64>().with_context(|| format!("bad seed '{s}'")))
        .collect()
}

fn build_config(args: &RunArgs) -> Result<ExperimentConfig> {
    let mut config = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => {
            let env = args.env.clone().unwrap_or_else(|| "gridnav".to_string());
            let learner = if env.starts_with("gridnav") {
                LearnerKind::Tabular
            } else {
                LearnerKind::ActorCritic
            };
            ExperimentConfig::new(&env, learner, (0.0, 0.0, 0.0))
        }
    };
    if let Some(env) = &args.env {
        config.env = env.clone();
        config.learner = if env.starts_with("gridnav") {
            LearnerKind::Tabular
        } else {
            LearnerKind::ActorCritic
        };
    }
    if let Some(name) = &args.preset {
        let (at, ae, l) = preset(name)?;
        config.alpha_task = at;
        config.alpha_energy = ae;
        config.lambda = l;
    }
    if let Some(spec) = &args.seed {
        config.seeds = parse_seeds(spec)?;
    }
    if let Some(episodes) = args.episodes {
        config.episodes = episodes;
    }
    Ok(config)
}

fn out_dir(args: &RunArgs) -> PathBuf {
    args.out.clone().unwrap_or_else(|| PathBuf::from("out"))
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let config = build_config(args)?;
    let outcome = run_experiment(&config)?;
    let dir = out_dir(args);
    write_outputs(&outcome, &dir)?;
    println!("wrote {}", dir.join("summary.json").display());
    if let Some(reason) = &outcome.summary.aborted {
        bail!("experiment aborted: {reason}");
    }
    Ok(())
}

#[derive(Serialize)]
struct AblationEntry {
    name: String,
    alpha_task: f64,
    alpha_energy: f64,
    lambda: f64,
    config_hash: String,
}

fn variant_slug(name: &str) -> String {
    name.to_lowercase().replace(' ', "-")
}

fn cmd_ablate(args: &RunArgs, execute: bool) -> Result<()> {
    let base = build_config(args)?;
    let grid = ablation_grid(&base);
    let dir = out_dir(args);
    std::fs::create_dir_all(&dir)?;

    let manifest: Vec<AblationEntry> = grid
        .iter()
        .map(|(name, config)| {
            Ok(AblationEntry {
                name: name.clone(),
                alpha_task: config.alpha_task,
                alpha_energy: config.alpha_energy,
                lambda: config.lambda,
                config_hash: config.hash()?,
            })
        })
        .collect::<hears_core::Result<_>>()?;
    let json = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(dir.join("ablation.json"), json + "\n")?;
    println!("wrote {}", dir.join("ablation.json").display());

    if execute {
        for (name, config) in &grid {
            let outcome = run_experiment(config)?;
            let sub = dir.join(variant_slug(name));
            write_outputs(&outcome, &sub)?;
            if let Some(reason) = &outcome.summary.aborted {
                bail!("variant '{name}' aborted: {reason}");
            }
            println!("wrote {}", sub.join("summary.json").display());
        }
    }
    Ok(())
}

fn cmd_plotdata(args: &RunArgs) -> Result<()> {
    use std::fmt::Write as _;

    let config = build_config(args)?;
    let outcome = run_experiment(&config)?;
    let dir = out_dir(args);
    write_outputs(&outcome, &dir)?;

    // per-episode mean and spread of base return across seeds
    let episodes = outcome.records.iter().map(|r| r.base_returns.len()).max().unwrap_or(0);
    let mut curve = String::from("episode,mean_base_return,min_base_return,max_base_return\n");
    for e in 0..episodes {
        let vals: Vec<f64> = outcome
            .records
            .iter()
            .filter_map(|r| r.base_returns.get(e).copied())
            .collect();
        let n = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / n;
        let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        writeln!(curve, "{e},{mean},{min},{max}").expect("writing to String cannot fail");
    }
    std::fs::write(dir.join("learning_curve.csv"), curve)?;

    if let Some(schedule) = &config.schedule {
        let mut sched_csv = String::from("episode,alpha_task,alpha_energy\n");
        for e in 0..config.episodes {
            let ratio = schedule.ratio_at(e);
            writeln!(sched_csv, "{e},{},{}", ratio * config.alpha_energy, config.alpha_energy)
                .expect("writing to String cannot fail");
        }
        std::fs::write(dir.join("schedule.csv"), sched_csv)?;
    }
    println!("wrote {}", dir.join("learning_curve.csv").display());
    if let Some(reason) = &outcome.summary.aborted {
        bail!("experiment aborted: {reason}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Ablate { args, execute } => cmd_ablate(args, *execute),
        Command::Verify => {
            if verify::run_all() {
                Ok(())
            } else {
                Err(anyhow::anyhow!("verification failed"))
            }
        }
        Command::Plotdata(args) => cmd_plotdata(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
