use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use dqas_rl::envs::{Env, EnvKind};
use dqas_rl::experiment::{self, Mode, Overrides};
use dqas_rl::noise::NoiseSpec;
use dqas_rl::supernet::PoolName;
use dqas_rl::Error;

/// Reinforcement-learning driven quantum architecture search.
#[derive(Parser)]
#[command(name = "dqas-rl", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search architectures with several agents, rank and evaluate them.
    Run {
        /// JSON file with flat configuration keys.
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: CommonArgs,
        /// Operation pool: op3 or op4.
        #[arg(long)]
        pool: Option<PoolName>,
    },
    /// Evaluate a saved architecture greedily.
    Eval {
        /// Architecture JSON written by `run` (arch_rank_<r>.json).
        #[arg(long)]
        arch: PathBuf,
        /// cartpole or frozenlake.
        #[arg(long)]
        env: EnvKind,
        /// Depolarizing rates as `p1,p2`.
        #[arg(long, value_parser = parse_noise)]
        noise: Option<(f64, f64)>,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        #[arg(long, default_value_t = 1000)]
        trajectories: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        slippery: bool,
    },
    /// Train the fixed ry/rz/cz baseline circuit.
    Baseline {
        /// JSON file with flat configuration keys.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        common: CommonArgs,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// cartpole or frozenlake.
    #[arg(long)]
    env: Option<EnvKind>,
    #[arg(long)]
    agents: Option<usize>,
    /// Base seed; agent i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    /// Agents trained concurrently.
    #[arg(long)]
    jobs: Option<usize>,
    /// Depolarizing rates as `p1,p2`.
    #[arg(long, value_parser = parse_noise)]
    noise: Option<(f64, f64)>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

impl CommonArgs {
    fn overrides(self, pool: Option<PoolName>) -> Overrides {
        Overrides {
            env: self.env,
            pool,
            agents: self.agents,
            seed: self.seed,
            jobs: self.jobs,
            noise: self.noise,
            output_dir: self.output_dir,
        }
    }
}

fn parse_noise(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected `p1,p2`, got `{s}`"))?;
    let p = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("`{x}`: {e}"));
    Ok((p(a)?, p(b)?))
}

fn run(cli: Cli) -> dqas_rl::Result<()> {
    match cli.command {
        Command::Run {
            config,
            common,
            pool,
        } => {
            let cfg = experiment::parse_config(Some(&config), &common.overrides(pool))?;
            report(&experiment::run_experiment(&cfg, Mode::Search)?, &cfg);
        }
        Command::Baseline { config, common } => {
            let cfg = experiment::parse_config(config.as_deref(), &common.overrides(None))?;
            report(&experiment::run_experiment(&cfg, Mode::Baseline)?, &cfg);
        }
        Command::Eval {
            arch,
            env,
            noise,
            episodes,
            trajectories,
            seed,
            slippery,
        } => {
            if episodes == 0 {
                return Err(Error::Config("episodes must be >= 1".into()));
            }
            let spec = noise.map(|(p1, p2)| NoiseSpec {
                p1,
                p2,
                trajectories,
            });
            if let Some(s) = &spec {
                s.validate().map_err(|e| Error::Config(e.to_string()))?;
            }
            let env = Env {
                kind: env,
                slippery,
            };
            let rep = experiment::evaluate_arch_file(&arch, env, episodes, spec.as_ref(), seed)?;
            println!("mean_return {}", rep.mean_return);
        }
    }
    Ok(())
}

fn report(outcome: &experiment::ExperimentOutcome, cfg: &experiment::ExperimentConfig) {
    for (i, r) in outcome.results.iter().enumerate() {
        let solved = r
            .episodes_to_solve
            .map_or_else(|| "unsolved".to_string(), |e| format!("solved at episode {e}"));
        println!("agent {i} (seed {}): {solved}, final avg {:.3}", r.seed, r.final_avg_return());
    }
    for ev in &outcome.evaluations {
        let noisy = ev
            .noisy
            .as_ref()
            .map(|n| format!(", noisy mean {:.3}", n.mean_return))
            .unwrap_or_default();
        println!(
            "rank {} (agent {}): mean {:.3}{noisy}",
            ev.rank, ev.agent, ev.noiseless.mean_return
        );
    }
    println!("results written to {}", cfg.output_dir.display());
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io { .. } => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}
