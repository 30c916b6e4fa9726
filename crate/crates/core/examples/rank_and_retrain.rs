//! Multi-agent search on FrozenLake: rank agents, write the result files,
//! then retrain the best architecture from fresh angles.
//!
//! ```text
//! cargo run --example rank_and_retrain [output_dir]
//! ```

use std::path::PathBuf;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dqas_rl::envs::EnvKind;
use dqas_rl::experiment::{self, ExperimentConfig, Mode};
use dqas_rl::noise::NoiseSpec;
use dqas_rl::trainer::{self, TrainConfig};

fn main() -> dqas_rl::Result<()> {
    let output_dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("dqas-rl-rank"));
    let cfg = ExperimentConfig {
        train: TrainConfig::for_env(EnvKind::FrozenLake),
        agents: 4,
        top_k: 2,
        noise: Some(NoiseSpec::default()),
        output_dir,
        ..ExperimentConfig::default()
    };
    let out = experiment::run_experiment(&cfg, Mode::Search)?;
    for (r, ev) in out.evaluations.iter().enumerate() {
        let arch: Vec<String> = out.ranked[r].record.choices.iter().map(|op| op.to_string()).collect();
        println!(
            "rank {} agent {} arch {arch:?}: mean {:.2}, noisy {:.2}",
            ev.rank,
            ev.agent,
            ev.noiseless.mean_return,
            ev.noisy.as_ref().map_or(f64::NAN, |n| n.mean_return)
        );
    }

    let best = &out.ranked[0].record;
    for seed in 100..103 {
        let tc = TrainConfig { seed, ..cfg.train.clone() };
        let res = trainer::retrain(&tc, best, &mut ChaCha8Rng::seed_from_u64(seed))?;
        println!("retrain seed {seed}: solved at {:?}", res.episodes_to_solve);
    }
    println!("files in {}", cfg.output_dir.display());
    Ok(())
}
