//! Trains the baseline on FrozenLake, then evaluates the greedy policy with
//! and without depolarizing noise.
//!
//! ```text
//! cargo run --example noisy_evaluation [p1 p2]
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dqas_rl::envs::{Env, EnvKind};
use dqas_rl::noise::NoiseSpec;
use dqas_rl::trainer::{self, TrainConfig};

fn main() -> dqas_rl::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|s| s.parse().ok()).collect();
    let spec = match args[..] {
        [p1, p2] => NoiseSpec {
            p1,
            p2,
            ..NoiseSpec::default()
        },
        _ => NoiseSpec::default(),
    };
    let cfg = TrainConfig::for_env(EnvKind::FrozenLake);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let res = trainer::train_baseline(&cfg, &mut rng)?;
    println!("training solved at {:?}", res.episodes_to_solve);

    let record = res.record()?;
    let env = Env::new(EnvKind::FrozenLake);
    let clean = trainer::evaluate_record(&record, env, 100, None, &mut rng)?;
    let noisy = trainer::evaluate_record(&record, env, 100, Some(&spec), &mut rng)?;
    println!("noiseless mean return: {:.3}", clean.mean_return);
    println!(
        "noisy mean return (p1={}, p2={}, {} trajectories): {:.3}",
        spec.p1, spec.p2, spec.trajectories, noisy.mean_return
    );
    Ok(())
}
