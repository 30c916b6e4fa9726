//! The hand-designed ry / rz / cz circuit trained on CartPole.
//! Takes a few minutes in release mode.
//!
//! ```text
//! cargo run --release --example cartpole_baseline [seed]
//! ```

use dqas_rl::envs::EnvKind;
use dqas_rl::trainer::{self, TrainConfig};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> dqas_rl::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let cfg = TrainConfig {
        seed,
        ..TrainConfig::for_env(EnvKind::CartPole)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let res = trainer::train_baseline(&cfg, &mut rng)?;
    for e in res.episodes.iter().filter(|e| e.episode % 50 == 0) {
        println!(
            "episode {:>4}  return {:>5}  trailing mean {:>7.2}  epsilon {:.3}",
            e.episode, e.ret, e.avg_return, e.epsilon
        );
    }
    match res.episodes_to_solve {
        Some(e) => println!("solved at episode {e}"),
        None => println!("not solved in {} episodes", res.episodes.len()),
    }
    Ok(())
}
