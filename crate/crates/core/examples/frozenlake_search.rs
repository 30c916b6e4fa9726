//! Architecture search on FrozenLake with the op4 pool: one agent searches
//! for 300 episodes, then tunes the argmax architecture.
//!
//! ```text
//! cargo run --example frozenlake_search [seed]
//! ```

use dqas_rl::envs::EnvKind;
use dqas_rl::supernet::PoolName;
use dqas_rl::trainer::{self, Phase, TrainConfig};

fn main() -> dqas_rl::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let cfg = TrainConfig {
        pool: PoolName::Op4,
        seed,
        ..TrainConfig::for_env(EnvKind::FrozenLake)
    };
    let res = trainer::train_agent_seeded(&cfg)?;

    for snap in &res.alpha_trace {
        let argmax: Vec<usize> = snap
            .probs
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .fold((0, f64::MIN), |b, (j, &p)| if p > b.1 { (j, p) } else { b })
                    .0
            })
            .collect();
        println!("episode {:>4}: most likely ops {argmax:?}", snap.episode);
    }
    let ops = res.supercircuit.pool().ops();
    let arch: Vec<String> = res.architecture.choices.iter().map(|&c| ops[c].to_string()).collect();
    println!("chosen architecture: {arch:?}");
    let tuned = res.episodes.iter().filter(|e| e.phase == Phase::Tune).count();
    println!(
        "{} episodes ({tuned} tuning), {} gradient steps, final trailing mean {:.3}",
        res.episodes.len(),
        res.gradient_steps,
        res.final_avg_return()
    );
    match res.episodes_to_solve {
        Some(e) => println!("solved at episode {e}"),
        None => println!("not solved"),
    }
    println!("{}", res.record()?.to_json()?);
    Ok(())
}
