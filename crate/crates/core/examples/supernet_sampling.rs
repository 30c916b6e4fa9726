//! Architecture distribution of a super-circuit: sampling, argmax and
//! progressive pruning.
//!
//! ```text
//! cargo run --example supernet_sampling
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dqas_rl::supernet::{build_pool, PoolName, SuperCircuit};

fn main() -> dqas_rl::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pool = build_pool(PoolName::Op4, 4)?;
    println!("pool {} ({} candidates):", pool.name(), pool.len());
    for (i, op) in pool.ops().iter().enumerate() {
        println!("  {i}: {op} ({} params)", op.param_count());
    }

    let mut sc = SuperCircuit::new(pool, 4, 5, false, &mut rng)?;
    // Skew the logits so the distribution is not uniform.
    for (k, a) in sc.alpha.iter_mut().enumerate() {
        *a = ((k * 7) % 5) as f64 * 0.4;
    }

    let names = |sc: &SuperCircuit, choices: &[usize]| -> Vec<String> {
        choices.iter().map(|&c| sc.pool().ops()[c].to_string()).collect()
    };
    for _ in 0..3 {
        let a = sc.sample_architecture(&mut rng);
        println!("sample {:?}  P = {:.5}", names(&sc, &a.choices), sc.architecture_prob(&a)?);
    }
    let best = sc.argmax_architecture();
    println!("argmax {:?}", names(&sc, &best.choices));

    while (0..sc.placeholders()).any(|i| sc.active_count(i) > 2) {
        let removed = sc.prune(2)?;
        println!("pruned {removed:?}");
    }
    assert_eq!(sc.argmax_architecture(), best);
    for (i, row) in sc.placeholder_probs().iter().enumerate() {
        let live: Vec<String> = row
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(j, p)| format!("{}={p:.3}", sc.pool().ops()[j]))
            .collect();
        println!("placeholder {i}: {}", live.join(" "));
    }
    Ok(())
}
