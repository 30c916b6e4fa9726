//! Q-values, TD loss and gradients of the quantum Q-network on a few
//! CartPole transitions.
//!
//! ```text
//! cargo run --example qnetwork_gradients
//! ```

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use dqas_rl::envs::{Env, EnvKind, Transition};
use dqas_rl::qdqn::{self, default_observables, GradMethod, QHead, QNetworkPair, QParams};
use dqas_rl::supernet::{build_pool, PoolName, SuperCircuit};

fn main() -> dqas_rl::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let sc = SuperCircuit::new(build_pool(PoolName::Op4, 4)?, 4, 2, false, &mut rng)?;
    let head = QHead::new(default_observables(EnvKind::CartPole), 50.0);
    let pair = QNetworkPair::new(QParams::from_supercircuit(&sc, EnvKind::CartPole, head));

    let env = Env::new(EnvKind::CartPole);
    let mut state = env.reset(&mut rng);
    let mut batch = Vec::new();
    for t in 0..6 {
        let action = t % 2;
        let step = env.step(&state, action, &mut rng)?;
        batch.push(Transition {
            state: state.clone(),
            action,
            reward: step.reward,
            next_state: step.state.clone(),
            terminal: step.terminal,
        });
        state = step.state;
    }

    let arch = sc.sample_architecture(&mut rng);
    println!("Q(s0) = {:?}", qdqn::q_values(&sc, &arch, &pair.pred, &batch[0].state)?);

    let archs = vec![arch.clone(), sc.sample_architecture(&mut rng)];
    let g = qdqn::loss_gradients(&sc, &archs, &pair, &batch, 0.99, GradMethod::Adjoint)?;
    let ps = qdqn::loss_gradients(&sc, &archs, &pair, &batch, 0.99, GradMethod::ParameterShift)?;
    let max_diff = g
        .theta
        .iter()
        .zip(&ps.theta)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("global loss {:.6} (per architecture {:?})", g.loss, g.per_arch_losses);
    println!("nonzero theta gradients: {}", g.theta.iter().filter(|x| **x != 0.0).count());
    println!("adjoint vs parameter shift, max |diff| = {max_diff:.3e}");
    println!("dL/dw_out = {:?}", g.w_out);
    let alpha = qdqn::grad_alpha(&sc, &archs, &g.per_arch_losses)?;
    println!("alpha gradient (first placeholder) = {:?}", &alpha[..sc.pool_size()]);
    Ok(())
}
