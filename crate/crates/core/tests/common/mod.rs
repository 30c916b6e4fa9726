//! Shared fixtures for the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use rand::Rng;

use dqas_rl::envs::{Env, EnvKind, EnvState, Transition};
use dqas_rl::qdqn::{default_observables, QHead, QNetworkPair, QParams};
use dqas_rl::qsim::Gate;
use dqas_rl::supernet::{build_pool, ArchitectureSample, PoolName, SuperCircuit};

pub fn random_gate<R: Rng>(rng: &mut R, n: usize) -> Gate {
    let q = rng.gen_range(0..n);
    let mut other = rng.gen_range(0..n - 1);
    if other >= q {
        other += 1;
    }
    let theta = rng.gen_range(-PI..PI);
    match rng.gen_range(0..7) {
        0 => Gate::Identity,
        1 => Gate::X(q),
        2 => Gate::Rx(q, theta),
        3 => Gate::Ry(q, theta),
        4 => Gate::Rz(q, theta),
        5 => Gate::Cz(q, other),
        _ => Gate::Cnot {
            control: q,
            target: other,
        },
    }
}

pub fn random_circuit<R: Rng>(rng: &mut R, n: usize, depth: usize) -> Vec<Gate> {
    (0..depth).map(|_| random_gate(rng, n)).collect()
}

/// Two-point central difference.
pub fn central_diff(mut f: impl FnMut(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// `|a - b| <= max(rel * |b|, abs)`.
pub fn close(a: f64, b: f64, rel: f64, abs: f64) -> bool {
    (a - b).abs() <= (rel * b.abs()).max(abs)
}

/// Transitions from a random-action rollout, restarting after episode ends.
pub fn random_transitions<R: Rng>(rng: &mut R, env: Env, count: usize) -> Vec<Transition> {
    let mut out = Vec::with_capacity(count);
    let mut state: EnvState = env.reset(rng);
    while out.len() < count {
        let action = rng.gen_range(0..env.num_actions());
        let step = env.step(&state, action, rng).unwrap();
        out.push(Transition {
            state: state.clone(),
            action,
            reward: step.reward,
            next_state: step.state.clone(),
            terminal: step.terminal,
        });
        state = if step.done() { env.reset(rng) } else { step.state };
    }
    out
}

/// A randomly initialized Q-learning problem on a super-circuit.
pub struct QdqnFixture {
    pub sc: SuperCircuit,
    pub pair: QNetworkPair,
    pub archs: Vec<ArchitectureSample>,
    pub batch: Vec<Transition>,
    pub gamma: f64,
}

pub fn random_qdqn<R: Rng>(rng: &mut R, blocks: usize, p: usize, n_archs: usize) -> QdqnFixture {
    let env_kind = if rng.gen_bool(0.5) {
        EnvKind::CartPole
    } else {
        EnvKind::FrozenLake
    };
    let pool_name = if rng.gen_bool(0.5) { PoolName::Op3 } else { PoolName::Op4 };
    let mut sc = SuperCircuit::new(build_pool(pool_name, 4).unwrap(), p, blocks, false, rng).unwrap();
    for a in sc.alpha.iter_mut() {
        *a = rng.gen_range(-1.0..1.0);
    }
    let mut head = QHead::new(default_observables(env_kind), 1.0);
    for w in head.w_out.iter_mut() {
        *w = rng.gen_range(0.5..3.0);
    }
    let mut pred = QParams::from_supercircuit(&sc, env_kind, head);
    for row in pred.encoding.w_in.iter_mut() {
        for w in row.iter_mut() {
            *w = rng.gen_range(0.5..1.5);
        }
    }
    let mut pair = QNetworkPair::new(pred);
    // A target network that differs from the prediction network.
    for t in pair.target.theta.iter_mut() {
        *t += rng.gen_range(-0.3..0.3);
    }
    let archs = (0..n_archs).map(|_| sc.sample_architecture(rng)).collect();
    let batch = random_transitions(rng, Env::new(env_kind), 4);
    QdqnFixture {
        sc,
        pair,
        archs,
        batch,
        gamma: 0.9,
    }
}
