//! Property tests over random circuits, super-circuits and training runs.

mod common;

use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{central_diff, random_circuit, random_qdqn, random_transitions};
use dqas_rl::envs::{self, Env, EnvKind, EnvState, FrozenLakeState};
use dqas_rl::noise::{self, NoiseSpec};
use dqas_rl::qdqn::{self, GradMethod};
use dqas_rl::qsim::{self, Gate, Observable};
use dqas_rl::supernet::{
    build_pool, ArchitectureSample, OpKind, OperationPool, PoolName, PoolOperation, SuperCircuit,
};
use dqas_rl::trainer::{self, Phase, ReplayBuffer, TrainConfig};

fn small_pool(s: usize) -> OperationPool {
    let all = [OpKind::Ry, OpKind::Rz, OpKind::Cnot, OpKind::Identity];
    let ops = all[..s]
        .iter()
        .map(|&k| PoolOperation::new(k, vec![1, 2, 3, 4]))
        .collect();
    OperationPool::new(format!("s{s}"), 4, ops).unwrap()
}

fn enumerate(p: usize, s: usize) -> Vec<ArchitectureSample> {
    (0..s.pow(p as u32))
        .map(|mut k| {
            let choices = (0..p)
                .map(|_| {
                    let c = k % s;
                    k /= s;
                    c
                })
                .collect();
            ArchitectureSample::new(choices)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn norm_is_preserved(seed in any::<u64>(), depth in 0usize..=40) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gates = random_circuit(&mut rng, 4, depth);
        let psi = qsim::run_circuit(&gates, 4).unwrap();
        prop_assert!((psi.norm_sqr() - 1.0).abs() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn gate_matrices_are_unitary(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = common::random_gate(&mut rng, 4);
        let u = g.local_matrix();
        let d = if u.len() == 4 { 2 } else { 4 };
        for i in 0..d {
            for j in 0..d {
                let mut acc = Complex64::new(0.0, 0.0);
                for k in 0..d {
                    acc += u[i * d + k] * u[j * d + k].conj();
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                prop_assert!((acc - expect).norm() <= 1e-12, "{g:?} entry ({i},{j}) = {acc}");
            }
        }
    }

    #[test]
    fn param_shift_matches_finite_differences(seed in any::<u64>(), depth in 1usize..=25) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gates = random_circuit(&mut rng, 4, depth);
        let mask: Vec<usize> = (0..4).filter(|_| rng.gen_bool(0.5)).collect();
        let obs = Observable::z_on(4, &mask).unwrap();
        for (i, g) in gates.iter().enumerate() {
            let Some(theta) = g.angle() else { continue };
            let ps = qsim::param_shift_grad(&gates, i, &obs).unwrap();
            let fd = central_diff(|t| {
                let mut gs = gates.clone();
                gs[i] = g.with_angle(t).unwrap();
                qsim::expectation(&qsim::run_circuit(&gs, 4).unwrap(), &obs).unwrap()
            }, theta, 1e-5);
            prop_assert!((ps - fd).abs() <= 1e-5, "gate {i}: {ps} vs {fd}");
        }
    }

    #[test]
    fn simulation_is_pure(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gates = random_circuit(&mut rng, 4, 20);
        let a = qsim::run_circuit(&gates, 4).unwrap();
        let b = qsim::run_circuit(&gates, 4).unwrap();
        prop_assert_eq!(a.amplitudes(), b.amplitudes());
        let c = qsim::apply_gate(&a, &gates[0]).unwrap();
        let d = qsim::apply_gate(&a, &gates[0]).unwrap();
        prop_assert_eq!(c.amplitudes(), d.amplitudes());
    }

    #[test]
    fn probabilities_are_normalized(seed in any::<u64>(), p in 1usize..=3, s in 2usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sc = SuperCircuit::new(small_pool(s), p, 1, false, &mut rng).unwrap();
        for a in sc.alpha.iter_mut() {
            *a = rng.gen_range(-5.0..5.0);
        }
        for row in sc.placeholder_probs() {
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
        let total: f64 = enumerate(p, s).iter().map(|a| sc.architecture_prob(a).unwrap()).sum();
        prop_assert!((total - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn softmax_shift_invariance(seed in any::<u64>(), row in 0usize..4, c in -50.0f64..50.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sc = SuperCircuit::new(build_pool(PoolName::Op3, 4).unwrap(), 4, 1, false, &mut rng).unwrap();
        for a in sc.alpha.iter_mut() {
            *a = rng.gen_range(-3.0..3.0);
        }
        let mut shifted = sc.clone();
        let s = sc.pool_size();
        for a in &mut shifted.alpha[row * s..(row + 1) * s] {
            *a += c;
        }
        for (r0, r1) in sc.placeholder_probs().iter().zip(shifted.placeholder_probs()) {
            for (x, y) in r0.iter().zip(r1) {
                prop_assert!((x - y).abs() <= 1e-12);
            }
        }
        prop_assert_eq!(sc.argmax_architecture(), shifted.argmax_architecture());
        let mut r0 = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let mut r1 = r0.clone();
        let mut same = 0;
        for _ in 0..200 {
            if sc.sample_architecture(&mut r0) == shifted.sample_architecture(&mut r1) {
                same += 1;
            }
        }
        // Samples only differ when a uniform draw lands within 1e-12 of a bin edge.
        prop_assert!(same >= 199);
    }

    #[test]
    fn pruning_is_safe(seed in any::<u64>(), min_active in 1usize..=3) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut sc = SuperCircuit::new(build_pool(PoolName::Op3, 4).unwrap(), 4, 1, false, &mut rng).unwrap();
        for a in sc.alpha.iter_mut() {
            // Coarse values make ties common.
            *a = rng.gen_range(0..4) as f64 * 0.5;
        }
        let best = sc.argmax_architecture();
        for _ in 0..20 {
            sc.prune(min_active).unwrap();
            for i in 0..sc.placeholders() {
                prop_assert!(sc.active_count(i) >= min_active);
            }
            prop_assert_eq!(&sc.argmax_architecture(), &best);
        }
    }

    #[test]
    fn raw_q_in_unit_interval(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_qdqn(&mut rng, 2, 4, 1);
        for t in &f.batch {
            for e in qdqn::raw_expectations(&f.sc, &f.archs[0], &f.pair.pred, &t.state).unwrap() {
                let q = (e + 1.0) / 2.0;
                prop_assert!((-1e-12..=1.0 + 1e-12).contains(&q));
            }
        }
    }

    #[test]
    fn equal_losses_give_zero_alpha_gradient(seed in any::<u64>(), m in 2usize..10, l in -10.0f64..10.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let sc = SuperCircuit::new(build_pool(PoolName::Op4, 4).unwrap(), 4, 1, false, &mut rng).unwrap();
        let archs: Vec<_> = (0..m).map(|_| sc.sample_architecture(&mut rng)).collect();
        let g = qdqn::grad_alpha(&sc, &archs, &vec![l; m]).unwrap();
        prop_assert!(g.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn global_loss_is_linear_in_the_architecture_batch(seed in any::<u64>(), split in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_qdqn(&mut rng, 2, 3, 4);
        let whole = qdqn::global_loss(&f.sc, &f.archs, &f.pair, &f.batch, f.gamma).unwrap();
        let (a, b) = f.archs.split_at(split);
        let parts = qdqn::global_loss(&f.sc, a, &f.pair, &f.batch, f.gamma).unwrap()
            + qdqn::global_loss(&f.sc, b, &f.pair, &f.batch, f.gamma).unwrap();
        prop_assert!((whole - parts).abs() <= 1e-12 * whole.abs().max(1.0));
    }

    #[test]
    fn gradients_never_touch_the_target(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_qdqn(&mut rng, 2, 2, 2);
        let before = f.pair.clone();
        let g = qdqn::loss_gradients(&f.sc, &f.archs, &f.pair, &f.batch, f.gamma, GradMethod::Adjoint).unwrap();
        let mut pair = f.pair;
        for (t, d) in pair.pred.theta.iter_mut().zip(&g.theta) {
            *t -= 0.1 * d;
        }
        prop_assert_eq!(&pair.target, &before.target);
        pair.sync_target();
        prop_assert_eq!(&pair.target, &pair.pred);
        prop_assert_eq!(pair.steps_since_sync, 0);
    }

    #[test]
    fn replay_keeps_the_newest(capacity in 1usize..50, extra in 0usize..60) {
        let mut rng = ChaCha8Rng::seed_from_u64(capacity as u64);
        let all = random_transitions(&mut rng, Env::new(EnvKind::FrozenLake), capacity + extra);
        let mut buf = ReplayBuffer::new(capacity);
        for t in &all {
            buf.push(t.clone());
        }
        let kept: Vec<_> = buf.iter().cloned().collect();
        prop_assert_eq!(&kept[..], &all[extra..]);
    }

    #[test]
    fn env_steps_are_deterministic(seed in any::<u64>(), action in 0usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cell = rng.gen_range(0..16);
        let lake = EnvState::FrozenLake(FrozenLakeState { cell, steps: 0 });
        prop_assert_eq!(envs::step(&lake, action).unwrap(), envs::step(&lake, action).unwrap());
        let pole = envs::reset(EnvKind::CartPole, &mut rng);
        prop_assert_eq!(envs::step(&pole, action % 2).unwrap(), envs::step(&pole, action % 2).unwrap());
    }
}

#[test]
fn episode_length_and_reward_bounds() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for kind in [EnvKind::CartPole, EnvKind::FrozenLake] {
        let env = Env::new(kind);
        for _ in 0..200 {
            let mut state = env.reset(&mut rng);
            let (mut len, mut ret) = (0usize, 0.0);
            loop {
                // A biased policy keeps some CartPole episodes long.
                let a = if kind == EnvKind::CartPole {
                    match &state {
                        EnvState::CartPole(c) => usize::from(c.phi + 0.5 * c.phi_dot > 0.0),
                        _ => unreachable!(),
                    }
                } else {
                    rng.gen_range(0..4)
                };
                let step = env.step(&state, a, &mut rng).unwrap();
                len += 1;
                ret += step.reward;
                if step.done() {
                    break;
                }
                state = step.state;
            }
            match kind {
                EnvKind::CartPole => assert!(len <= 200 && (0.0..=200.0).contains(&ret)),
                EnvKind::FrozenLake => assert!(len <= 100 && (ret == 0.0 || ret == 1.0)),
            }
        }
    }
    let left = envs::step(&EnvState::FrozenLake(FrozenLakeState { cell: 4, steps: 0 }), 0).unwrap();
    assert_eq!(left.state, EnvState::FrozenLake(FrozenLakeState { cell: 4, steps: 1 }));
}

fn quick_lake() -> TrainConfig {
    TrainConfig {
        search_episodes: 60,
        tune_episodes: 60,
        prune_interval: 20,
        arch_batch: 3,
        blocks: 2,
        placeholders: 3,
        ..TrainConfig::for_env(EnvKind::FrozenLake)
    }
}

#[test]
fn training_loop_invariants() {
    for seed in 0..3 {
        let cfg = TrainConfig { seed, ..quick_lake() };
        let res = trainer::train_agent_seeded(&cfg).unwrap();
        assert!(res.episodes.len() <= cfg.search_episodes + cfg.tune_episodes);

        // Early stop happens at the first qualifying episode, never before W.
        let first = res
            .episodes
            .iter()
            .find(|e| e.episode >= cfg.window && e.avg_return >= cfg.solve_threshold());
        assert_eq!(first.map(|e| e.episode), res.episodes_to_solve);
        if let Some(e) = res.episodes_to_solve {
            assert_eq!(res.episodes.len(), e);
        }

        // The distribution is frozen once tuning starts.
        let tuning = res.episodes.iter().any(|e| e.phase == Phase::Tune);
        if tuning {
            let last = res.alpha_trace.last().unwrap();
            assert_eq!(last.episode, cfg.search_episodes);
            assert_eq!(last.probs, res.supercircuit.placeholder_probs());
        }
    }
}

#[test]
fn no_update_before_warmup() {
    // CartPole pays 1 per step, so returns count stored transitions.
    let cfg = TrainConfig {
        search_episodes: 4,
        tune_episodes: 4,
        arch_batch: 2,
        blocks: 1,
        minibatch: 40,
        seed: 1,
        ..TrainConfig::for_env(EnvKind::CartPole)
    };
    let res = trainer::train_agent_seeded(&cfg).unwrap();
    let mut stored = 0.0;
    for e in &res.episodes {
        let before = stored;
        stored += e.ret;
        if stored < cfg.minibatch as f64 {
            assert!(e.loss.is_none(), "episode {}", e.episode);
        }
        if before >= cfg.minibatch as f64 {
            assert!(e.loss.is_some(), "episode {}", e.episode);
        }
    }
    assert!(res.gradient_steps as f64 <= stored - cfg.minibatch as f64 + 1.0);
}

#[test]
fn agents_are_independent_of_launch_order() {
    let run = |seed| {
        let res = trainer::train_agent_seeded(&TrainConfig { seed, ..quick_lake() }).unwrap();
        (res.returns(), res.supercircuit.theta.clone(), res.architecture)
    };
    let forward = [run(11), run(12)];
    let handles: Vec<_> = [12u64, 11]
        .into_iter()
        .map(|s| std::thread::spawn(move || run(s)))
        .collect();
    let backward: Vec<_> = handles.into_iter().map(|h| h.join().unwrap()).collect();
    assert_eq!(forward[0], backward[1]);
    assert_eq!(forward[1], backward[0]);
}

#[test]
fn noise_contracts_and_averages() {
    let gates = vec![
        Gate::Ry(0, 0.3),
        Gate::Cnot { control: 0, target: 1 },
        Gate::Ry(1, -0.2),
        Gate::Cz(1, 2),
    ];
    let obs = Observable::z_on(3, &[1]).unwrap();
    let exact = qsim::expectation(&qsim::run_circuit(&gates, 3).unwrap(), &obs).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for p in [0.0, 0.05, 0.3] {
        let spec = NoiseSpec {
            p1: p,
            p2: p,
            trajectories: 20_000,
        };
        let est = noise::noisy_expectation(&gates, 3, &obs, &spec, &mut rng).unwrap();
        let sigma = 1.0 / (spec.trajectories as f64).sqrt();
        assert!(est.abs() <= exact.abs() + 3.0 * sigma, "p={p}: {est} vs {exact}");
    }

    // Standard error of the trajectory mean shrinks like 1/sqrt(N).
    let spec_at = |trajectories| NoiseSpec {
        p1: 0.2,
        p2: 0.2,
        trajectories,
    };
    let spread = |n: usize, rng: &mut ChaCha8Rng| {
        let xs: Vec<f64> = (0..300)
            .map(|_| noise::noisy_expectation(&gates, 3, &obs, &spec_at(n), rng).unwrap())
            .collect();
        let m = xs.iter().sum::<f64>() / xs.len() as f64;
        (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64).sqrt()
    };
    let ratio = spread(25, &mut rng) / spread(400, &mut rng);
    // Expected ratio sqrt(400 / 25) = 4.
    assert!((3.2..=4.8).contains(&ratio), "ratio {ratio}");
}

#[test]
fn noise_off_is_bit_identical() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let gates = random_circuit(&mut rng, 4, 30);
    let obs = [
        Observable::z_on(4, &[0, 1]).unwrap(),
        Observable::z_on(4, &[3]).unwrap(),
    ];
    let spec = NoiseSpec {
        p1: 0.0,
        p2: 0.0,
        trajectories: 10,
    };
    let psi = qsim::run_circuit(&gates, 4).unwrap();
    let exact: Vec<f64> = obs.iter().map(|o| qsim::expectation(&psi, o).unwrap()).collect();
    assert_eq!(noise::noisy_expectations(&gates, 4, &obs, &spec, &mut rng).unwrap(), exact);
}
