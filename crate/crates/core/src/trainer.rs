//! Architecture search and Q-learning loop.
//!
//! An agent first searches: every episode acts with one architecture drawn
//! from the super-circuit's distribution, and every environment step takes a
//! gradient step on the summed TD loss of a fresh batch of sampled
//! architectures, updating angles, input/output weights and the architecture
//! parameters together. Candidates are pruned periodically. After the search
//! budget the most probable architecture is frozen and only the circuit
//! parameters keep training. Training stops early once the trailing mean
//! return reaches the solve threshold.

use std::collections::VecDeque;
use std::fmt;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::envs::{Env, EnvKind, Transition};
use crate::error::{Error, Result};
use crate::noise::{self, NoiseSpec};
use crate::qdqn::{self, GradMethod, QHead, QNetworkPair, QParams};
use crate::qsim::Observable;
use crate::supernet::{
    baseline_choices, build_pool, ArchitectureRecord, ArchitectureSample, OperationPool, PoolName,
    SuperCircuit,
};

/// Bounded FIFO experience replay.
#[derive(Clone, Debug)]
pub struct ReplayBuffer {
    capacity: usize,
    items: VecDeque<Transition>,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            items: VecDeque::with_capacity(capacity.min(1 << 16)),
        }
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// `k` distinct transitions chosen uniformly at random.
    pub fn sample<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Result<Vec<Transition>> {
        if k > self.items.len() {
            return Err(Error::invalid(format!(
                "cannot sample {k} transitions from a buffer of {}",
                self.items.len()
            )));
        }
        Ok(index::sample(rng, self.items.len(), k)
            .into_iter()
            .map(|i| self.items[i])
            .collect())
    }
}

/// Adam moments for one parameter group.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(len: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    /// One bias-corrected Adam step applied in place.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::invalid(format!(
                "Adam state of size {} got {} parameters and {} gradients",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        for (((p, &g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            let m_hat = *m / bc1;
            let v_hat = *v / bc2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

/// Value-returning form of [`AdamState::step`].
pub fn adam_update(params: &[f64], grads: &[f64], st: &AdamState) -> Result<(Vec<f64>, AdamState)> {
    let mut p = params.to_vec();
    let mut s = st.clone();
    s.step(&mut p, grads)?;
    Ok((p, s))
}

/// Uniform random action with probability `eps`, else the first maximizer.
pub fn epsilon_greedy<R: Rng + ?Sized>(q: &[f64], eps: f64, rng: &mut R) -> usize {
    if rng.gen::<f64>() < eps {
        rng.gen_range(0..q.len())
    } else {
        argmax(q)
    }
}

fn argmax(q: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in q.iter().enumerate() {
        if v > q[best] {
            best = i;
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub env: EnvKind,
    pub pool: PoolName,
    pub blocks: usize,
    pub placeholders: usize,
    pub search_episodes: usize,
    pub tune_episodes: usize,
    pub minibatch: usize,
    pub arch_batch: usize,
    pub lr_theta: f64,
    pub lr_alpha: f64,
    pub lr_w_in: f64,
    pub lr_w_out: f64,
    /// Defaults to 0.99 on CartPole and 0.9 on FrozenLake.
    pub gamma: Option<f64>,
    pub epsilon_start: f64,
    pub epsilon_decay: f64,
    pub epsilon_min: f64,
    pub target_sync: usize,
    pub prune_interval: usize,
    pub min_active: usize,
    pub replay_capacity: usize,
    pub window: usize,
    /// Defaults to 195 on CartPole and 0.95 on FrozenLake.
    pub solve_threshold: Option<f64>,
    /// Defaults to 50 on CartPole and 1 on FrozenLake.
    pub w_out_init: Option<f64>,
    /// Per-action Z-product qubit lists; defaults per environment.
    pub observables: Option<Vec<Vec<usize>>>,
    pub share_block_params: bool,
    pub slippery: bool,
    pub grad_method: GradMethod,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            env: EnvKind::CartPole,
            pool: PoolName::Op4,
            blocks: 5,
            placeholders: 4,
            search_episodes: 300,
            tune_episodes: 1200,
            minibatch: 16,
            arch_batch: 8,
            lr_theta: 0.003,
            lr_alpha: 0.1,
            lr_w_in: 0.003,
            lr_w_out: 0.1,
            gamma: None,
            epsilon_start: 1.0,
            epsilon_decay: 0.99,
            epsilon_min: 0.01,
            target_sync: 20,
            prune_interval: 50,
            min_active: 2,
            replay_capacity: 10_000,
            window: 100,
            solve_threshold: None,
            w_out_init: None,
            observables: None,
            share_block_params: false,
            slippery: false,
            grad_method: GradMethod::Adjoint,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn for_env(env: EnvKind) -> Self {
        Self {
            env,
            ..Self::default()
        }
    }

    pub fn gamma(&self) -> f64 {
        self.gamma.unwrap_or(match self.env {
            EnvKind::CartPole => 0.99,
            EnvKind::FrozenLake => 0.9,
        })
    }

    pub fn solve_threshold(&self) -> f64 {
        self.solve_threshold.unwrap_or(match self.env {
            EnvKind::CartPole => 195.0,
            EnvKind::FrozenLake => 0.95,
        })
    }

    pub fn w_out_init(&self) -> f64 {
        self.w_out_init.unwrap_or(match self.env {
            EnvKind::CartPole => 50.0,
            EnvKind::FrozenLake => 1.0,
        })
    }

    pub fn observables(&self) -> Result<Vec<Observable>> {
        match &self.observables {
            None => Ok(qdqn::default_observables(self.env)),
            Some(lists) => {
                if lists.len() != self.env.num_actions() {
                    return Err(Error::Config(format!(
                        "{} observables given, {} has {} actions",
                        lists.len(),
                        self.env,
                        self.env.num_actions()
                    )));
                }
                lists.iter().map(|qs| Observable::z_on(4, qs)).collect()
            }
        }
    }

    /// Copy with every environment-dependent default made explicit.
    pub fn resolved(&self) -> Self {
        Self {
            gamma: Some(self.gamma()),
            solve_threshold: Some(self.solve_threshold()),
            w_out_init: Some(self.w_out_init()),
            observables: Some(self.observables.clone().unwrap_or_else(|| {
                qdqn::default_observables(self.env)
                    .iter()
                    .map(|o| {
                        o.factors()
                            .iter()
                            .enumerate()
                            .filter_map(|(q, &z)| z.then_some(q))
                            .collect()
                    })
                    .collect()
            })),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("blocks", self.blocks),
            ("placeholders", self.placeholders),
            ("minibatch", self.minibatch),
            ("arch_batch", self.arch_batch),
            ("target_sync", self.target_sync),
            ("prune_interval", self.prune_interval),
            ("min_active", self.min_active),
            ("replay_capacity", self.replay_capacity),
            ("window", self.window),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be >= 1")));
            }
        }
        if self.minibatch > self.replay_capacity {
            return Err(Error::Config("minibatch exceeds replay_capacity".into()));
        }
        let rates = [
            ("lr_theta", self.lr_theta),
            ("lr_alpha", self.lr_alpha),
            ("lr_w_in", self.lr_w_in),
            ("lr_w_out", self.lr_w_out),
        ];
        for (name, v) in rates {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be a positive number")));
            }
        }
        for (name, v) in [
            ("epsilon_start", self.epsilon_start),
            ("epsilon_min", self.epsilon_min),
            ("epsilon_decay", self.epsilon_decay),
            ("gamma", self.gamma()),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Config(format!("{name} must lie in [0, 1]")));
            }
        }
        if self.w_out_init() < 0.0 {
            return Err(Error::Config("w_out_init must be >= 0".into()));
        }
        self.observables()?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Search,
    Tune,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Search => "search",
            Phase::Tune => "tune",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeRecord {
    /// 1-based episode number.
    pub episode: usize,
    pub ret: f64,
    /// Mean return over the trailing window (or all episodes so far).
    pub avg_return: f64,
    /// Mean global loss over the gradient steps of the episode.
    pub loss: Option<f64>,
    pub epsilon: f64,
    pub phase: Phase,
}

/// Architecture probabilities at the end of an episode.
#[derive(Clone, Debug, PartialEq)]
pub struct AlphaSnapshot {
    pub episode: usize,
    pub probs: Vec<Vec<f64>>,
}

#[derive(Clone, Debug)]
pub struct AgentResult {
    pub seed: u64,
    pub env: EnvKind,
    pub window: usize,
    pub episodes: Vec<EpisodeRecord>,
    pub alpha_trace: Vec<AlphaSnapshot>,
    /// Final super-circuit; its `theta` holds the trained angles.
    pub supercircuit: SuperCircuit,
    pub architecture: ArchitectureSample,
    pub params: QParams,
    pub episodes_to_solve: Option<usize>,
    pub gradient_steps: usize,
}

impl AgentResult {
    pub fn returns(&self) -> Vec<f64> {
        self.episodes.iter().map(|e| e.ret).collect()
    }

    /// Mean return over the last `window` episodes (0 when none ran).
    pub fn final_avg_return(&self) -> f64 {
        self.episodes.last().map_or(0.0, |e| e.avg_return)
    }

    /// Discovered architecture with its trained angles and Q-head weights.
    pub fn record(&self) -> Result<ArchitectureRecord> {
        let mut rec = self.supercircuit.to_record(&self.architecture)?;
        rec.env = Some(self.env);
        rec.w_in = Some(self.params.encoding.w_in.clone());
        rec.w_out = Some(self.params.head.w_out.clone());
        Ok(rec)
    }
}

/// Runs the full search-then-tune schedule on a fresh super-circuit built
/// from `cfg.pool`.
pub fn train_agent<R: Rng + ?Sized>(cfg: &TrainConfig, rng: &mut R) -> Result<AgentResult> {
    cfg.validate()?;
    let pool = build_pool(cfg.pool, 4)?;
    let sc = SuperCircuit::new(pool, cfg.placeholders, cfg.blocks, cfg.share_block_params, rng)?;
    train_supercircuit(cfg, sc, rng)
}

/// Trains a fixed architecture from fresh angles: the whole episode budget
/// (search plus tune) is spent tuning.
pub fn train_fixed<R: Rng + ?Sized>(
    cfg: &TrainConfig,
    pool: OperationPool,
    choices: &[usize],
    rng: &mut R,
) -> Result<AgentResult> {
    cfg.validate()?;
    let sc = SuperCircuit::with_fixed_architecture(pool, cfg.blocks, choices, cfg.share_block_params, rng)?;
    let fixed = TrainConfig {
        search_episodes: 0,
        tune_episodes: cfg.search_episodes + cfg.tune_episodes,
        placeholders: choices.len(),
        ..cfg.clone()
    };
    train_supercircuit(&fixed, sc, rng)
}

/// The hand-designed ry / rz / cz block stacked `cfg.blocks` times.
pub fn train_baseline<R: Rng + ?Sized>(cfg: &TrainConfig, rng: &mut R) -> Result<AgentResult> {
    let pool = build_pool(PoolName::Op3, 4)?;
    let choices = baseline_choices(&pool)?;
    train_fixed(cfg, pool, &choices, rng)
}

/// Re-runs tuning on a previously discovered architecture with fresh angles.
pub fn retrain<R: Rng + ?Sized>(
    cfg: &TrainConfig,
    record: &ArchitectureRecord,
    rng: &mut R,
) -> Result<AgentResult> {
    let (sc, arch) = SuperCircuit::from_record(record)?;
    let cfg = TrainConfig {
        blocks: record.blocks,
        ..cfg.clone()
    };
    train_fixed(&cfg, sc.pool().clone(), &arch.choices, rng)
}

fn trailing_mean(returns: &[f64], window: usize) -> f64 {
    let tail = &returns[returns.len().saturating_sub(window)..];
    if tail.is_empty() {
        0.0
    } else {
        tail.iter().sum::<f64>() / tail.len() as f64
    }
}

/// Core training loop over a prepared super-circuit.
pub fn train_supercircuit<R: Rng + ?Sized>(
    cfg: &TrainConfig,
    mut sc: SuperCircuit,
    rng: &mut R,
) -> Result<AgentResult> {
    cfg.validate()?;
    let env = Env {
        kind: cfg.env,
        slippery: cfg.slippery,
    };
    let gamma = cfg.gamma();
    let threshold = cfg.solve_threshold();
    let head = QHead::new(cfg.observables()?, cfg.w_out_init());
    let mut pair = QNetworkPair::new(QParams::from_supercircuit(&sc, cfg.env, head));
    let n = sc.num_qubits();

    let mut adam_theta = AdamState::new(sc.theta.len(), cfg.lr_theta);
    let mut adam_alpha = AdamState::new(sc.alpha.len(), cfg.lr_alpha);
    let mut adam_w_in = AdamState::new(sc.blocks() * n, cfg.lr_w_in);
    let mut adam_w_out = AdamState::new(pair.pred.head.num_actions(), cfg.lr_w_out);

    let mut buffer = ReplayBuffer::new(cfg.replay_capacity);
    let mut eps = cfg.epsilon_start;
    let mut episodes = Vec::new();
    let mut returns = Vec::new();
    let mut alpha_trace = Vec::new();
    let mut gradient_steps = 0;
    let mut solved = None;
    let mut frozen: Option<ArchitectureSample> = None;
    let total = cfg.search_episodes + cfg.tune_episodes;

    for ep in 1..=total {
        let phase = if ep <= cfg.search_episodes {
            Phase::Search
        } else {
            Phase::Tune
        };
        let acting = match phase {
            Phase::Search => sc.sample_architecture(rng),
            Phase::Tune => frozen.get_or_insert_with(|| sc.argmax_architecture()).clone(),
        };

        let mut state = env.reset(rng);
        let mut ret = 0.0;
        let mut loss_sum = 0.0;
        let mut loss_steps = 0usize;
        loop {
            let q = qdqn::q_values(&sc, &acting, &pair.pred, &state)?;
            let action = epsilon_greedy(&q, eps, rng);
            let step = env.step(&state, action, rng)?;
            buffer.push(Transition {
                state,
                action,
                reward: step.reward,
                next_state: step.state,
                terminal: step.terminal,
            });
            ret += step.reward;

            if buffer.len() >= cfg.minibatch {
                let batch = buffer.sample(cfg.minibatch, rng)?;
                let archs: Vec<ArchitectureSample> = match phase {
                    Phase::Search => (0..cfg.arch_batch).map(|_| sc.sample_architecture(rng)).collect(),
                    Phase::Tune => vec![acting.clone()],
                };
                let g = qdqn::loss_gradients(&sc, &archs, &pair, &batch, gamma, cfg.grad_method)?;
                adam_theta.step(&mut pair.pred.theta, &g.theta)?;
                let mut w_in: Vec<f64> = pair.pred.encoding.w_in.concat();
                adam_w_in.step(&mut w_in, &g.w_in.concat())?;
                for (row, chunk) in pair.pred.encoding.w_in.iter_mut().zip(w_in.chunks(n)) {
                    row.copy_from_slice(chunk);
                }
                adam_w_out.step(&mut pair.pred.head.w_out, &g.w_out)?;
                pair.pred.head.w_out.iter_mut().for_each(|w| *w = w.max(0.0));
                if phase == Phase::Search && archs.len() >= 2 {
                    let ga = qdqn::grad_alpha(&sc, &archs, &g.per_arch_losses)?;
                    adam_alpha.step(&mut sc.alpha, &ga)?;
                }
                gradient_steps += 1;
                pair.steps_since_sync += 1;
                if pair.steps_since_sync >= cfg.target_sync {
                    pair.sync_target();
                }
                loss_sum += g.loss;
                loss_steps += 1;
            }

            state = step.state;
            if step.done() {
                break;
            }
        }

        returns.push(ret);
        let avg = trailing_mean(&returns, cfg.window);
        episodes.push(EpisodeRecord {
            episode: ep,
            ret,
            avg_return: avg,
            loss: (loss_steps > 0).then(|| loss_sum / loss_steps as f64),
            epsilon: eps,
            phase,
        });
        eps = (eps * cfg.epsilon_decay).max(cfg.epsilon_min);

        let is_solved = ep >= cfg.window && avg >= threshold;
        if phase == Phase::Search {
            let last_search = ep == cfg.search_episodes || is_solved;
            if ep % cfg.prune_interval == 0 || last_search {
                alpha_trace.push(AlphaSnapshot {
                    episode: ep,
                    probs: sc.placeholder_probs(),
                });
            }
            if ep % cfg.prune_interval == 0 && !last_search {
                sc.prune(cfg.min_active)?;
            }
        }
        if is_solved {
            solved = Some(ep);
            break;
        }
    }

    let architecture = frozen.unwrap_or_else(|| sc.argmax_architecture());
    sc.theta.clone_from(&pair.pred.theta);
    Ok(AgentResult {
        seed: 0,
        env: cfg.env,
        window: cfg.window,
        episodes,
        alpha_trace,
        supercircuit: sc,
        architecture,
        params: pair.pred,
        episodes_to_solve: solved,
        gradient_steps,
    })
}

/// Trains with a generator seeded from `cfg.seed`, so agents are isolated.
pub fn train_agent_seeded(cfg: &TrainConfig) -> Result<AgentResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut res = train_agent(cfg, &mut rng)?;
    res.seed = cfg.seed;
    Ok(res)
}

/// A ranked agent's discovered architecture.
#[derive(Clone, Debug, PartialEq)]
pub struct RankedArchitecture {
    pub agent: usize,
    pub record: ArchitectureRecord,
}

/// Agent indices ordered by episodes-to-solve (unsolved last), then by final
/// trailing mean return (descending), then by agent index.
pub fn ranking_order(results: &[AgentResult]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..results.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (&results[a], &results[b]);
        let sa = ra.episodes_to_solve.unwrap_or(usize::MAX);
        let sb = rb.episodes_to_solve.unwrap_or(usize::MAX);
        sa.cmp(&sb).then_with(|| {
            rb.final_avg_return()
                .partial_cmp(&ra.final_avg_return())
                .unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    order
}

/// The `k` best agents' architectures with their angles.
pub fn rank_agents(results: &[AgentResult], k: usize) -> Result<Vec<RankedArchitecture>> {
    if k > results.len() {
        return Err(Error::invalid(format!(
            "top-{k} requested from {} agents",
            results.len()
        )));
    }
    ranking_order(results)
        .into_iter()
        .take(k)
        .map(|i| {
            Ok(RankedArchitecture {
                agent: i,
                record: results[i].record()?,
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub mean_return: f64,
    pub returns: Vec<f64>,
}

/// Greedy rollouts with frozen parameters, optionally with noisy Q-values.
pub fn evaluate<R: Rng + ?Sized>(
    sc: &SuperCircuit,
    arch: &ArchitectureSample,
    params: &QParams,
    env: Env,
    episodes: usize,
    noise: Option<&NoiseSpec>,
    rng: &mut R,
) -> Result<EvalReport> {
    if episodes == 0 {
        return Err(Error::invalid("evaluation needs at least one episode"));
    }
    if params.encoding.env_kind != env.kind {
        return Err(Error::invalid("parameters were trained for another environment"));
    }
    let mut returns = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut state = env.reset(rng);
        let mut ret = 0.0;
        loop {
            let q = match noise {
                None => qdqn::q_values(sc, arch, params, &state)?,
                Some(spec) => {
                    let enc = (0..sc.blocks())
                        .map(|b| qdqn::encode(&state, &params.encoding, b))
                        .collect::<Result<Vec<_>>>()?;
                    let mut ang = sc.clone();
                    ang.theta.clone_from(&params.theta);
                    let gates = ang.realize_circuit(arch, &enc)?;
                    let e = noise::noisy_expectations(
                        &gates,
                        sc.num_qubits(),
                        &params.head.observables,
                        spec,
                        rng,
                    )?;
                    qdqn::scale_q(&e, &params.head.w_out)
                }
            };
            let step = env.step(&state, argmax(&q), rng)?;
            ret += step.reward;
            state = step.state;
            if step.done() {
                break;
            }
        }
        returns.push(ret);
    }
    let mean_return = returns.iter().sum::<f64>() / episodes as f64;
    Ok(EvalReport {
        mean_return,
        returns,
    })
}

/// Evaluates a serialized architecture that carries its Q-head weights.
pub fn evaluate_record<R: Rng + ?Sized>(
    record: &ArchitectureRecord,
    env: Env,
    episodes: usize,
    noise: Option<&NoiseSpec>,
    rng: &mut R,
) -> Result<EvalReport> {
    let (sc, arch) = SuperCircuit::from_record(record)?;
    let params = params_from_record(record, &sc, env.kind)?;
    evaluate(&sc, &arch, &params, env, episodes, noise, rng)
}

/// Q-network parameters stored in a record; missing weights fall back to
/// unit input weights and the default output scale of `env`.
pub fn params_from_record(record: &ArchitectureRecord, sc: &SuperCircuit, env: EnvKind) -> Result<QParams> {
    let cfg = TrainConfig::for_env(env);
    let mut head = QHead::new(cfg.observables()?, cfg.w_out_init());
    if let Some(w) = &record.w_out {
        if w.len() != head.num_actions() {
            return Err(Error::invalid("record w_out does not match the action count"));
        }
        head.w_out.clone_from(w);
    }
    let mut params = QParams::from_supercircuit(sc, env, head);
    if let Some(w) = &record.w_in {
        if w.len() != sc.blocks() || w.iter().any(|r| r.len() != sc.num_qubits()) {
            return Err(Error::invalid("record w_in shape does not match the circuit"));
        }
        params.encoding.w_in.clone_from(w);
    }
    Ok(params)
}
