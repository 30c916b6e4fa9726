//! Quantum Q-network on top of a super-circuit.
//!
//! Each block re-uploads the environment state through `RX` rotations scaled
//! by trainable input weights, then applies the block's placeholder
//! operations. Action values are read from per-action Z-product observables:
//! `Q_a = w_out[a] * (<O_a> + 1) / 2`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::envs::{EnvKind, EnvState, Transition};
use crate::error::{Error, Result};
use crate::qsim::{self, Gate, Observable, State};
use crate::supernet::{ArchitectureSample, SuperCircuit};

/// How circuit derivatives are evaluated.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradMethod {
    /// Two shifted circuit evaluations per angle.
    ParameterShift,
    /// One reverse sweep per circuit; same values as the shift rule.
    #[default]
    Adjoint,
}

/// State encoding with trainable per-block, per-qubit input weights.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodingSpec {
    pub env_kind: EnvKind,
    /// `blocks x n`
    pub w_in: Vec<Vec<f64>>,
}

impl EncodingSpec {
    pub fn new(env_kind: EnvKind, blocks: usize, n: usize) -> Self {
        Self {
            env_kind,
            w_in: vec![vec![1.0; n]; blocks],
        }
    }

    pub fn blocks(&self) -> usize {
        self.w_in.len()
    }

    /// Raw features fed to each qubit before input scaling, i.e. the
    /// derivative of every encoding angle with respect to its input weight.
    pub fn features(&self, state: &EnvState, n: usize) -> Result<Vec<f64>> {
        if state.kind() != self.env_kind {
            return Err(Error::invalid(format!(
                "{} state given to {} encoding",
                state.kind(),
                self.env_kind
            )));
        }
        if n != 4 {
            return Err(Error::invalid(format!("encoding needs 4 qubits, got {n}")));
        }
        Ok(match state {
            EnvState::CartPole(s) => s.observation().to_vec(),
            EnvState::FrozenLake(s) => {
                if s.cell > 15 {
                    return Err(Error::invalid(format!("lake cell {} out of range", s.cell)));
                }
                (0..4).map(|i| PI * ((s.cell >> (3 - i)) & 1) as f64).collect()
            }
        })
    }
}

/// Encoding gates of one block: `RX(w_in[block][i] * feature_i)` on qubit `i`.
pub fn encode(state: &EnvState, spec: &EncodingSpec, block: usize) -> Result<Vec<Gate>> {
    let w = spec
        .w_in
        .get(block)
        .ok_or_else(|| Error::invalid(format!("block {block} has no input weights")))?;
    let x = spec.features(state, w.len())?;
    Ok(x.iter().zip(w).enumerate().map(|(q, (&xi, &wi))| Gate::Rx(q, wi * xi)).collect())
}

/// Observables `O_a` for the default readout of each environment.
pub fn default_observables(env_kind: EnvKind) -> Vec<Observable> {
    let z = |qs: &[usize]| Observable::z_on(4, qs).expect("4-qubit observable");
    match env_kind {
        EnvKind::CartPole => vec![z(&[0, 1]), z(&[2, 3])],
        EnvKind::FrozenLake => (0..4).map(|q| z(&[q])).collect(),
    }
}

/// Per-action observables and output scaling.
#[derive(Clone, Debug, PartialEq)]
pub struct QHead {
    pub observables: Vec<Observable>,
    pub w_out: Vec<f64>,
}

impl QHead {
    pub fn new(observables: Vec<Observable>, w_out_init: f64) -> Self {
        let w_out = vec![w_out_init; observables.len()];
        Self { observables, w_out }
    }

    pub fn num_actions(&self) -> usize {
        self.observables.len()
    }
}

/// Every trainable value of one Q-network.
#[derive(Clone, Debug, PartialEq)]
pub struct QParams {
    pub theta: Vec<f64>,
    pub encoding: EncodingSpec,
    pub head: QHead,
}

impl QParams {
    /// Takes the angles from `sc` and fresh unit input weights.
    pub fn from_supercircuit(sc: &SuperCircuit, env_kind: EnvKind, head: QHead) -> Self {
        Self {
            theta: sc.theta.clone(),
            encoding: EncodingSpec::new(env_kind, sc.blocks(), sc.num_qubits()),
            head,
        }
    }
}

/// Prediction network and its periodically synchronized target copy.
#[derive(Clone, Debug, PartialEq)]
pub struct QNetworkPair {
    pub pred: QParams,
    pub target: QParams,
    pub steps_since_sync: usize,
}

impl QNetworkPair {
    pub fn new(pred: QParams) -> Self {
        Self {
            target: pred.clone(),
            pred,
            steps_since_sync: 0,
        }
    }

    /// Copies the prediction network into the target network.
    pub fn sync_target(&mut self) {
        self.target.clone_from(&self.pred);
        self.steps_since_sync = 0;
    }
}

/// Where the angle of a circuit gate comes from.
#[derive(Clone, Copy, Debug)]
enum AngleSource {
    Fixed,
    Theta(usize),
    /// Encoding angle `w_in[block][qubit] * feature`.
    Input { block: usize, qubit: usize, feature: f64 },
}

fn tagged_circuit(
    sc: &SuperCircuit,
    arch: &ArchitectureSample,
    params: &QParams,
    state: &EnvState,
) -> Result<(Vec<Gate>, Vec<AngleSource>)> {
    let n = sc.num_qubits();
    if params.encoding.blocks() != sc.blocks() {
        return Err(Error::invalid(format!(
            "input weights cover {} blocks, super-circuit has {}",
            params.encoding.blocks(),
            sc.blocks()
        )));
    }
    if params.theta.len() != sc.theta.len() {
        return Err(Error::invalid("theta length does not match the super-circuit"));
    }
    let x = params.encoding.features(state, n)?;
    let mut gates = Vec::new();
    let mut sources = Vec::new();
    for b in 0..sc.blocks() {
        for (q, &xq) in x.iter().enumerate() {
            gates.push(Gate::Rx(q, params.encoding.w_in[b][q] * xq));
            sources.push(AngleSource::Input {
                block: b,
                qubit: q,
                feature: xq,
            });
        }
        for (g, idx) in sc.block_gates_with(&params.theta, b, arch) {
            gates.push(g);
            sources.push(idx.map_or(AngleSource::Fixed, AngleSource::Theta));
        }
    }
    Ok((gates, sources))
}

fn check_arch(sc: &SuperCircuit, arch: &ArchitectureSample) -> Result<()> {
    // Probability lookup validates length and mask membership.
    sc.architecture_prob(arch).map(|_| ())
}

/// Expectation `<O_a>` of every action observable.
pub fn raw_expectations(
    sc: &SuperCircuit,
    arch: &ArchitectureSample,
    params: &QParams,
    state: &EnvState,
) -> Result<Vec<f64>> {
    check_arch(sc, arch)?;
    let (gates, _) = tagged_circuit(sc, arch, params, state)?;
    let psi = qsim::run_circuit(&gates, sc.num_qubits())?;
    expectations_of(&psi, &params.head)
}

fn expectations_of(psi: &State, head: &QHead) -> Result<Vec<f64>> {
    head.observables.iter().map(|o| qsim::expectation(psi, o)).collect()
}

/// Action values `w_out[a] * (<O_a> + 1) / 2`.
pub fn q_values(
    sc: &SuperCircuit,
    arch: &ArchitectureSample,
    params: &QParams,
    state: &EnvState,
) -> Result<Vec<f64>> {
    let e = raw_expectations(sc, arch, params, state)?;
    Ok(scale_q(&e, &params.head.w_out))
}

/// Maps expectations to action values with the given output weights.
pub fn scale_q(expectations: &[f64], w_out: &[f64]) -> Vec<f64> {
    expectations
        .iter()
        .zip(w_out)
        .map(|(e, w)| w * (e + 1.0) / 2.0)
        .collect()
}

/// `r` for terminal transitions, otherwise `r + gamma * max_a' target_q[a']`.
pub fn td_target(transition: &Transition, target_q: &[f64], gamma: f64) -> f64 {
    if transition.terminal {
        transition.reward
    } else {
        let best = target_q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        transition.reward + gamma * best
    }
}

fn targets(
    sc: &SuperCircuit,
    arch: &ArchitectureSample,
    pair: &QNetworkPair,
    batch: &[Transition],
    gamma: f64,
) -> Result<Vec<f64>> {
    batch
        .iter()
        .map(|t| {
            let q = if t.terminal {
                Vec::new()
            } else {
                q_values(sc, arch, &pair.target, &t.next_state)?
            };
            Ok(td_target(t, &q, gamma))
        })
        .collect()
}

/// Mean squared TD error of the prediction network under `arch`; targets
/// come from the target network under the same architecture.
pub fn local_loss(
    sc: &SuperCircuit,
    arch: &ArchitectureSample,
    pair: &QNetworkPair,
    batch: &[Transition],
    gamma: f64,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::invalid("empty transition minibatch"));
    }
    let ys = targets(sc, arch, pair, batch, gamma)?;
    let mut total = 0.0;
    for (t, y) in batch.iter().zip(ys) {
        let q = q_values(sc, arch, &pair.pred, &t.state)?;
        let qa = *q
            .get(t.action)
            .ok_or_else(|| Error::invalid(format!("action {} has no Q-value", t.action)))?;
        total += (qa - y).powi(2);
    }
    Ok(total / batch.len() as f64)
}

/// Plain sum of local losses over the architecture batch.
pub fn global_loss(
    sc: &SuperCircuit,
    archs: &[ArchitectureSample],
    pair: &QNetworkPair,
    batch: &[Transition],
    gamma: f64,
) -> Result<f64> {
    archs.iter().map(|a| local_loss(sc, a, pair, batch, gamma)).sum()
}

/// Global loss together with its gradients with respect to the prediction
/// network's parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct LossGradients {
    pub loss: f64,
    pub per_arch_losses: Vec<f64>,
    pub theta: Vec<f64>,
    /// `blocks x n`
    pub w_in: Vec<Vec<f64>>,
    pub w_out: Vec<f64>,
}

/// Evaluates the global loss and its parameter gradients in one pass.
///
/// The squared error is differentiated analytically; circuit derivatives of
/// `<O_a>` with respect to every gate angle come from `method` and are routed
/// to `theta` or, through the encoding features, to `w_in`.
pub fn loss_gradients(
    sc: &SuperCircuit,
    archs: &[ArchitectureSample],
    pair: &QNetworkPair,
    batch: &[Transition],
    gamma: f64,
    method: GradMethod,
) -> Result<LossGradients> {
    if batch.is_empty() {
        return Err(Error::invalid("empty transition minibatch"));
    }
    let pred = &pair.pred;
    let n = sc.num_qubits();
    let mut out = LossGradients {
        loss: 0.0,
        per_arch_losses: Vec::with_capacity(archs.len()),
        theta: vec![0.0; pred.theta.len()],
        w_in: vec![vec![0.0; n]; sc.blocks()],
        w_out: vec![0.0; pred.head.num_actions()],
    };
    let scale = 1.0 / batch.len() as f64;
    for arch in archs {
        check_arch(sc, arch)?;
        let ys = targets(sc, arch, pair, batch, gamma)?;
        let mut local = 0.0;
        for (t, y) in batch.iter().zip(ys) {
            let obs = pred
                .head
                .observables
                .get(t.action)
                .ok_or_else(|| Error::invalid(format!("action {} has no observable", t.action)))?;
            let w = pred.head.w_out[t.action];
            let (gates, sources) = tagged_circuit(sc, arch, pred, &t.state)?;
            let (e, de) = match method {
                GradMethod::Adjoint => qsim::adjoint_gradient(&gates, obs)?,
                GradMethod::ParameterShift => {
                    let e = qsim::expectation(&qsim::run_circuit(&gates, n)?, obs)?;
                    let de = (0..gates.len())
                        .map(|j| {
                            if gates[j].kind().is_rotation() {
                                qsim::param_shift_grad(&gates, j, obs)
                            } else {
                                Ok(0.0)
                            }
                        })
                        .collect::<Result<Vec<_>>>()?;
                    (e, de)
                }
            };
            let raw = (e + 1.0) / 2.0;
            let err = w * raw - y;
            local += err * err * scale;
            let dl_dq = 2.0 * err * scale;
            out.w_out[t.action] += dl_dq * raw;
            let dl_de = dl_dq * w / 2.0;
            for (d, src) in de.iter().zip(&sources) {
                match *src {
                    AngleSource::Fixed => {}
                    AngleSource::Theta(j) => out.theta[j] += dl_de * d,
                    AngleSource::Input {
                        block,
                        qubit,
                        feature,
                    } => out.w_in[block][qubit] += dl_de * d * feature,
                }
            }
        }
        out.per_arch_losses.push(local);
        out.loss += local;
    }
    Ok(out)
}

/// Gradient of the global loss with respect to `theta`.
pub fn grad_theta(
    sc: &SuperCircuit,
    archs: &[ArchitectureSample],
    pair: &QNetworkPair,
    batch: &[Transition],
    gamma: f64,
    method: GradMethod,
) -> Result<Vec<f64>> {
    Ok(loss_gradients(sc, archs, pair, batch, gamma, method)?.theta)
}

/// Gradients of the global loss with respect to `(w_in, w_out)`.
pub fn grad_weights(
    sc: &SuperCircuit,
    archs: &[ArchitectureSample],
    pair: &QNetworkPair,
    batch: &[Transition],
    gamma: f64,
    method: GradMethod,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let g = loss_gradients(sc, archs, pair, batch, gamma, method)?;
    Ok((g.w_in, g.w_out))
}

/// Score-function estimate of the gradient of `E_P[L]` with respect to
/// `alpha`, using the batch mean as baseline:
///
/// `1/(m-1) * sum_k (L_k - mean(L)) * grad_alpha ln P(arch_k)`
///
/// where `grad ln P` for placeholder `i` is `onehot(choice_i) - softmax_i`.
/// The `1/(m-1)` factor compensates the baseline's dependence on each
/// `L_k`, which makes the estimate unbiased. Masked entries get 0.
pub fn grad_alpha(sc: &SuperCircuit, archs: &[ArchitectureSample], losses: &[f64]) -> Result<Vec<f64>> {
    if archs.len() != losses.len() {
        return Err(Error::invalid(format!(
            "{} architectures but {} losses",
            archs.len(),
            losses.len()
        )));
    }
    let m = archs.len();
    if m < 2 {
        return Err(Error::invalid("score-function gradient needs at least two samples"));
    }
    let s = sc.pool_size();
    let mut grad = vec![0.0; sc.placeholders() * s];
    if losses.iter().all(|&l| l == losses[0]) {
        return Ok(grad);
    }
    let baseline = losses.iter().sum::<f64>() / m as f64;
    let probs = sc.placeholder_probs();
    for (arch, &l) in archs.iter().zip(losses) {
        check_arch(sc, arch)?;
        let adv = (l - baseline) / (m - 1) as f64;
        for (i, &c) in arch.choices.iter().enumerate() {
            for j in 0..s {
                let onehot = if j == c { 1.0 } else { 0.0 };
                grad[i * s + j] += adv * (onehot - probs[i][j]);
            }
        }
    }
    Ok(grad)
}
