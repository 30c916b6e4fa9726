//! Super-circuit search space.
//!
//! A super-circuit stacks `blocks` copies of a parameterized block. Every
//! block holds `p` placeholders; each placeholder spans the whole register
//! and is filled by one element of an [`OperationPool`]. The architecture
//! parameters `alpha` (one row per placeholder) define a product-of-softmax
//! distribution over architectures, and all sampled architectures share the
//! same angle tensor `theta`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::envs::EnvKind;
use crate::error::{Error, Result};
use crate::qsim::Gate;

/// Gate type of a pool element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OpKind {
    Ry,
    Rz,
    Cz,
    Cnot,
    Identity,
}

impl OpKind {
    pub fn is_parameterized(self) -> bool {
        matches!(self, OpKind::Ry | OpKind::Rz)
    }

    fn as_str(self) -> &'static str {
        match self {
            OpKind::Ry => "ry",
            OpKind::Rz => "rz",
            OpKind::Cz => "cz",
            OpKind::Cnot => "cnot",
            OpKind::Identity => "identity",
        }
    }
}

/// A gate type together with the qubits it acts on (1-based labels).
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PoolOperation {
    pub kind: OpKind,
    pub working_range: Vec<usize>,
}

impl PoolOperation {
    pub fn new(kind: OpKind, working_range: Vec<usize>) -> Self {
        Self {
            kind,
            working_range,
        }
    }

    pub fn param_count(&self) -> usize {
        if self.kind.is_parameterized() {
            self.working_range.len()
        } else {
            0
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        let r = &self.working_range;
        if r.is_empty() {
            return Err(Error::invalid(format!("{self}: empty working range")));
        }
        for (i, &q) in r.iter().enumerate() {
            if q == 0 || q > n {
                return Err(Error::invalid(format!("{self}: label {q} outside 1..={n}")));
            }
            if r[..i].contains(&q) {
                return Err(Error::invalid(format!("{self}: repeated label {q}")));
            }
        }
        if matches!(self.kind, OpKind::Cz | OpKind::Cnot) && r.len() < 2 {
            return Err(Error::invalid(format!("{self}: two-qubit gate needs two labels")));
        }
        Ok(())
    }

    fn is_full_range(&self, n: usize) -> bool {
        self.working_range.len() == n && self.working_range.iter().copied().eq(1..=n)
    }

    /// Expands into concrete gates. `angles` supplies one angle per qubit of
    /// the working range for rotation kinds and is ignored otherwise.
    pub fn expand(&self, n: usize, angles: &[f64]) -> Vec<Gate> {
        let qs: Vec<usize> = self.working_range.iter().map(|&q| q - 1).collect();
        match self.kind {
            OpKind::Identity => Vec::new(),
            OpKind::Ry => qs.iter().zip(angles).map(|(&q, &t)| Gate::Ry(q, t)).collect(),
            OpKind::Rz => qs.iter().zip(angles).map(|(&q, &t)| Gate::Rz(q, t)).collect(),
            OpKind::Cz | OpKind::Cnot => {
                let mut pairs: Vec<(usize, usize)> = qs.windows(2).map(|w| (w[0], w[1])).collect();
                if self.is_full_range(n) && qs.len() > 2 {
                    pairs.push((qs[qs.len() - 1], qs[0]));
                }
                pairs
                    .into_iter()
                    .map(|(a, b)| match self.kind {
                        OpKind::Cz => Gate::Cz(a, b),
                        _ => Gate::Cnot {
                            control: a,
                            target: b,
                        },
                    })
                    .collect()
            }
        }
    }
}

impl fmt::Display for PoolOperation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<String> = self.working_range.iter().map(|q| q.to_string()).collect();
        write!(f, "{}[{}]", self.kind.as_str(), labels.join(","))
    }
}

/// Names of the operation pools that ship with the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PoolName {
    Op3,
    Op4,
}

impl PoolName {
    pub fn as_str(self) -> &'static str {
        match self {
            PoolName::Op3 => "op3",
            PoolName::Op4 => "op4",
        }
    }
}

impl FromStr for PoolName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "op3" => Ok(PoolName::Op3),
            "op4" => Ok(PoolName::Op4),
            other => Err(Error::invalid(format!(
                "unknown operation pool `{other}`; valid pools are op3, op4"
            ))),
        }
    }
}

impl fmt::Display for PoolName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OperationPool {
    name: String,
    n: usize,
    ops: Vec<PoolOperation>,
}

impl OperationPool {
    /// Custom pool; needs at least two operations, one of them parameterized.
    pub fn new(name: impl Into<String>, n: usize, ops: Vec<PoolOperation>) -> Result<Self> {
        if ops.len() < 2 {
            return Err(Error::invalid("operation pool needs at least two operations"));
        }
        if !ops.iter().any(|o| o.kind.is_parameterized()) {
            return Err(Error::invalid("operation pool has no parameterized operation"));
        }
        for op in &ops {
            op.validate(n)?;
        }
        Ok(Self {
            name: name.into(),
            n,
            ops,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn ops(&self) -> &[PoolOperation] {
        &self.ops
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Largest parameter count over the pool.
    pub fn max_params(&self) -> usize {
        self.ops.iter().map(PoolOperation::param_count).max().unwrap_or(0)
    }

    pub fn position(&self, op: &PoolOperation) -> Option<usize> {
        self.ops.iter().position(|o| o == op)
    }
}

/// Builds one of the shipped pools on a 4-qubit register.
pub fn build_pool(name: PoolName, n: usize) -> Result<OperationPool> {
    if n != 4 {
        return Err(Error::invalid(format!(
            "pools {name} are defined for 4 qubits, got {n}"
        )));
    }
    use OpKind::*;
    let full = || vec![1, 2, 3, 4];
    let (head, subranges): (Vec<OpKind>, Vec<Vec<usize>>) = match name {
        PoolName::Op3 => (
            vec![Ry, Rz, Cz, Cnot, Identity],
            vec![vec![1, 2, 3], vec![2, 3, 4], vec![1, 2], vec![2, 3], vec![3, 4]],
        ),
        PoolName::Op4 => (
            vec![Ry, Rz, Cnot, Identity],
            vec![vec![1, 2, 3], vec![2, 3, 4]],
        ),
    };
    let mut ops: Vec<PoolOperation> = head.into_iter().map(|k| PoolOperation::new(k, full())).collect();
    for r in subranges {
        ops.push(PoolOperation::new(Ry, r.clone()));
        ops.push(PoolOperation::new(Rz, r));
    }
    OperationPool::new(name.as_str(), n, ops)
}

/// Pool indices of the fixed ry / rz / cz baseline block inside `op3`.
pub fn baseline_choices(pool: &OperationPool) -> Result<Vec<usize>> {
    let n = pool.num_qubits();
    let full: Vec<usize> = (1..=n).collect();
    [OpKind::Ry, OpKind::Rz, OpKind::Cz]
        .into_iter()
        .map(|k| {
            pool.position(&PoolOperation::new(k, full.clone()))
                .ok_or_else(|| Error::invalid(format!("pool {} lacks full-range {k:?}", pool.name())))
        })
        .collect()
}

/// One pool index per placeholder.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ArchitectureSample {
    pub choices: Vec<usize>,
}

impl ArchitectureSample {
    pub fn new(choices: Vec<usize>) -> Self {
        Self { choices }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuperCircuit {
    pool: OperationPool,
    p: usize,
    blocks: usize,
    share_block_params: bool,
    /// `p x s`, row-major.
    pub alpha: Vec<f64>,
    /// `theta_blocks x p x s x l`, row-major.
    pub theta: Vec<f64>,
    active: Vec<bool>,
}

impl SuperCircuit {
    /// Uniform architecture distribution and angles drawn from `[-pi, pi)`.
    /// With `share_block_params` every block reads the same angles.
    pub fn new<R: Rng + ?Sized>(
        pool: OperationPool,
        p: usize,
        blocks: usize,
        share_block_params: bool,
        rng: &mut R,
    ) -> Result<Self> {
        if p == 0 || blocks == 0 {
            return Err(Error::invalid("placeholder and block counts must be >= 1"));
        }
        let s = pool.len();
        let l = pool.max_params();
        let tb = if share_block_params { 1 } else { blocks };
        let theta = (0..tb * p * s * l).map(|_| rng.gen_range(-PI..PI)).collect();
        Ok(Self {
            pool,
            p,
            blocks,
            share_block_params,
            alpha: vec![0.0; p * s],
            theta,
            active: vec![true; p * s],
        })
    }

    /// A super-circuit whose distribution is a point mass on `choices`
    /// (every other candidate is masked out).
    pub fn with_fixed_architecture<R: Rng + ?Sized>(
        pool: OperationPool,
        blocks: usize,
        choices: &[usize],
        share_block_params: bool,
        rng: &mut R,
    ) -> Result<Self> {
        let s = pool.len();
        if let Some(&c) = choices.iter().find(|&&c| c >= s) {
            return Err(Error::invalid(format!("choice {c} outside pool of size {s}")));
        }
        let mut sc = Self::new(pool, choices.len(), blocks, share_block_params, rng)?;
        sc.active.iter_mut().for_each(|a| *a = false);
        for (i, &c) in choices.iter().enumerate() {
            sc.active[i * s + c] = true;
        }
        Ok(sc)
    }

    pub fn pool(&self) -> &OperationPool {
        &self.pool
    }

    pub fn num_qubits(&self) -> usize {
        self.pool.num_qubits()
    }

    pub fn placeholders(&self) -> usize {
        self.p
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn pool_size(&self) -> usize {
        self.pool.len()
    }

    pub fn max_params(&self) -> usize {
        self.pool.max_params()
    }

    pub fn shares_block_params(&self) -> bool {
        self.share_block_params
    }

    pub fn is_active(&self, placeholder: usize, op: usize) -> bool {
        self.active[placeholder * self.pool.len() + op]
    }

    pub fn active_count(&self, placeholder: usize) -> usize {
        let s = self.pool.len();
        self.active[placeholder * s..(placeholder + 1) * s]
            .iter()
            .filter(|&&a| a)
            .count()
    }

    /// Flat index into `theta`.
    pub fn theta_index(&self, block: usize, placeholder: usize, op: usize, slot: usize) -> usize {
        let tb = if self.share_block_params { 0 } else { block };
        ((tb * self.p + placeholder) * self.pool.len() + op) * self.pool.max_params() + slot
    }

    /// Softmax of each alpha row over its active entries; masked entries are 0.
    pub fn placeholder_probs(&self) -> Vec<Vec<f64>> {
        (0..self.p).map(|i| self.row_probs(i)).collect()
    }

    fn row_probs(&self, i: usize) -> Vec<f64> {
        let s = self.pool.len();
        let row = &self.alpha[i * s..(i + 1) * s];
        let mask = &self.active[i * s..(i + 1) * s];
        let max = row
            .iter()
            .zip(mask)
            .filter(|(_, &m)| m)
            .map(|(&a, _)| a)
            .fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = row
            .iter()
            .zip(mask)
            .map(|(&a, &m)| if m { (a - max).exp() } else { 0.0 })
            .collect();
        let total: f64 = exps.iter().sum();
        exps.into_iter().map(|e| e / total).collect()
    }

    fn check_arch(&self, arch: &ArchitectureSample) -> Result<()> {
        if arch.choices.len() != self.p {
            return Err(Error::invalid(format!(
                "architecture has {} choices, super-circuit has {} placeholders",
                arch.choices.len(),
                self.p
            )));
        }
        for (i, &c) in arch.choices.iter().enumerate() {
            if c >= self.pool.len() || !self.is_active(i, c) {
                return Err(Error::invalid(format!(
                    "choice {c} is not an active candidate of placeholder {i}"
                )));
            }
        }
        Ok(())
    }

    /// Probability of `arch` under the product-of-softmax model.
    pub fn architecture_prob(&self, arch: &ArchitectureSample) -> Result<f64> {
        self.check_arch(arch)?;
        Ok(arch
            .choices
            .iter()
            .enumerate()
            .map(|(i, &c)| self.row_probs(i)[c])
            .product())
    }

    /// Draws every placeholder independently from its probability row.
    pub fn sample_architecture<R: Rng + ?Sized>(&self, rng: &mut R) -> ArchitectureSample {
        let choices = (0..self.p)
            .map(|i| {
                let probs = self.row_probs(i);
                let u: f64 = rng.gen();
                let mut acc = 0.0;
                let mut last_active = 0;
                for (j, &q) in probs.iter().enumerate() {
                    if q > 0.0 {
                        last_active = j;
                        acc += q;
                        if u < acc {
                            return j;
                        }
                    }
                }
                last_active
            })
            .collect();
        ArchitectureSample { choices }
    }

    /// Active index of maximal probability per placeholder, ties to the
    /// lowest index.
    pub fn argmax_architecture(&self) -> ArchitectureSample {
        let choices = (0..self.p)
            .map(|i| {
                let probs = self.row_probs(i);
                let mut best = None::<usize>;
                for (j, &q) in probs.iter().enumerate() {
                    if self.is_active(i, j) && best.map_or(true, |b| q > probs[b]) {
                        best = Some(j);
                    }
                }
                best.expect("every placeholder keeps an active candidate")
            })
            .collect();
        ArchitectureSample { choices }
    }

    /// Gates of one parameterized block, each paired with the flat `theta`
    /// index its angle was read from (`None` for fixed gates).
    pub fn block_gates(&self, block: usize, arch: &ArchitectureSample) -> Vec<(Gate, Option<usize>)> {
        self.block_gates_with(&self.theta, block, arch)
    }

    /// Like [`Self::block_gates`] but reading angles from an external tensor
    /// laid out like `self.theta` (e.g. a target-network copy).
    pub fn block_gates_with(
        &self,
        theta: &[f64],
        block: usize,
        arch: &ArchitectureSample,
    ) -> Vec<(Gate, Option<usize>)> {
        let n = self.num_qubits();
        let mut out = Vec::new();
        for (i, &c) in arch.choices.iter().enumerate() {
            let op = &self.pool.ops[c];
            let idx: Vec<usize> = (0..op.param_count())
                .map(|k| self.theta_index(block, i, c, k))
                .collect();
            let angles: Vec<f64> = idx.iter().map(|&j| theta[j]).collect();
            let gates = op.expand(n, &angles);
            if op.kind.is_parameterized() {
                out.extend(gates.into_iter().zip(idx.into_iter().map(Some)));
            } else {
                out.extend(gates.into_iter().map(|g| (g, None)));
            }
        }
        out
    }

    /// Full circuit: for each block its encoding gates followed by the
    /// expansion of every chosen placeholder operation.
    pub fn realize_circuit(
        &self,
        arch: &ArchitectureSample,
        encoding_per_block: &[Vec<Gate>],
    ) -> Result<Vec<Gate>> {
        self.check_arch(arch)?;
        if encoding_per_block.len() != self.blocks {
            return Err(Error::invalid(format!(
                "{} encoding layers supplied for {} blocks",
                encoding_per_block.len(),
                self.blocks
            )));
        }
        let mut gates = Vec::new();
        for (b, enc) in encoding_per_block.iter().enumerate() {
            gates.extend_from_slice(enc);
            gates.extend(self.block_gates(b, arch).into_iter().map(|(g, _)| g));
        }
        Ok(gates)
    }

    /// Masks the least probable active candidate of every placeholder that
    /// still has more than `min_active` candidates. Among equally improbable
    /// candidates the highest index goes first, so the argmax never changes.
    /// Returns the removed `(placeholder, op)` pairs.
    pub fn prune(&mut self, min_active: usize) -> Result<Vec<(usize, usize)>> {
        if min_active == 0 {
            return Err(Error::invalid("min_active must be >= 1"));
        }
        let s = self.pool.len();
        let mut removed = Vec::new();
        for i in 0..self.p {
            if self.active_count(i) <= min_active {
                continue;
            }
            let probs = self.row_probs(i);
            let mut worst = None::<usize>;
            for j in 0..s {
                if self.is_active(i, j) && worst.map_or(true, |w| probs[j] <= probs[w]) {
                    worst = Some(j);
                }
            }
            if let Some(w) = worst {
                self.active[i * s + w] = false;
                removed.push((i, w));
            }
        }
        Ok(removed)
    }

    /// Angles used by `arch`, shaped `[block][placeholder][slot]`.
    pub fn chosen_theta(&self, arch: &ArchitectureSample) -> Vec<Vec<Vec<f64>>> {
        (0..self.blocks)
            .map(|b| {
                arch.choices
                    .iter()
                    .enumerate()
                    .map(|(i, &c)| {
                        (0..self.pool.ops[c].param_count())
                            .map(|k| self.theta[self.theta_index(b, i, c, k)])
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    pub fn to_record(&self, arch: &ArchitectureSample) -> Result<ArchitectureRecord> {
        self.check_arch(arch)?;
        Ok(ArchitectureRecord {
            pool_name: self.pool.name.clone(),
            p: self.p,
            blocks: self.blocks,
            choices: arch.choices.iter().map(|&c| self.pool.ops[c].clone()).collect(),
            theta: self.chosen_theta(arch),
            env: None,
            w_in: None,
            w_out: None,
        })
    }

    /// Rebuilds a fixed-architecture super-circuit from a record.
    pub fn from_record(record: &ArchitectureRecord) -> Result<(Self, ArchitectureSample)> {
        let pool = build_pool(record.pool_name.parse()?, 4)?;
        if record.choices.len() != record.p {
            return Err(Error::invalid("record choice count differs from p"));
        }
        let choices = record
            .choices
            .iter()
            .map(|op| {
                pool.position(op)
                    .ok_or_else(|| Error::invalid(format!("{op} is not in pool {}", pool.name())))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut sc = Self::with_fixed_architecture(
            pool,
            record.blocks,
            &choices,
            false,
            &mut rand::rngs::mock::StepRng::new(0, 0),
        )?;
        sc.theta.iter_mut().for_each(|t| *t = 0.0);
        if record.theta.len() != record.blocks {
            return Err(Error::invalid("record theta block count differs from B"));
        }
        for (b, block) in record.theta.iter().enumerate() {
            if block.len() != sc.p {
                return Err(Error::invalid("record theta placeholder count differs from p"));
            }
            for (i, angles) in block.iter().enumerate() {
                let c = choices[i];
                if angles.len() != sc.pool.ops[c].param_count() {
                    return Err(Error::invalid(format!(
                        "record theta[{b}][{i}] has {} angles, {} expected",
                        angles.len(),
                        sc.pool.ops[c].param_count()
                    )));
                }
                for (k, &t) in angles.iter().enumerate() {
                    let j = sc.theta_index(b, i, c, k);
                    sc.theta[j] = t;
                }
            }
        }
        Ok((sc, ArchitectureSample { choices }))
    }
}

/// Serialized architecture with the angles it uses. Weights of the Q-head
/// are carried along when the record describes a trained agent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArchitectureRecord {
    pub pool_name: String,
    pub p: usize,
    #[serde(rename = "B")]
    pub blocks: usize,
    pub choices: Vec<PoolOperation>,
    pub theta: Vec<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub env: Option<EnvKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_in: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_out: Option<Vec<f64>>,
}

impl ArchitectureRecord {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
