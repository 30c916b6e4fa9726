//! Dense statevector simulation for few-qubit circuits.
//!
//! Qubit 0 is the most significant bit of a basis-state index, so for two
//! qubits the amplitudes are ordered `|00>, |01>, |10>, |11>` with the left
//! label belonging to qubit 0. Rotations follow `R_P(theta) = exp(-i theta P / 2)`.

use std::f64::consts::FRAC_PI_2;

use num_complex::Complex64;

use crate::error::{Error, Result};

const MAX_QUBITS: usize = 16;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Gate families understood by the simulator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    Rx,
    Ry,
    Rz,
    Cz,
    Cnot,
    X,
    Identity,
}

impl GateKind {
    pub fn is_rotation(self) -> bool {
        matches!(self, GateKind::Rx | GateKind::Ry | GateKind::Rz)
    }
}

/// A single gate with its qubit operands. Qubit indices are 0-based.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Gate {
    Identity,
    X(usize),
    Rx(usize, f64),
    Ry(usize, f64),
    Rz(usize, f64),
    Cz(usize, usize),
    Cnot { control: usize, target: usize },
}

/// Pauli operators, used as rotation generators and as noise insertions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Pauli {
    X,
    Y,
    Z,
}

impl Gate {
    pub fn kind(&self) -> GateKind {
        match self {
            Gate::Identity => GateKind::Identity,
            Gate::X(_) => GateKind::X,
            Gate::Rx(..) => GateKind::Rx,
            Gate::Ry(..) => GateKind::Ry,
            Gate::Rz(..) => GateKind::Rz,
            Gate::Cz(..) => GateKind::Cz,
            Gate::Cnot { .. } => GateKind::Cnot,
        }
    }

    /// Qubits touched by the gate; for CNOT the control comes first.
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::Identity => Vec::new(),
            Gate::X(q) | Gate::Rx(q, _) | Gate::Ry(q, _) | Gate::Rz(q, _) => vec![q],
            Gate::Cz(a, b) => vec![a, b],
            Gate::Cnot { control, target } => vec![control, target],
        }
    }

    pub fn angle(&self) -> Option<f64> {
        match *self {
            Gate::Rx(_, t) | Gate::Ry(_, t) | Gate::Rz(_, t) => Some(t),
            _ => None,
        }
    }

    /// Same gate with a new rotation angle; `None` for fixed gates.
    pub fn with_angle(&self, angle: f64) -> Option<Gate> {
        match *self {
            Gate::Rx(q, _) => Some(Gate::Rx(q, angle)),
            Gate::Ry(q, _) => Some(Gate::Ry(q, angle)),
            Gate::Rz(q, _) => Some(Gate::Rz(q, angle)),
            _ => None,
        }
    }

    fn generator(&self) -> Option<(usize, Pauli)> {
        match *self {
            Gate::Rx(q, _) => Some((q, Pauli::X)),
            Gate::Ry(q, _) => Some((q, Pauli::Y)),
            Gate::Rz(q, _) => Some((q, Pauli::Z)),
            _ => None,
        }
    }

    fn inverse(&self) -> Gate {
        match *self {
            Gate::Rx(q, t) => Gate::Rx(q, -t),
            Gate::Ry(q, t) => Gate::Ry(q, -t),
            Gate::Rz(q, t) => Gate::Rz(q, -t),
            g => g,
        }
    }

    /// Checks operands against a register of `n` qubits.
    pub fn validate(&self, n: usize) -> Result<()> {
        let qs = self.qubits();
        if let Some(&q) = qs.iter().find(|&&q| q >= n) {
            return Err(Error::invalid(format!(
                "qubit index {q} out of range for {n}-qubit state in {self:?}"
            )));
        }
        if qs.len() == 2 && qs[0] == qs[1] {
            return Err(Error::invalid(format!("repeated qubit operand in {self:?}")));
        }
        Ok(())
    }

    /// Row-major matrix on the gate's own operands (2x2 or 4x4, operand 0 is
    /// the high bit). Identity is reported as the 2x2 identity.
    pub fn local_matrix(&self) -> Vec<Complex64> {
        let i = Complex64::i();
        match *self {
            Gate::Identity => vec![ONE, ZERO, ZERO, ONE],
            Gate::X(_) => vec![ZERO, ONE, ONE, ZERO],
            Gate::Rx(_, t) => {
                let (s, c) = (t / 2.0).sin_cos();
                vec![c.into(), -i * s, -i * s, c.into()]
            }
            Gate::Ry(_, t) => {
                let (s, c) = (t / 2.0).sin_cos();
                vec![c.into(), (-s).into(), s.into(), c.into()]
            }
            Gate::Rz(_, t) => vec![
                Complex64::from_polar(1.0, -t / 2.0),
                ZERO,
                ZERO,
                Complex64::from_polar(1.0, t / 2.0),
            ],
            Gate::Cz(..) => {
                let mut m = vec![ZERO; 16];
                for k in 0..4 {
                    m[k * 5] = ONE;
                }
                m[15] = -ONE;
                m
            }
            Gate::Cnot { .. } => {
                let mut m = vec![ZERO; 16];
                m[0] = ONE;
                m[5] = ONE;
                m[11] = ONE;
                m[14] = ONE;
                m
            }
        }
    }
}

/// Product of Z factors on a subset of qubits (identity elsewhere).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Observable {
    n: usize,
    z_mask: usize,
}

impl Observable {
    /// Z on every listed qubit, identity on the rest.
    pub fn z_on(n: usize, qubits: &[usize]) -> Result<Self> {
        let mut z_mask = 0;
        for &q in qubits {
            if q >= n {
                return Err(Error::invalid(format!("observable qubit {q} >= {n}")));
            }
            z_mask |= bit(n, q);
        }
        Ok(Self { n, z_mask })
    }

    /// From per-qubit factors; `true` means Z, `false` identity.
    pub fn from_factors(factors: &[bool]) -> Result<Self> {
        let qs: Vec<usize> = factors
            .iter()
            .enumerate()
            .filter_map(|(q, &z)| z.then_some(q))
            .collect();
        Self::z_on(factors.len(), &qs)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn factors(&self) -> Vec<bool> {
        (0..self.n).map(|q| self.z_mask & bit(self.n, q) != 0).collect()
    }

    #[inline]
    fn sign(&self, index: usize) -> f64 {
        if (index & self.z_mask).count_ones() % 2 == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

#[inline]
fn bit(n: usize, q: usize) -> usize {
    1 << (n - 1 - q)
}

/// Pure state of `n` qubits as a dense amplitude vector.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    n: usize,
    amps: Vec<Complex64>,
}

impl State {
    /// `|0...0>` on `n` qubits.
    pub fn zero(n: usize) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::invalid(format!(
                "qubit count {n} outside 1..={MAX_QUBITS}"
            )));
        }
        let mut amps = vec![ZERO; 1 << n];
        amps[0] = ONE;
        Ok(Self { n, amps })
    }

    /// Wraps raw amplitudes; the length must be a power of two and the
    /// vector normalized within 1e-10.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::invalid(format!("amplitude count {len} is not 2^n")));
        }
        let n = len.trailing_zeros() as usize;
        let state = Self { n, amps };
        if (state.norm_sqr() - 1.0).abs() > 1e-10 {
            return Err(Error::invalid("amplitudes are not normalized"));
        }
        Ok(state)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Applies `gate` in place.
    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n)?;
        self.apply_unchecked(gate);
        Ok(())
    }

    pub(crate) fn apply_unchecked(&mut self, gate: &Gate) {
        let n = self.n;
        match *gate {
            Gate::Identity => {}
            Gate::X(q) => self.apply_pauli(q, Pauli::X),
            Gate::Rz(q, t) => {
                let m = bit(n, q);
                let lo = Complex64::from_polar(1.0, -t / 2.0);
                let hi = lo.conj();
                for (k, a) in self.amps.iter_mut().enumerate() {
                    *a *= if k & m == 0 { lo } else { hi };
                }
            }
            Gate::Rx(q, t) => {
                let (s, c) = (t / 2.0).sin_cos();
                let m = bit(n, q);
                for k in 0..self.amps.len() {
                    if k & m == 0 {
                        let a = self.amps[k];
                        let b = self.amps[k | m];
                        // -i s * z = (s z.im, -s z.re)
                        self.amps[k] = a * c + Complex64::new(s * b.im, -s * b.re);
                        self.amps[k | m] = b * c + Complex64::new(s * a.im, -s * a.re);
                    }
                }
            }
            Gate::Ry(q, t) => {
                let (s, c) = (t / 2.0).sin_cos();
                let m = bit(n, q);
                for k in 0..self.amps.len() {
                    if k & m == 0 {
                        let a = self.amps[k];
                        let b = self.amps[k | m];
                        self.amps[k] = a * c - b * s;
                        self.amps[k | m] = a * s + b * c;
                    }
                }
            }
            Gate::Cz(a, b) => {
                let m = bit(n, a) | bit(n, b);
                for (k, amp) in self.amps.iter_mut().enumerate() {
                    if k & m == m {
                        *amp = -*amp;
                    }
                }
            }
            Gate::Cnot { control, target } => {
                let mc = bit(n, control);
                let mt = bit(n, target);
                for k in 0..self.amps.len() {
                    if k & mc != 0 && k & mt == 0 {
                        self.amps.swap(k, k | mt);
                    }
                }
            }
        }
    }

    /// Applies a Pauli operator to one qubit in place.
    pub(crate) fn apply_pauli(&mut self, q: usize, p: Pauli) {
        let m = bit(self.n, q);
        match p {
            Pauli::X => {
                for k in 0..self.amps.len() {
                    if k & m == 0 {
                        self.amps.swap(k, k | m);
                    }
                }
            }
            Pauli::Y => {
                for k in 0..self.amps.len() {
                    if k & m == 0 {
                        let a = self.amps[k];
                        let b = self.amps[k | m];
                        // Y = [[0, -i], [i, 0]]
                        self.amps[k] = Complex64::new(b.im, -b.re);
                        self.amps[k | m] = Complex64::new(-a.im, a.re);
                    }
                }
            }
            Pauli::Z => {
                for (k, a) in self.amps.iter_mut().enumerate() {
                    if k & m != 0 {
                        *a = -*a;
                    }
                }
            }
        }
    }

    pub(crate) fn expectation_unchecked(&self, obs: &Observable) -> f64 {
        self.amps
            .iter()
            .enumerate()
            .map(|(k, a)| obs.sign(k) * a.norm_sqr())
            .sum()
    }

    /// `Im <other| P_q |self>` without materializing `P_q |self>`.
    fn im_overlap_with_pauli(&self, other: &State, q: usize, p: Pauli) -> f64 {
        let m = bit(self.n, q);
        let mut acc = ZERO;
        for (k, l) in other.amps.iter().enumerate() {
            let v = match p {
                Pauli::X => self.amps[k ^ m],
                Pauli::Y => {
                    let b = self.amps[k ^ m];
                    if k & m == 0 {
                        Complex64::new(b.im, -b.re)
                    } else {
                        Complex64::new(-b.im, b.re)
                    }
                }
                Pauli::Z => {
                    if k & m == 0 {
                        self.amps[k]
                    } else {
                        -self.amps[k]
                    }
                }
            };
            acc += l.conj() * v;
        }
        acc.im
    }

    fn apply_observable(&mut self, obs: &Observable) {
        for (k, a) in self.amps.iter_mut().enumerate() {
            *a *= obs.sign(k);
        }
    }
}

/// Returns the state after `gate`; the input is left untouched.
pub fn apply_gate(state: &State, gate: &Gate) -> Result<State> {
    let mut out = state.clone();
    out.apply(gate)?;
    Ok(out)
}

/// `<state| obs |state>`.
pub fn expectation(state: &State, obs: &Observable) -> Result<f64> {
    if obs.n != state.n {
        return Err(Error::invalid(format!(
            "observable on {} qubits applied to {}-qubit state",
            obs.n, state.n
        )));
    }
    Ok(state.expectation_unchecked(obs))
}

/// Applies `gates` in order to `|0^n>`.
pub fn run_circuit(gates: &[Gate], n: usize) -> Result<State> {
    let mut state = State::zero(n)?;
    for g in gates {
        state.apply(g)?;
    }
    Ok(state)
}

/// Derivative of `<obs>` with respect to the angle of `gates[param_location]`
/// by the two-term shift rule `(E(t + pi/2) - E(t - pi/2)) / 2`.
pub fn param_shift_grad(gates: &[Gate], param_location: usize, obs: &Observable) -> Result<f64> {
    let gate = gates.get(param_location).ok_or_else(|| {
        Error::invalid(format!(
            "parameter location {param_location} past end of {}-gate circuit",
            gates.len()
        ))
    })?;
    let theta = gate.angle().ok_or_else(|| {
        Error::invalid(format!(
            "gate {param_location} ({gate:?}) is not a parameterized rotation"
        ))
    })?;
    let n = obs.num_qubits();
    let mut shifted = gates.to_vec();
    let mut eval = |angle: f64| -> Result<f64> {
        shifted[param_location] = gate.with_angle(angle).expect("rotation");
        expectation(&run_circuit(&shifted, n)?, obs)
    };
    let plus = eval(theta + FRAC_PI_2)?;
    let minus = eval(theta - FRAC_PI_2)?;
    Ok((plus - minus) / 2.0)
}

/// Expectation value and its derivative with respect to every gate angle,
/// by reverse-mode (adjoint) sweep. Entry `j` of the gradient is zero for
/// non-rotation gates and otherwise equals `param_shift_grad(gates, j, obs)`
/// up to rounding.
pub fn adjoint_gradient(gates: &[Gate], obs: &Observable) -> Result<(f64, Vec<f64>)> {
    let n = obs.num_qubits();
    let mut psi = run_circuit(gates, n)?;
    let value = psi.expectation_unchecked(obs);
    let mut lambda = psi.clone();
    lambda.apply_observable(obs);
    let mut grad = vec![0.0; gates.len()];
    for (j, g) in gates.iter().enumerate().rev() {
        if let Some((q, p)) = g.generator() {
            grad[j] = psi.im_overlap_with_pauli(&lambda, q, p);
        }
        let inv = g.inverse();
        psi.apply_unchecked(&inv);
        lambda.apply_unchecked(&inv);
    }
    Ok((value, grad))
}
