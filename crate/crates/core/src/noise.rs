//! Depolarizing noise by Monte-Carlo Pauli trajectories.
//!
//! After every gate, each touched qubit of a single-qubit gate suffers a
//! depolarizing event with probability `p1`; a two-qubit gate suffers one
//! event with probability `p2` that hits both of its qubits. An event applies
//! an independent uniformly random Pauli from {X, Y, Z} to each affected
//! qubit, which realizes `rho -> (1 - p) rho + p/3 (X rho X + Y rho Y + Z rho Z)`
//! on average.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qsim::{self, Gate, Observable, Pauli, State};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub p1: f64,
    pub p2: f64,
    pub trajectories: usize,
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            p1: 0.001,
            p2: 0.01,
            trajectories: 1000,
        }
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, p) in [("p1", self.p1), ("p2", self.p2)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(format!("{name} = {p} outside [0, 1]")));
            }
        }
        if self.trajectories == 0 {
            return Err(Error::invalid("trajectories must be >= 1"));
        }
        Ok(())
    }

    pub fn is_noiseless(&self) -> bool {
        self.p1 == 0.0 && self.p2 == 0.0
    }
}

fn random_pauli<R: Rng + ?Sized>(rng: &mut R) -> Pauli {
    match rng.gen_range(0..3) {
        0 => Pauli::X,
        1 => Pauli::Y,
        _ => Pauli::Z,
    }
}

/// One stochastic run of the circuit with Pauli insertions.
pub fn sample_trajectory<R: Rng + ?Sized>(
    gates: &[Gate],
    n: usize,
    spec: &NoiseSpec,
    rng: &mut R,
) -> Result<State> {
    let mut psi = State::zero(n)?;
    for g in gates {
        psi.apply(g)?;
        match g.qubits().as_slice() {
            [q] => {
                if spec.p1 > 0.0 && rng.gen::<f64>() < spec.p1 {
                    psi.apply_pauli(*q, random_pauli(rng));
                }
            }
            [a, b] => {
                if spec.p2 > 0.0 && rng.gen::<f64>() < spec.p2 {
                    psi.apply_pauli(*a, random_pauli(rng));
                    psi.apply_pauli(*b, random_pauli(rng));
                }
            }
            _ => {}
        }
    }
    Ok(psi)
}

/// Trajectory-averaged expectations of several observables, all read from
/// the same set of trajectories. With both rates at zero this is exactly the
/// noiseless expectation and consumes no randomness.
pub fn noisy_expectations<R: Rng + ?Sized>(
    gates: &[Gate],
    n: usize,
    observables: &[Observable],
    spec: &NoiseSpec,
    rng: &mut R,
) -> Result<Vec<f64>> {
    spec.validate()?;
    if spec.is_noiseless() {
        let psi = qsim::run_circuit(gates, n)?;
        return observables.iter().map(|o| qsim::expectation(&psi, o)).collect();
    }
    let mut sums = vec![0.0; observables.len()];
    for _ in 0..spec.trajectories {
        let psi = sample_trajectory(gates, n, spec, rng)?;
        for (acc, o) in sums.iter_mut().zip(observables) {
            *acc += qsim::expectation(&psi, o)?;
        }
    }
    Ok(sums
        .into_iter()
        .map(|s| s / spec.trajectories as f64)
        .collect())
}

/// Trajectory-averaged expectation of a single observable.
pub fn noisy_expectation<R: Rng + ?Sized>(
    gates: &[Gate],
    n: usize,
    obs: &Observable,
    spec: &NoiseSpec,
    rng: &mut R,
) -> Result<f64> {
    Ok(noisy_expectations(gates, n, std::slice::from_ref(obs), spec, rng)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_rates_match_noiseless_bitwise() {
        let gates = [Gate::Ry(0, 0.7), Gate::Cnot { control: 0, target: 1 }, Gate::Rx(1, -0.4)];
        let obs = Observable::z_on(2, &[0, 1]).unwrap();
        let spec = NoiseSpec {
            p1: 0.0,
            p2: 0.0,
            trajectories: 50,
        };
        let exact = qsim::expectation(&qsim::run_circuit(&gates, 2).unwrap(), &obs).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(noisy_expectation(&gates, 2, &obs, &spec, &mut rng).unwrap(), exact);
    }

    #[test]
    fn single_event_contracts_z() {
        // Identity-angle rotation keeps |0>, then one depolarizing event.
        let gates = [Gate::Rx(0, 0.0)];
        let obs = Observable::z_on(1, &[0]).unwrap();
        let trajectories = 100_000;
        for p in [0.15, 0.75] {
            let spec = NoiseSpec {
                p1: p,
                p2: 0.0,
                trajectories,
            };
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            let est = noisy_expectation(&gates, 1, &obs, &spec, &mut rng).unwrap();
            let expect = 1.0 - 4.0 * p / 3.0;
            // Outcomes are +1 w.p. 1 - 2p/3 and -1 otherwise.
            let q = 2.0 * p / 3.0;
            let sigma = (4.0 * q * (1.0 - q) / trajectories as f64).sqrt();
            assert!((est - expect).abs() <= 3.0 * sigma, "p={p}: {est} vs {expect}");
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        let gates = [Gate::X(0)];
        let obs = Observable::z_on(1, &[0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for spec in [
            NoiseSpec { p1: -0.1, p2: 0.0, trajectories: 1 },
            NoiseSpec { p1: 0.0, p2: 1.5, trajectories: 1 },
            NoiseSpec { p1: 0.1, p2: 0.1, trajectories: 0 },
        ] {
            assert!(noisy_expectation(&gates, 1, &obs, &spec, &mut rng).is_err());
        }
    }
}
