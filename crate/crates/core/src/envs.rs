//! CartPole-v0 and FrozenLake-v0 (4x4) with Gym reference dynamics.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    CartPole,
    FrozenLake,
}

impl EnvKind {
    pub fn num_actions(self) -> usize {
        match self {
            EnvKind::CartPole => 2,
            EnvKind::FrozenLake => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            EnvKind::CartPole => "cartpole",
            EnvKind::FrozenLake => "frozenlake",
        }
    }
}

impl FromStr for EnvKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cartpole" => Ok(EnvKind::CartPole),
            "frozenlake" => Ok(EnvKind::FrozenLake),
            other => Err(Error::invalid(format!(
                "unknown environment `{other}`; valid environments are cartpole, frozenlake"
            ))),
        }
    }
}

impl fmt::Display for EnvKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

// CartPole-v0 constants.
const GRAVITY: f64 = 9.8;
const MASS_CART: f64 = 1.0;
const MASS_POLE: f64 = 0.1;
const TOTAL_MASS: f64 = MASS_CART + MASS_POLE;
const HALF_LENGTH: f64 = 0.5;
const POLE_MASS_LENGTH: f64 = MASS_POLE * HALF_LENGTH;
const FORCE_MAG: f64 = 10.0;
const TAU: f64 = 0.02;
const X_LIMIT: f64 = 2.4;
const ANGLE_LIMIT: f64 = 12.0 * 2.0 * std::f64::consts::PI / 360.0;
pub const CARTPOLE_MAX_STEPS: u32 = 200;

// FrozenLake 4x4: SFFF / FHFH / FFFH / HFFG
const LAKE_SIDE: usize = 4;
const HOLES: [usize; 4] = [5, 7, 11, 12];
pub const LAKE_GOAL: usize = 15;
pub const FROZENLAKE_MAX_STEPS: u32 = 100;

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct CartPoleState {
    pub x: f64,
    pub x_dot: f64,
    pub phi: f64,
    pub phi_dot: f64,
    pub steps: u32,
}

impl CartPoleState {
    pub fn observation(&self) -> [f64; 4] {
        [self.x, self.x_dot, self.phi, self.phi_dot]
    }

    fn failed(&self) -> bool {
        self.x.abs() > X_LIMIT || self.phi.abs() > ANGLE_LIMIT
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct FrozenLakeState {
    pub cell: usize,
    pub steps: u32,
}

impl FrozenLakeState {
    pub fn is_hole(&self) -> bool {
        HOLES.contains(&self.cell)
    }

    pub fn is_absorbing(&self) -> bool {
        self.is_hole() || self.cell == LAKE_GOAL
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EnvState {
    CartPole(CartPoleState),
    FrozenLake(FrozenLakeState),
}

impl EnvState {
    pub fn kind(&self) -> EnvKind {
        match self {
            EnvState::CartPole(_) => EnvKind::CartPole,
            EnvState::FrozenLake(_) => EnvKind::FrozenLake,
        }
    }
}

/// Result of one environment step. `terminal` marks a true end of the
/// episode (failure, hole, goal); `truncated` marks a time-limit cut, which
/// ends the episode but still bootstraps in TD targets.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Step {
    pub state: EnvState,
    pub reward: f64,
    pub terminal: bool,
    pub truncated: bool,
}

impl Step {
    pub fn done(&self) -> bool {
        self.terminal || self.truncated
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Transition {
    pub state: EnvState,
    pub action: usize,
    pub reward: f64,
    pub next_state: EnvState,
    pub terminal: bool,
}

/// Environment dynamics. FrozenLake is deterministic unless `slippery`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Env {
    pub kind: EnvKind,
    pub slippery: bool,
}

impl Env {
    pub fn new(kind: EnvKind) -> Self {
        Self {
            kind,
            slippery: false,
        }
    }

    pub fn num_actions(&self) -> usize {
        self.kind.num_actions()
    }

    pub fn reset<R: Rng + ?Sized>(&self, rng: &mut R) -> EnvState {
        match self.kind {
            EnvKind::CartPole => {
                let mut u = || rng.gen_range(-0.05..=0.05);
                EnvState::CartPole(CartPoleState {
                    x: u(),
                    x_dot: u(),
                    phi: u(),
                    phi_dot: u(),
                    steps: 0,
                })
            }
            EnvKind::FrozenLake => EnvState::FrozenLake(FrozenLakeState::default()),
        }
    }

    /// Advances one step. The rng is only consulted by slippery FrozenLake.
    pub fn step<R: Rng + ?Sized>(&self, state: &EnvState, action: usize, rng: &mut R) -> Result<Step> {
        if state.kind() != self.kind {
            return Err(Error::invalid(format!(
                "{:?} state passed to {} environment",
                state.kind(),
                self.kind
            )));
        }
        if action >= self.num_actions() {
            return Err(Error::invalid(format!(
                "action {action} invalid for {} ({} actions)",
                self.kind,
                self.num_actions()
            )));
        }
        Ok(match *state {
            EnvState::CartPole(s) => cartpole_step(&s, action),
            EnvState::FrozenLake(s) => {
                let dir = if self.slippery {
                    // Intended direction or one of the two perpendicular ones.
                    (action + 3 + rng.gen_range(0..3)) % 4
                } else {
                    action
                };
                frozenlake_step(&s, dir)
            }
        })
    }
}

/// Initial state for `kind` with the default (non-slippery) dynamics.
pub fn reset<R: Rng + ?Sized>(kind: EnvKind, rng: &mut R) -> EnvState {
    Env::new(kind).reset(rng)
}

/// Deterministic step with the default dynamics.
pub fn step(state: &EnvState, action: usize) -> Result<Step> {
    Env::new(state.kind()).step(state, action, &mut rand::rngs::mock::StepRng::new(0, 0))
}

fn cartpole_step(s: &CartPoleState, action: usize) -> Step {
    let force = if action == 1 { FORCE_MAG } else { -FORCE_MAG };
    let (sin, cos) = s.phi.sin_cos();
    let temp = (force + POLE_MASS_LENGTH * s.phi_dot * s.phi_dot * sin) / TOTAL_MASS;
    let phi_acc = (GRAVITY * sin - cos * temp)
        / (HALF_LENGTH * (4.0 / 3.0 - MASS_POLE * cos * cos / TOTAL_MASS));
    let x_acc = temp - POLE_MASS_LENGTH * phi_acc * cos / TOTAL_MASS;
    let next = CartPoleState {
        x: s.x + TAU * s.x_dot,
        x_dot: s.x_dot + TAU * x_acc,
        phi: s.phi + TAU * s.phi_dot,
        phi_dot: s.phi_dot + TAU * phi_acc,
        steps: s.steps + 1,
    };
    let terminal = next.failed();
    Step {
        state: EnvState::CartPole(next),
        reward: 1.0,
        terminal,
        truncated: !terminal && next.steps >= CARTPOLE_MAX_STEPS,
    }
}

fn frozenlake_step(s: &FrozenLakeState, dir: usize) -> Step {
    if s.is_absorbing() {
        return Step {
            state: EnvState::FrozenLake(FrozenLakeState {
                cell: s.cell,
                steps: s.steps + 1,
            }),
            reward: 0.0,
            terminal: true,
            truncated: false,
        };
    }
    let (row, col) = (s.cell / LAKE_SIDE, s.cell % LAKE_SIDE);
    let (row, col) = match dir {
        0 => (row, col.saturating_sub(1)),
        1 => ((row + 1).min(LAKE_SIDE - 1), col),
        2 => (row, (col + 1).min(LAKE_SIDE - 1)),
        _ => (row.saturating_sub(1), col),
    };
    let next = FrozenLakeState {
        cell: row * LAKE_SIDE + col,
        steps: s.steps + 1,
    };
    let terminal = next.is_absorbing();
    Step {
        state: EnvState::FrozenLake(next),
        reward: if next.cell == LAKE_GOAL { 1.0 } else { 0.0 },
        terminal,
        truncated: !terminal && next.steps >= FROZENLAKE_MAX_STEPS,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn lake(cell: usize) -> EnvState {
        EnvState::FrozenLake(FrozenLakeState { cell, steps: 0 })
    }

    #[test]
    fn frozenlake_reset_is_start_cell() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            assert_eq!(reset(EnvKind::FrozenLake, &mut rng), lake(0));
        }
    }

    #[test]
    fn cartpole_reset_range_and_seed() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..1000 {
            let EnvState::CartPole(s) = reset(EnvKind::CartPole, &mut rng) else {
                unreachable!()
            };
            assert!(s.observation().iter().all(|v| v.abs() <= 0.05));
            assert_eq!(s.steps, 0);
        }
        let a = reset(EnvKind::CartPole, &mut ChaCha8Rng::seed_from_u64(11));
        let b = reset(EnvKind::CartPole, &mut ChaCha8Rng::seed_from_u64(11));
        assert_eq!(a, b);
    }

    #[test]
    fn cartpole_push_right_from_rest() {
        let out = step(&EnvState::CartPole(CartPoleState::default()), 1).unwrap();
        let EnvState::CartPole(s) = out.state else {
            unreachable!()
        };
        let round = |v: f64| (v * 1e5).round() / 1e5;
        assert_eq!(round(s.x), 0.0);
        assert_eq!(round(s.x_dot), 0.19512);
        assert_eq!(round(s.phi), 0.0);
        assert_eq!(round(s.phi_dot), -0.29268);
        assert_eq!(out.reward, 1.0);
        assert!(!out.done());
    }

    #[test]
    fn cartpole_terminates_and_truncates() {
        let tilted = EnvState::CartPole(CartPoleState {
            phi: 0.2094,
            phi_dot: 1.0,
            ..Default::default()
        });
        let out = step(&tilted, 0).unwrap();
        assert!(out.terminal);

        let late = EnvState::CartPole(CartPoleState {
            steps: CARTPOLE_MAX_STEPS - 1,
            ..Default::default()
        });
        let out = step(&late, 0).unwrap();
        assert!(out.truncated && !out.terminal);
    }

    #[test]
    fn frozenlake_moves() {
        let out = step(&lake(0), 2).unwrap();
        assert_eq!(out.state, lake(1).with_steps(1));
        assert_eq!(out.reward, 0.0);
        assert!(!out.terminal);

        let out = step(&lake(14), 2).unwrap();
        assert_eq!(out.reward, 1.0);
        assert!(out.terminal);

        assert_eq!(step(&lake(4), 0).unwrap().state, lake(4).with_steps(1));
        assert!(step(&lake(1), 1).unwrap().terminal);
        assert!(step(&lake(0), 4).is_err());
    }

    #[test]
    fn frozenlake_absorbing_and_truncation() {
        for cell in [5, 7, 11, 12, 15] {
            for a in 0..4 {
                let out = step(&lake(cell), a).unwrap();
                assert!(out.terminal);
                assert_eq!(out.reward, 0.0);
            }
        }
        let s = EnvState::FrozenLake(FrozenLakeState {
            cell: 0,
            steps: FROZENLAKE_MAX_STEPS - 1,
        });
        let out = step(&s, 0).unwrap();
        assert!(out.truncated && !out.terminal);
    }

    #[test]
    fn slippery_lake_uses_neighbouring_directions() {
        let env = Env {
            kind: EnvKind::FrozenLake,
            slippery: true,
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut seen = std::collections::BTreeSet::new();
        for _ in 0..300 {
            let EnvState::FrozenLake(s) = env.step(&lake(9), 2, &mut rng).unwrap().state else {
                unreachable!()
            };
            seen.insert(s.cell);
        }
        // right -> 10, down -> 13, up -> 5
        assert_eq!(seen.into_iter().collect::<Vec<_>>(), vec![5, 10, 13]);
    }

    impl EnvState {
        fn with_steps(self, steps: u32) -> Self {
            match self {
                EnvState::FrozenLake(s) => EnvState::FrozenLake(FrozenLakeState { steps, ..s }),
                EnvState::CartPole(s) => EnvState::CartPole(CartPoleState { steps, ..s }),
            }
        }
    }
}
