//! Differentiable quantum architecture search for quantum deep Q-learning.
//!
//! The crate searches over variational circuit architectures while training
//! them as Q-function approximators:
//!
//! - [`qsim`]: dense statevector simulator with exact expectations,
//!   parameter-shift and adjoint gradients.
//! - [`supernet`]: operation pools, the super-circuit with its
//!   product-of-softmax architecture distribution, sampling, realization,
//!   pruning and JSON serialization.
//! - [`qdqn`]: data re-uploading encoding, Q-values, TD losses and every
//!   gradient (angles, architecture parameters, input/output weights).
//! - [`envs`]: CartPole-v0 and FrozenLake-v0.
//! - [`trainer`]: replay, Adam, the search/tune loop, ranking, evaluation.
//! - [`noise`]: depolarizing-trajectory evaluation.
//! - [`experiment`]: config files, multi-agent runs and CSV/JSON outputs.

pub mod envs;
pub mod error;
pub mod experiment;
pub mod noise;
pub mod qdqn;
pub mod qsim;
pub mod supernet;
pub mod trainer;

pub use error::{Error, Result};
