//! Quantum and classical actor-critic agents for CartPole.
//!
//! The crate is organized bottom-up:
//!
//! - [`sim`] — a dense statevector simulator with strided in-place gate
//!   kernels and adjoint-mode differentiation of Pauli-Z cost functions.
//! - [`templates`] — parameterized circuit layouts (single-angle embedding
//!   with CZ ring, three-angle SU(2) embedding with CNOT ring) plus the
//!   observation-to-angle normalization they share.
//! - [`agent`] — actor-critic agents: hybrid quantum-classical with output
//!   reuse, a classical control with matched head width, and a plain MLP.
//!   All gradients are computed analytically.
//! - [`cartpole`] — a faithful CartPole-v1 reimplementation.
//! - [`ppo`] — a clipped-surrogate PPO trainer with GAE.
//! - [`harness`] — multi-seed experiment runner, CSV aggregation, and SVG
//!   learning-curve plots.

pub mod agent;
pub mod cartpole;
pub mod error;
pub mod harness;
pub mod ppo;
pub mod sim;
pub mod templates;

pub use error::{Error, Result};
