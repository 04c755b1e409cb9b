//! Universal adaptive first-order convex optimization.
//!
//! This crate implements two adaptive methods that consume a single scale
//! parameter (the diameter of a ball known to contain a minimizer) and no
//! smoothness information:
//!
//! - [`optimizers::AcceleGrad`] couples a projected mirror-descent-like
//!   sequence with a gradient-step sequence and adapts its step size from
//!   importance-weighted gradient norms. It accelerates on smooth
//!   objectives and retains the standard rate on non-smooth and stochastic
//!   ones.
//! - [`optimizers::AdaGrad`] is the scalar-step adaptive baseline with
//!   uniform iterate averaging.
//!
//! Around the optimizers sit gradient [`oracles`] (exact, minibatch,
//! additive-noise), a [`problems`] zoo (synthetic p-norm regression,
//! logistic/hinge classification on sparse rows, a libsvm loader, a binary
//! problem container), [`analysis`] utilities that check the scalar
//! inequalities behind the method and fit empirical convergence rates, and
//! a [`harness`] that executes seeded, reproducible benchmark runs traced
//! as CSV.

pub mod analysis;
pub mod config;
pub mod error;
pub mod harness;
pub mod linalg;
pub mod optimizers;
pub mod oracles;
pub mod problems;
pub mod trace;
pub mod verify;

pub use error::{Error, Result};
