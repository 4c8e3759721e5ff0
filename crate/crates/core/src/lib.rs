//! Stochastic calculus for symmetric Markov processes with jumps.
//!
//! Martingale additive functionals, the zero-energy operator `Γ`, Dirichlet
//! processes and Itô / Fisk–Stratonovich integrals, evaluated path by path on
//! an exactly solvable finite-chain backend and on truncated symmetric Lévy
//! processes, plus a suite that checks the calculus identities numerically.

// `!(x > 0.0)` is the NaN-rejecting form throughout; quadrature constants
// keep their published digits.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision, clippy::needless_range_loop, clippy::type_complexity)]

pub mod calculus;
pub mod chain;
pub mod config;
pub mod error;
pub mod levy;
pub mod linalg;
pub mod path;
pub mod quad;
pub mod scalar;
pub mod suite;
pub mod trace;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Chain = chain::ChainModel<f64>;
pub type Form = chain::FormMatrices<f64>;
pub type Jump = chain::JumpFunction<f64>;
pub type ChainPath = path::PathSample<usize, f64>;
pub type Trace = trace::AfTrace<f64>;
