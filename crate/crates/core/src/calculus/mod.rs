//! Backend-agnostic path-level calculus: stochastic integrals against
//! additive-functional traces, brackets, truncated jump sums and the jump
//! representation of Dirichlet processes.

mod compensator;
mod integrals;
mod ito;
mod represent;
mod starred;

pub use compensator::{ChainCompensator, CompensatorEvaluator, FnJump, JumpMap, LevyCompensator, One};
pub use integrals::{
    angle_bracket, ito_integral, riemann_approx, square_bracket, state_increments, stratonovich_integral, stratonovich_midpoint,
    STRATONOVICH_ROUTE_TOL,
};
pub use ito::{correction_sum, ito_formula_rhs, transform_increments, Increments, StateMap, Transform, EXP_CLIP};
pub use represent::{jump_representation, WeightMode};
pub use starred::{starred_sum, ConvergenceReport, LevelRow, TruncationSchedule, Weight};
