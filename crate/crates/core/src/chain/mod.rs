//! Exactly solvable backend: a finite `m`-symmetric chain with killing.

mod form;
mod jump;
mod model;
mod nakao;
mod semigroup;
mod simulate;
mod traces;

pub use form::{bracket_measure, build_form, build_form_unchecked, energy, generator_apply, FormMatrices};
pub use jump::JumpFunction;
pub use model::{ChainModel, DETAILED_BALANCE_RTOL};
pub use nakao::{
    explicit_rate, gamma_rhs, gamma_solve, nakao_integral_rate, nakao_integral_trace, nakao_trace, GammaSolution, NakaoRoute,
    CONDITION_WARN,
};
pub use semigroup::{generator_matrix, integrated_semigroup_apply, semigroup_apply, semigroup_matrix};
pub use simulate::{sample_state, simulate_chain_path, simulate_chain_path_with};
pub use traces::{abar_jump_sum, dirichlet_trace, function_trace, maf_trace, rate_integral, DirichletVariant};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Accepts a state function given on `E` (length `n`) or on `E_∂` (length
/// `n + 1`, last entry the cemetery value, which must be zero).
pub fn interior_values<T: Scalar>(f: &[T], n: usize) -> Result<&[T]> {
    match f.len() {
        l if l == n => Ok(f),
        l if l == n + 1 => {
            let at_cemetery = f[n];
            if at_cemetery != T::zero() {
                return Err(Error::CemeteryValue(at_cemetery.to_f64_lossy()));
            }
            Ok(&f[..n])
        }
        l => Err(Error::Shape { expected: n, got: l }),
    }
}
