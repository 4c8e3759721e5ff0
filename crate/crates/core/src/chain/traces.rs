use crate::error::Result;
use crate::path::PathSample;
use crate::scalar::Scalar;
use crate::trace::{accumulate, AfTrace, TraceKind};

use super::{nakao_trace, ChainModel, FormMatrices, JumpFunction};

/// `∫_0^t rate(X_s) ds` (the cemetery contributes nothing).
pub fn rate_integral<T: Scalar>(rate: &[T], path: &PathSample<usize, T>, kind: TraceKind) -> AfTrace<T> {
    accumulate(path, kind, |&x| rate[x], |_, _, _| T::zero(), |_| T::zero())
}

/// `u(X_t) - u(X_0)` with `u(∂) = 0`.
pub fn function_trace<T: Scalar>(u: &[T], path: &PathSample<usize, T>) -> AfTrace<T> {
    accumulate(path, TraceKind::RawSum, |_| T::zero(), |&x, &y, _| u[y] - u[x], |&x| -u[x])
}

/// Purely discontinuous MAF with jump function `φ_ℓ` (or `φ` when `ell` is
/// `None`): `Σ_{s≤t} φ_ℓ(X_{s-}, X_s) - ∫_0^t Nφ_ℓ(X_s) ds`, killing jump
/// included.
pub fn maf_trace<T: Scalar>(model: &ChainModel<T>, phi: &JumpFunction<T>, path: &PathSample<usize, T>, ell: Option<T>) -> AfTrace<T> {
    let truncated;
    let phi = match ell {
        Some(level) => {
            truncated = phi.truncated(level);
            &truncated
        }
        None => phi,
    };
    let comp = phi.kernel_apply(model);
    accumulate(path, TraceKind::Martingale, |&x| -comp[x], |&x, &y, _| phi.at(x, y), |&x| phi.to_cemetery(x))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum DirichletVariant {
    /// `A = M + Γ(M)`.
    A,
    /// `Ā = A + ½K`.
    Abar,
}

pub fn dirichlet_trace<T: Scalar>(
    model: &ChainModel<T>,
    form: &FormMatrices<T>,
    phi: &JumpFunction<T>,
    path: &PathSample<usize, T>,
    variant: DirichletVariant,
) -> Result<AfTrace<T>> {
    let m = maf_trace(model, phi, path, None);
    let g = nakao_trace(model, form, phi, path)?;
    let mut terms = vec![(T::one(), &m), (T::one(), &g)];
    let k;
    if variant == DirichletVariant::Abar {
        k = maf_trace(model, &phi.reversal_compensator(), path, None);
        terms.push((T::half(), &k));
    }
    Ok(AfTrace::linear_combination(TraceKind::Dirichlet, &terms))
}

/// Closed form of `Ā` on a chain: `Σ ½(φ - φ̄)(X_{s-}, X_s)` over interior
/// jumps plus `φ(X_{ζ-}, ∂)` at the lifetime.
pub fn abar_jump_sum<T: Scalar>(phi: &JumpFunction<T>, path: &PathSample<usize, T>) -> AfTrace<T> {
    accumulate(path, TraceKind::Dirichlet, |_| T::zero(), |&x, &y, _| T::half() * (phi.at(x, y) - phi.at(y, x)), |&x| phi.to_cemetery(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_form, generator_apply, simulate_chain_path};
    use crate::path::Event;

    const U: [f64; 3] = [0.0, 1.0, 2.0];

    fn killed_path() -> PathSample<usize> {
        PathSample {
            x0: 0,
            events: vec![Event::jump(0.5, 1), Event::jump(0.75, 2), Event::jump(1.0, 1)],
            zeta: 1.5,
            killed: true,
            horizon: 2.0,
        }
    }

    #[test]
    fn maf_without_events_is_compensator_only() {
        let m = ChainModel::reference_r3();
        let phi = JumpFunction::fukushima(&U);
        let tr = maf_trace(&m, &phi, &PathSample::constant(1, 2.0), None);
        // Nφ_u(1) = -1 + 1 - 0.5 = -0.5
        assert!((tr.terminal() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fukushima_martingale_pathwise() {
        let m = ChainModel::reference_r3();
        let form = build_form(&m).unwrap();
        let lu = generator_apply(&form, &U).unwrap();
        let phi = JumpFunction::fukushima(&U);
        for seed in 0..50 {
            let p = simulate_chain_path(&m, 0, 2.0, seed).unwrap();
            let lhs = maf_trace(&m, &phi, &p, None);
            let rhs = function_trace(&U, &p).sub(&rate_integral(&lu, &p, TraceKind::ZeroEnergy));
            assert!(lhs.sup_distance(&rhs) < 1e-12);
        }
    }

    #[test]
    fn dirichlet_process_of_fukushima_martingale_is_increment() {
        let m = ChainModel::reference_r3();
        let form = build_form(&m).unwrap();
        let phi = JumpFunction::fukushima(&U);
        let p = killed_path();
        let a = dirichlet_trace(&m, &form, &phi, &p, DirichletVariant::A).unwrap();
        assert!(a.sup_distance(&function_trace(&U, &p)) < 1e-12);
        let abar = dirichlet_trace(&m, &form, &phi, &p, DirichletVariant::Abar).unwrap();
        let closed = abar_jump_sum(&phi, &p);
        assert!(abar.sup_distance(&closed) < 1e-12);
        // terminal term -u(X_{ζ-}) = -1
        assert!((closed.jump_at(1.5) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn symmetric_jumps_vanish_in_abar() {
        let m = ChainModel::reference_r3();
        let form = build_form(&m).unwrap();
        let phi = JumpFunction::from_fn(3, |x, y| (x + y) as f64, |_| 0.0);
        let abar = dirichlet_trace(&m, &form, &phi, &killed_path(), DirichletVariant::Abar).unwrap();
        assert!(abar.sup_norm() < 1e-12);
    }

    #[test]
    fn truncation_drops_small_jumps() {
        let m = ChainModel::reference_r3();
        let phi = JumpFunction::from_fn(3, |x, y| 0.01 * (y as f64 - x as f64), |_| 0.0);
        let tr = maf_trace(&m, &phi, &killed_path(), Some(10.0));
        assert_eq!(tr.sup_norm(), 0.0);
    }
}
