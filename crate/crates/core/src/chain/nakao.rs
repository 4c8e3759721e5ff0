//! The zero-energy operator `Γ` on a finite chain and integrals against it.
//!
//! `γ(Z)` is the unique `w` with `E₁(w, f) = ½ μ_⟨M^f + M^{f,κ}, Z⟩(E)` for
//! every `f`; then `Γ(Z)_t = N^w_t - ∫ w(X_s) ds = ∫ (Lw - w)(X_s) ds`.

use crate::error::{Error, Result};
use crate::linalg::{spd_condition_number, Cholesky};
use crate::path::PathSample;
use crate::scalar::Scalar;
use crate::trace::{AfTrace, TraceKind};

use super::traces::rate_integral;
use super::{bracket_measure, interior_values, ChainModel, FormMatrices, JumpFunction};

/// Condition numbers of `E₁` above this are flagged on the solution.
pub const CONDITION_WARN: f64 = 1e12;

#[derive(Debug, Clone)]
pub struct GammaSolution<T> {
    /// `w = γ(Z)`.
    pub w: Vec<T>,
    /// Density of `Γ(Z)` with respect to `dt`: `Lw - w`.
    pub rate: Vec<T>,
    pub condition: T,
}

impl<T: Scalar> GammaSolution<T> {
    pub fn ill_conditioned(&self) -> bool {
        self.condition.to_f64_lossy() > CONDITION_WARN
    }
}

/// Right-hand side `b(x) = ½ μ_⟨M^{e_x} + M^{e_x,κ}, Z⟩(E)` for each indicator.
pub fn gamma_rhs<T: Scalar>(model: &ChainModel<T>, phi_z: &JumpFunction<T>) -> Vec<T> {
    let n = model.len();
    (0..n)
        .map(|x| {
            let mut e = vec![T::zero(); n];
            e[x] = T::one();
            let psi = JumpFunction::fukushima_with_killing_part(&e);
            T::half() * bracket_measure(model, &psi, phi_z).into_iter().sum::<T>()
        })
        .collect()
}

/// Solves for `γ(Z)` with a Cholesky factorisation of `E₁`.
pub fn gamma_solve<T: Scalar>(model: &ChainModel<T>, form: &FormMatrices<T>, phi_z: &JumpFunction<T>) -> Result<GammaSolution<T>> {
    if phi_z.len() != model.len() {
        return Err(Error::Shape { expected: model.len(), got: phi_z.len() });
    }
    let chol = Cholesky::new(&form.e1)?;
    let b = gamma_rhs(model, phi_z);
    let w = chol.solve(&b);
    let lw = form.l.matvec(&w);
    let rate = lw.iter().zip(&w).map(|(&a, &b)| a - b).collect();
    Ok(GammaSolution { w, rate, condition: spd_condition_number(&form.e1) })
}

/// Closed-form density of `Γ(Z)` from the Lévy system:
/// `½ N(1_{E×E}(φ - φ̄))(x) + φ(x,∂) k(x)`.
pub fn explicit_rate<T: Scalar>(model: &ChainModel<T>, phi: &JumpFunction<T>) -> Vec<T> {
    let anti = phi.antisymmetric_part().kernel_apply(model);
    let kill = phi.killing_part().kernel_apply(model);
    anti.into_iter().zip(kill).map(|(a, b)| a + b).collect()
}

/// Pathwise `Γ(Z)`, continuous and of zero energy.
pub fn nakao_trace<T: Scalar>(
    model: &ChainModel<T>,
    form: &FormMatrices<T>,
    phi_z: &JumpFunction<T>,
    path: &PathSample<usize, T>,
) -> Result<AfTrace<T>> {
    let sol = gamma_solve(model, form, phi_z)?;
    Ok(rate_integral(&sol.rate, path, TraceKind::ZeroEnergy))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NakaoRoute {
    /// `Γ(f*M) - ½⟨M^{f,j}, M^j + K⟩`.
    Definition,
    /// `∫ f(X_s) [½ N(1_{E×E}(φ - φ̄)) + φ(·,∂) k](X_s) ds`.
    Explicit,
    /// `∫ f(X_s) dΓ(M)_s` as a Stieltjes integral against the solved `Γ(M)`.
    Stieltjes,
}

impl NakaoRoute {
    pub const ALL: [NakaoRoute; 3] = [NakaoRoute::Definition, NakaoRoute::Explicit, NakaoRoute::Stieltjes];
}

/// Density (per unit time, as a function of the current state) of the Nakao
/// integral `∫ f(X_s) dΓ(M)_s` computed along `route`.
pub fn nakao_integral_rate<T: Scalar>(
    model: &ChainModel<T>,
    form: &FormMatrices<T>,
    f: &[T],
    phi_m: &JumpFunction<T>,
    route: NakaoRoute,
) -> Result<Vec<T>> {
    let n = model.len();
    let f = interior_values(f, n)?;
    Ok(match route {
        NakaoRoute::Definition => {
            let gamma_fm = gamma_solve(model, form, &phi_m.left_weighted(f))?;
            let f_jump = JumpFunction::fukushima(f).interior();
            let m_j_plus_k = phi_m.interior().add(&phi_m.reversal_compensator());
            let bracket = f_jump.product(&m_j_plus_k).kernel_apply(model);
            gamma_fm.rate.iter().zip(&bracket).map(|(&g, &b)| g - T::half() * b).collect()
        }
        NakaoRoute::Explicit => explicit_rate(model, phi_m).into_iter().zip(f).map(|(r, &fx)| fx * r).collect(),
        NakaoRoute::Stieltjes => gamma_solve(model, form, phi_m)?.rate.into_iter().zip(f).map(|(r, &fx)| fx * r).collect(),
    })
}

/// `∫_0^t f(X_s) dΓ(M)_s` along one path.
pub fn nakao_integral_trace<T: Scalar>(
    model: &ChainModel<T>,
    form: &FormMatrices<T>,
    f: &[T],
    phi_m: &JumpFunction<T>,
    path: &PathSample<usize, T>,
    route: NakaoRoute,
) -> Result<AfTrace<T>> {
    let rate = nakao_integral_rate(model, form, f, phi_m, route)?;
    Ok(rate_integral(&rate, path, TraceKind::ZeroEnergy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_form, generator_apply};

    fn r3() -> (ChainModel<f64>, FormMatrices<f64>) {
        let m = ChainModel::reference_r3();
        let f = build_form(&m).unwrap();
        (m, f)
    }

    #[test]
    fn gamma_of_zero_is_zero() {
        let (m, f) = r3();
        let sol = gamma_solve(&m, &f, &JumpFunction::zero(3)).unwrap();
        assert_eq!(sol.w, vec![0.0; 3]);
        assert!(!sol.ill_conditioned());
    }

    #[test]
    fn gamma_of_fukushima_martingale_reproduces_generator() {
        let (m, f) = r3();
        let u = [0.0, 1.0, 2.0];
        let sol = gamma_solve(&m, &f, &JumpFunction::fukushima(&u)).unwrap();
        let lu = generator_apply(&f, &u).unwrap();
        for x in 0..3 {
            assert!((sol.rate[x] - lu[x]).abs() < 1e-13, "state {x}");
        }
    }

    #[test]
    fn gamma_kills_reversal_compensator() {
        let (m, f) = r3();
        let phi = JumpFunction::from_fn(3, |x, y| (1 + x * 2 + y * y) as f64 * 0.3, |_| 0.0);
        let sol = gamma_solve(&m, &f, &phi.reversal_compensator()).unwrap();
        assert!(sol.w.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn explicit_rate_matches_solved_rate() {
        let (m, f) = r3();
        let phi = JumpFunction::from_fn(3, |x, y| (x as f64 - 2.0 * y as f64).sin(), |x| 0.4 * x as f64 - 0.3);
        let solved = gamma_solve(&m, &f, &phi).unwrap().rate;
        let explicit = explicit_rate(&m, &phi);
        for x in 0..3 {
            assert!((solved[x] - explicit[x]).abs() < 1e-13);
        }
    }

    #[test]
    fn nakao_routes_agree_as_rates() {
        let (m, f) = r3();
        let phi = JumpFunction::fukushima(&[0.0, 1.0, 2.0]);
        let g = [1.0, 0.0, 1.0];
        let rates: Vec<Vec<f64>> = NakaoRoute::ALL.iter().map(|&r| nakao_integral_rate(&m, &f, &g, &phi, r).unwrap()).collect();
        for x in 0..3 {
            assert!((rates[0][x] - rates[1][x]).abs() < 1e-13);
            assert!((rates[0][x] - rates[2][x]).abs() < 1e-13);
        }
    }

    #[test]
    fn integrand_must_vanish_at_cemetery() {
        let (m, f) = r3();
        let phi = JumpFunction::fukushima(&[0.0, 1.0, 2.0]);
        let err = nakao_integral_rate(&m, &f, &[1.0, 1.0, 1.0, 1.0], &phi, NakaoRoute::Explicit).unwrap_err();
        assert_eq!(err, Error::CemeteryValue(1.0));
        assert!(nakao_integral_rate(&m, &f, &[1.0, 1.0, 1.0, 0.0], &phi, NakaoRoute::Explicit).is_ok());
    }
}
