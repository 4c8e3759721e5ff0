use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

use super::{ChainModel, JumpFunction};

/// Matrices of the pure-jump Dirichlet form of a chain.
///
/// `E(u, v) = Σ_{x,y} (u(x)-u(y))(v(x)-v(y)) J(x,y) + Σ_x u(x)v(x) κ(x)` with
/// `J = ½ m q` and `κ = m k`; there is no strongly local part.
#[derive(Debug, Clone)]
pub struct FormMatrices<T> {
    pub e: Matrix<T>,
    pub e1: Matrix<T>,
    pub j: Matrix<T>,
    pub kappa: Vec<T>,
    /// Generator: `(Lu)(x) = Σ_y q(x,y)(u(y)-u(x)) - k(x)u(x)`.
    pub l: Matrix<T>,
    pub m: Vec<T>,
}

/// Validating constructor: rejects detailed-balance violations.
pub fn build_form<T: Scalar>(model: &ChainModel<T>) -> Result<FormMatrices<T>> {
    model.check_detailed_balance()?;
    Ok(build_form_unchecked(model))
}

/// Assembles the matrices without checking symmetry of the process. The
/// bilinear form is symmetric regardless, but it no longer matches the
/// generator when detailed balance fails.
pub fn build_form_unchecked<T: Scalar>(model: &ChainModel<T>) -> FormMatrices<T> {
    let n = model.len();
    let (m, q, k) = (model.m(), model.q(), model.k());
    let j = Matrix::from_fn(n, n, |x, y| T::half() * m[x] * q[(x, y)]);
    let kappa: Vec<T> = (0..n).map(|x| m[x] * k[x]).collect();
    let mut e = Matrix::from_diag(&kappa);
    for x in 0..n {
        for y in 0..n {
            let w = j[(x, y)];
            if x == y || w == T::zero() {
                continue;
            }
            e[(x, x)] = e[(x, x)] + w;
            e[(y, y)] = e[(y, y)] + w;
            e[(x, y)] = e[(x, y)] - w;
            e[(y, x)] = e[(y, x)] - w;
        }
    }
    let e1 = e.add(&Matrix::from_diag(m));
    let l = Matrix::from_fn(n, n, |x, y| if x == y { -model.exit_rate(x) } else { q[(x, y)] });
    FormMatrices { e, e1, j, kappa, l, m: m.to_vec() }
}

impl<T: Scalar> FormMatrices<T> {
    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn energy(&self, u: &[T], v: &[T]) -> T {
        self.e.bilinear(u, v)
    }

    /// `(u, v)_m`.
    pub fn inner(&self, u: &[T], v: &[T]) -> T {
        u.iter().zip(v).zip(&self.m).map(|((&a, &b), &w)| a * b * w).sum()
    }
}

/// `Lu`.
pub fn generator_apply<T: Scalar>(form: &FormMatrices<T>, u: &[T]) -> Result<Vec<T>> {
    if u.len() != form.len() {
        return Err(Error::Shape { expected: form.len(), got: u.len() });
    }
    Ok(form.l.matvec(u))
}

/// Revuz measure of `⟨M_φ, M_ψ⟩`:
/// `x ↦ m(x)[Σ_y φ(x,y)ψ(x,y)q(x,y) + φ(x,∂)ψ(x,∂)k(x)]`.
pub fn bracket_measure<T: Scalar>(model: &ChainModel<T>, phi: &JumpFunction<T>, psi: &JumpFunction<T>) -> Vec<T> {
    phi.product(psi).kernel_apply(model).into_iter().zip(model.m()).map(|(v, &w)| v * w).collect()
}

/// Energy `e(M_φ) = ½ μ_⟨M_φ⟩(E)`.
pub fn energy<T: Scalar>(model: &ChainModel<T>, phi: &JumpFunction<T>) -> T {
    T::half() * bracket_measure(model, phi, phi).into_iter().sum::<T>()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r3() -> ChainModel<f64> {
        ChainModel::reference_r3()
    }

    #[test]
    fn r3_jump_and_killing_measures() {
        let f = build_form(&r3()).unwrap();
        for (x, y) in [(0, 1), (1, 0), (1, 2), (2, 1)] {
            assert_eq!(f.j[(x, y)], 0.5);
        }
        assert_eq!(f.j[(0, 2)], 0.0);
        assert_eq!(f.kappa, vec![0.0, 0.5, 0.0]);
    }

    #[test]
    fn r3_energy_of_linear_function() {
        let f = build_form(&r3()).unwrap();
        let u = [0.0, 1.0, 2.0];
        // Σ(Δu)²J over ordered pairs = 4 · 0.5, plus Σu²κ = 0.5
        assert!((f.energy(&u, &u) - 2.5).abs() < 1e-15);
        assert!(f.e.asymmetry() < 1e-15);
    }

    #[test]
    fn empty_form_for_frozen_chain() {
        let model = ChainModel::new(vec![1.0, 3.0], Matrix::zeros(2, 2), vec![0.0, 0.0]).unwrap();
        let f = build_form(&model).unwrap();
        assert_eq!(f.e.max_abs(), 0.0);
        assert_eq!(f.l.max_abs(), 0.0);
    }

    #[test]
    fn generator_values_on_r3() {
        let f = build_form(&r3()).unwrap();
        let lu = generator_apply(&f, &[0.0, 1.0, 2.0]).unwrap();
        assert_eq!(lu[0], 1.0);
        assert_eq!(lu[1], -0.5);
        let model = ChainModel::from_triplets(vec![1.0, 1.0], &[(0, 1, 2.0), (1, 0, 2.0)], vec![0.0, 0.0]).unwrap();
        let fc = build_form(&model).unwrap();
        assert_eq!(generator_apply(&fc, &[3.0, 3.0]).unwrap(), vec![0.0, 0.0]);
        assert!(generator_apply(&fc, &[1.0]).is_err());
    }

    #[test]
    fn bracket_measure_and_energy_of_fukushima_martingale() {
        let model = r3();
        let phi = JumpFunction::fukushima(&[0.0, 1.0, 2.0]);
        assert_eq!(bracket_measure(&model, &phi, &phi), vec![1.0, 2.5, 1.0]);
        assert_eq!(energy(&model, &phi), 2.25);
        assert_eq!(energy(&model, &phi.scale(3.0)), 9.0 * 2.25);
        assert_eq!(energy(&model, &JumpFunction::zero(3)), 0.0);
        assert_eq!(bracket_measure(&model, &JumpFunction::zero(3), &phi), vec![0.0; 3]);
    }

    #[test]
    fn build_form_rejects_broken_balance() {
        let q = ChainModel::<f64>::rate_matrix(2, &[(0, 1, 1.0), (1, 0, 1.001)]).unwrap();
        let model = ChainModel::new_unchecked(vec![1.0, 1.0], q, vec![0.0, 0.0]).unwrap();
        assert!(matches!(build_form(&model), Err(Error::DetailedBalance { .. })));
        let _ = build_form_unchecked(&model);
    }
}
