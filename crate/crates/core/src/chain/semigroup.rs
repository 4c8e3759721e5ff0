use crate::error::{Error, Result};
use crate::linalg::{expm, Matrix};
use crate::quad::gauss_legendre;
use crate::scalar::Scalar;

use super::ChainModel;

/// Generator matrix `L` with `L[x][y] = q(x,y)`, `L[x][x] = -Σ_y q(x,y) - k(x)`.
pub fn generator_matrix<T: Scalar>(model: &ChainModel<T>) -> Matrix<T> {
    let n = model.len();
    Matrix::from_fn(n, n, |x, y| if x == y { -model.exit_rate(x) } else { model.q()[(x, y)] })
}

/// `P_t = exp(tL)`, the sub-Markov transition matrix.
pub fn semigroup_matrix<T: Scalar>(model: &ChainModel<T>, t: T) -> Result<Matrix<T>> {
    if !(t >= T::zero()) {
        return Err(Error::InvalidArgument(format!("time must be non-negative, got {t}")));
    }
    expm(&generator_matrix(model).scale(t))
}

/// `P_t F(x) = E_x[F(X_t); t < ζ]`.
pub fn semigroup_apply<T: Scalar>(model: &ChainModel<T>, t: T, f: &[T]) -> Result<Vec<T>> {
    if f.len() != model.len() {
        return Err(Error::Shape { expected: model.len(), got: f.len() });
    }
    if t == T::zero() {
        return Ok(f.to_vec());
    }
    Ok(semigroup_matrix(model, t)?.matvec(f))
}

const INTEGRATION_NODES: usize = 24;

/// `∫_0^t P_s g ds` by Gauss–Legendre quadrature of the semigroup. The
/// integrand is entire in `s`, so a fixed rule is exact to rounding for the
/// short horizons used in the oracles.
pub fn integrated_semigroup_apply<T: Scalar>(model: &ChainModel<T>, t: T, g: &[T]) -> Result<Vec<T>> {
    let (nodes, weights) = gauss_legendre(INTEGRATION_NODES);
    let half = t * T::half();
    let mut acc = vec![T::zero(); g.len()];
    for (&s, &w) in nodes.iter().zip(&weights) {
        let ps = semigroup_apply(model, half * (T::one() + T::of(s)), g)?;
        for (a, v) in acc.iter_mut().zip(ps) {
            *a = *a + half * T::of(w) * v;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_at_time_zero() {
        let m = ChainModel::<f64>::reference_r3();
        assert_eq!(semigroup_apply(&m, 0.0, &[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn conservative_without_killing() {
        let m: ChainModel<f64> =
            ChainModel::from_triplets(vec![1.0, 1.0, 2.0], &[(0, 1, 1.0), (1, 0, 1.0), (1, 2, 1.0), (2, 1, 0.5)], vec![0.0; 3]).unwrap();
        for v in semigroup_apply(&m, 3.0, &[1.0; 3]).unwrap() {
            assert!((v - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn killing_leaks_mass() {
        let m = ChainModel::<f64>::reference_r3();
        let p = semigroup_apply(&m, 1.0, &[1.0; 3]).unwrap();
        assert!(p[1] < 1.0);
        assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn integrated_semigroup_matches_resolvent_limit() {
        // ∫_0^t P_s g ds → -L^{-1} g; check d/dt of the integral instead:
        // (I(t+h) - I(t-h)) / 2h ≈ P_t g.
        let m = ChainModel::<f64>::reference_r3();
        let g = [1.0, -1.0, 0.5];
        let (t, h) = (0.7, 1e-4);
        let a = integrated_semigroup_apply(&m, t + h, &g).unwrap();
        let b = integrated_semigroup_apply(&m, t - h, &g).unwrap();
        let p = semigroup_apply(&m, t, &g).unwrap();
        for x in 0..3 {
            assert!(((a[x] - b[x]) / (2.0 * h) - p[x]).abs() < 1e-7);
        }
    }
}
