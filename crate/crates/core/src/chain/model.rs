use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

/// Relative tolerance for the detailed-balance check `m(x)q(x,y) = m(y)q(y,x)`.
pub const DETAILED_BALANCE_RTOL: f64 = 1e-12;

/// Finite `m`-symmetric Markov chain with killing.
///
/// Its canonical Lévy system is `N(x, y) = q(x, y)`, `N(x, ∂) = k(x)` with
/// `H_t = t`, so the smooth measure of `H` is `m` itself.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainModel<T> {
    labels: Vec<String>,
    m: Vec<T>,
    q: Matrix<T>,
    k: Vec<T>,
}

impl<T: Scalar> ChainModel<T> {
    /// Validated constructor: positive `m`, non-negative rates, zero diagonal
    /// and detailed balance.
    pub fn new(m: Vec<T>, q: Matrix<T>, k: Vec<T>) -> Result<Self> {
        let model = Self::new_unchecked(m, q, k)?;
        model.check_detailed_balance()?;
        Ok(model)
    }

    /// Skips the detailed-balance check (shape and sign checks still apply).
    /// Only meant for negative controls.
    pub fn new_unchecked(m: Vec<T>, q: Matrix<T>, k: Vec<T>) -> Result<Self> {
        let n = m.len();
        if q.rows() != n || q.cols() != n {
            return Err(Error::Shape { expected: n, got: q.rows() });
        }
        if k.len() != n {
            return Err(Error::Shape { expected: n, got: k.len() });
        }
        for (x, &mx) in m.iter().enumerate() {
            if !(mx > T::zero()) || !mx.is_finite() {
                return Err(Error::InvalidModel(format!("m({x}) = {mx} must be positive")));
            }
            if !(k[x] >= T::zero()) || !k[x].is_finite() {
                return Err(Error::InvalidModel(format!("k({x}) = {} must be non-negative", k[x])));
            }
            if q[(x, x)] != T::zero() {
                return Err(Error::InvalidModel(format!("q({x},{x}) must be zero")));
            }
            for y in 0..n {
                if !(q[(x, y)] >= T::zero()) || !q[(x, y)].is_finite() {
                    return Err(Error::InvalidModel(format!("q({x},{y}) = {} must be non-negative", q[(x, y)])));
                }
            }
        }
        let labels = (0..n).map(|i| i.to_string()).collect();
        Ok(Self { labels, m, q, k })
    }

    /// Builds `q` from `(x, y, rate)` triplets.
    pub fn from_triplets(m: Vec<T>, triplets: &[(usize, usize, T)], k: Vec<T>) -> Result<Self> {
        Self::new(m.clone(), Self::rate_matrix(m.len(), triplets)?, k)
    }

    pub fn rate_matrix(n: usize, triplets: &[(usize, usize, T)]) -> Result<Matrix<T>> {
        let mut q = Matrix::zeros(n, n);
        for &(x, y, r) in triplets {
            if x >= n || y >= n {
                return Err(Error::InvalidModel(format!("triplet ({x},{y}) out of range for {n} states")));
            }
            q[(x, y)] = q[(x, y)] + r;
        }
        Ok(q)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::Shape { expected: self.len(), got: labels.len() });
        }
        self.labels = labels;
        Ok(self)
    }

    /// Three states, `m = (1,1,2)`, `q(0,1)=q(1,0)=q(1,2)=1`, `q(2,1)=0.5`,
    /// killing `k = (0, 0.5, 0)`.
    pub fn reference_r3() -> Self {
        let h = T::half();
        let o = T::one();
        let z = T::zero();
        Self::from_triplets(vec![o, o, T::two()], &[(0, 1, o), (1, 0, o), (1, 2, o), (2, 1, h)], vec![z, h, z])
            .expect("reference chain is symmetric")
    }

    /// Random symmetric chain: conductances `c(x,y) = c(y,x)` on a random
    /// graph, `q = c / m`. Killing is drawn only when `killing` is set.
    pub fn random_symmetric<R: Rng + ?Sized>(n: usize, killing: bool, rng: &mut R) -> Self {
        let m: Vec<T> = (0..n).map(|_| T::of(rng.random_range(0.5..2.0))).collect();
        let mut q = Matrix::zeros(n, n);
        for x in 0..n {
            for y in x + 1..n {
                // keep the graph connected through the path x -> x+1
                if y == x + 1 || rng.random_bool(0.5) {
                    let c = T::of(rng.random_range(0.2..1.5));
                    q[(x, y)] = c / m[x];
                    q[(y, x)] = c / m[y];
                }
            }
        }
        let k = (0..n).map(|_| if killing && rng.random_bool(0.5) { T::of(rng.random_range(0.1..0.8)) } else { T::zero() }).collect();
        Self::new_unchecked(m, q, k).expect("random chain has valid shape")
    }

    pub fn check_detailed_balance(&self) -> Result<()> {
        let n = self.len();
        for x in 0..n {
            for y in x + 1..n {
                let lhs = self.m[x] * self.q[(x, y)];
                let rhs = self.m[y] * self.q[(y, x)];
                let scale = lhs.abs().max(rhs.abs());
                if (lhs - rhs).abs() > T::of(DETAILED_BALANCE_RTOL) * scale {
                    return Err(Error::DetailedBalance { x, y, lhs: lhs.to_f64_lossy(), rhs: rhs.to_f64_lossy() });
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn m(&self) -> &[T] {
        &self.m
    }

    pub fn q(&self) -> &Matrix<T> {
        &self.q
    }

    pub fn k(&self) -> &[T] {
        &self.k
    }

    pub fn has_killing(&self) -> bool {
        self.k.iter().any(|&v| v > T::zero())
    }

    /// Total exit rate `Σ_y q(x,y) + k(x)`.
    pub fn exit_rate(&self, x: usize) -> T {
        self.q.row(x).iter().copied().sum::<T>() + self.k[x]
    }

    /// Normalised symmetrising measure `m / m(E)`.
    pub fn stationary_law(&self) -> Vec<T> {
        let total: T = self.m.iter().copied().sum();
        self.m.iter().map(|&v| v / total).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn reference_chain_is_symmetric() {
        let r3 = ChainModel::<f64>::reference_r3();
        r3.check_detailed_balance().unwrap();
        assert_eq!(r3.exit_rate(1), 2.5);
        assert!(r3.has_killing());
    }

    #[test]
    fn asymmetric_rates_are_rejected_with_pair() {
        let q = ChainModel::<f64>::rate_matrix(2, &[(0, 1, 1.0), (1, 0, 2.0)]).unwrap();
        let err = ChainModel::new(vec![1.0, 1.0], q, vec![0.0, 0.0]).unwrap_err();
        assert!(matches!(err, Error::DetailedBalance { x: 0, y: 1, .. }));
    }

    #[test]
    fn nonpositive_mass_is_rejected() {
        let q = Matrix::zeros(2, 2);
        assert!(ChainModel::<f64>::new(vec![1.0, 0.0], q, vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn random_chains_satisfy_detailed_balance() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for n in 2..9 {
            let c = ChainModel::<f64>::random_symmetric(n, true, &mut rng);
            c.check_detailed_balance().unwrap();
        }
    }
}
