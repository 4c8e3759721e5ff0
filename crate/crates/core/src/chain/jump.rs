use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::scalar::Scalar;

use super::ChainModel;

/// Jump function `φ` on `E_∂ × E_∂` for a finite chain: `body[(x, y)]` is
/// `φ(x, y)` and `boundary[x]` is `φ(x, ∂)`. Rows out of the cemetery are
/// zero by convention and the diagonal is kept at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpFunction<T> {
    body: Matrix<T>,
    boundary: Vec<T>,
}

impl<T: Scalar> JumpFunction<T> {
    pub fn new(body: Matrix<T>, boundary: Vec<T>) -> Result<Self> {
        let n = boundary.len();
        if body.rows() != n || body.cols() != n {
            return Err(Error::Shape { expected: n, got: body.rows() });
        }
        for x in 0..n {
            if body[(x, x)] != T::zero() {
                return Err(Error::InvalidArgument(format!("jump function must vanish on the diagonal at {x}")));
            }
        }
        Ok(Self { body, boundary })
    }

    pub fn zero(n: usize) -> Self {
        Self { body: Matrix::zeros(n, n), boundary: vec![T::zero(); n] }
    }

    /// `φ(x, y) = body(x, y)` off the diagonal, `φ(x, ∂) = boundary(x)`.
    pub fn from_fn(n: usize, mut body: impl FnMut(usize, usize) -> T, boundary: impl FnMut(usize) -> T) -> Self {
        let body = Matrix::from_fn(n, n, |x, y| if x == y { T::zero() } else { body(x, y) });
        Self { body, boundary: (0..n).map(boundary).collect() }
    }

    /// Jump function of the Fukushima martingale `M^u`: `u(y) - u(x)` inside
    /// and `-u(x)` into the cemetery (`u(∂) = 0`).
    pub fn fukushima(u: &[T]) -> Self {
        Self::from_fn(u.len(), |x, y| u[y] - u[x], |x| -u[x])
    }

    /// Jump function of `M^f + M^{f,κ}`: the killing jump is counted twice,
    /// once for the Fukushima martingale and once for its killing part.
    pub fn fukushima_with_killing_part(f: &[T]) -> Self {
        Self::from_fn(f.len(), |x, y| f[y] - f[x], |x| -T::two() * f[x])
    }

    pub fn len(&self) -> usize {
        self.boundary.len()
    }

    pub fn is_empty(&self) -> bool {
        self.boundary.is_empty()
    }

    pub fn body(&self) -> &Matrix<T> {
        &self.body
    }

    pub fn boundary(&self) -> &[T] {
        &self.boundary
    }

    pub fn at(&self, x: usize, y: usize) -> T {
        self.body[(x, y)]
    }

    pub fn to_cemetery(&self, x: usize) -> T {
        self.boundary[x]
    }

    pub fn map(&self, mut f: impl FnMut(T) -> T) -> Self {
        let n = self.len();
        let body = Matrix::from_fn(n, n, |x, y| if x == y { T::zero() } else { f(self.body[(x, y)]) });
        let boundary = self.boundary.iter().map(|&v| f(v)).collect();
        Self { body, boundary }
    }

    pub fn zip_with(&self, other: &Self, mut f: impl FnMut(T, T) -> T) -> Self {
        let n = self.len();
        assert_eq!(n, other.len());
        let body = Matrix::from_fn(n, n, |x, y| if x == y { T::zero() } else { f(self.body[(x, y)], other.body[(x, y)]) });
        let boundary = (0..n).map(|x| f(self.boundary[x], other.boundary[x])).collect();
        Self { body, boundary }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|v| v * c)
    }

    /// Pointwise product `φψ`.
    pub fn product(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    /// `φ̄(x, y) = φ(y, x)`; `φ̄(x, ∂) = φ(∂, x) = 0`.
    pub fn reversed(&self) -> Self {
        Self { body: self.body.transpose(), boundary: vec![T::zero(); self.len()] }
    }

    /// `1_{E×E} φ`: the jump part, boundary dropped.
    pub fn interior(&self) -> Self {
        Self { body: self.body.clone(), boundary: vec![T::zero(); self.len()] }
    }

    /// `1_{E×{∂}} φ`: the killing part.
    pub fn killing_part(&self) -> Self {
        Self { body: Matrix::zeros(self.len(), self.len()), boundary: self.boundary.clone() }
    }

    /// `φ_ℓ = φ · 1_{|φ| > 1/ℓ}`.
    pub fn truncated(&self, level: T) -> Self {
        let cut = T::one() / level;
        self.map(|v| if v.abs() > cut { v } else { T::zero() })
    }

    /// `(fφ)(x, y) = f(x) φ(x, y)`, the jump function of `f * M`.
    pub fn left_weighted(&self, f: &[T]) -> Self {
        let n = self.len();
        Self::from_fn(n, |x, y| f[x] * self.body[(x, y)], |x| f[x] * self.boundary[x])
    }

    /// Jump function `-1_{E×E}(φ + φ̄)` of the reversal-compensating
    /// martingale `K`.
    pub fn reversal_compensator(&self) -> Self {
        self.interior().add(&self.reversed()).scale(-T::one())
    }

    /// `½ 1_{E×E}(φ - φ̄)`, the antisymmetric part.
    pub fn antisymmetric_part(&self) -> Self {
        self.interior().sub(&self.reversed()).scale(T::half())
    }

    pub fn max_abs(&self) -> T {
        self.body.max_abs().max(self.boundary.iter().fold(T::zero(), |m, v| m.max(v.abs())))
    }

    /// `Nφ(x) = Σ_y φ(x,y) q(x,y) + φ(x,∂) k(x)`.
    pub fn kernel_apply(&self, model: &ChainModel<T>) -> Vec<T> {
        let q = model.q();
        (0..self.len())
            .map(|x| {
                let inner: T = (0..self.len()).map(|y| self.body[(x, y)] * q[(x, y)]).sum();
                inner + self.boundary[x] * model.k()[x]
            })
            .collect()
    }
}
