use crate::chain::{ChainModel, JumpFunction};
use crate::error::Result;
use crate::levy::{kernel_integral, LevyModel, Point};
use crate::scalar::Scalar;

/// A jump function `φ` on `E_∂ × E_∂` seen through its values on
/// transitions `x → y` and `x → ∂`.
pub trait JumpMap<S, T: Scalar> {
    fn jump(&self, x: &S, y: &S) -> T;
    fn kill(&self, _x: &S) -> T {
        T::zero()
    }
}

impl<T: Scalar> JumpMap<usize, T> for JumpFunction<T> {
    fn jump(&self, x: &usize, y: &usize) -> T {
        if x == y {
            T::zero()
        } else {
            self.at(*x, *y)
        }
    }

    fn kill(&self, x: &usize) -> T {
        self.to_cemetery(*x)
    }
}

/// Closure-backed jump map with no killing part.
pub struct FnJump<F>(pub F);

impl<S, T: Scalar, F: Fn(&S, &S) -> T> JumpMap<S, T> for FnJump<F> {
    fn jump(&self, x: &S, y: &S) -> T {
        (self.0)(x, y)
    }
}

/// The constant jump map `1` (used to turn a contraction into `Nφ`).
pub struct One;

impl<S, T: Scalar> JumpMap<S, T> for One {
    fn jump(&self, _: &S, _: &S) -> T {
        T::one()
    }
    fn kill(&self, _: &S) -> T {
        T::one()
    }
}

/// `x ↦ N(φψ)(x)` for the Lévy system of a backend.
pub trait CompensatorEvaluator<S> {
    fn contract(&self, phi: &dyn JumpMap<S, f64>, psi: &dyn JumpMap<S, f64>, x: &S) -> Result<f64>;

    /// `Nφ(x)`.
    fn apply(&self, phi: &dyn JumpMap<S, f64>, x: &S) -> Result<f64> {
        self.contract(phi, &One, x)
    }
}

/// Exact rate sums `Σ_y φψ(x,y) q(x,y) + φψ(x,∂) k(x)`.
pub struct ChainCompensator<'a> {
    pub model: &'a ChainModel<f64>,
}

impl CompensatorEvaluator<usize> for ChainCompensator<'_> {
    fn contract(&self, phi: &dyn JumpMap<usize, f64>, psi: &dyn JumpMap<usize, f64>, x: &usize) -> Result<f64> {
        let q = self.model.q();
        let inner: f64 =
            (0..self.model.len()).filter(|y| y != x && q[(*x, *y)] != 0.0).map(|y| phi.jump(x, &y) * psi.jump(x, &y) * q[(*x, y)]).sum();
        Ok(inner + phi.kill(x) * psi.kill(x) * self.model.k()[*x])
    }
}

/// Quadrature of `∫_{|h| > ε} φψ(x, x+h) ν(dh)`: the Lévy system of the
/// process truncated at `ε` (`ε = 0` for the full kernel).
pub struct LevyCompensator<'a> {
    pub model: &'a LevyModel,
    pub epsilon: f64,
}

impl CompensatorEvaluator<Point> for LevyCompensator<'_> {
    fn contract(&self, phi: &dyn JumpMap<Point, f64>, psi: &dyn JumpMap<Point, f64>, x: &Point) -> Result<f64> {
        let v = kernel_integral(
            self.model,
            |a: &[f64], b: &[f64]| {
                let (a, b) = (a.to_vec(), b.to_vec());
                phi.jump(&a, &b) * psi.jump(&a, &b)
            },
            x,
            self.epsilon,
        )?;
        Ok(v.value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chain_contraction_matches_kernel_apply() {
        let m = ChainModel::reference_r3();
        let u = [0.0, 1.0, 2.0];
        let phi = JumpFunction::fukushima(&u);
        let ev = ChainCompensator { model: &m };
        let direct = phi.kernel_apply(&m);
        for x in 0..3 {
            assert!((ev.apply(&phi, &x).unwrap() - direct[x]).abs() < 1e-15);
        }
        // N(φ²)(1) = 1 + 1 + 0.5
        assert!((ev.contract(&phi, &phi, &1).unwrap() - 2.5).abs() < 1e-15);
    }

    #[test]
    fn cauchy_tail_compensator() {
        let m = LevyModel::cauchy();
        let ev = LevyCompensator { model: &m, epsilon: 0.0 };
        let tail = FnJump(|x: &Point, y: &Point| if (y[0] - x[0]).abs() > 1.0 { 1.0 } else { 0.0 });
        let v = ev.apply(&tail, &vec![3.0]).unwrap();
        assert!((v - 2.0 / std::f64::consts::PI).abs() < 1e-9);
    }
}
