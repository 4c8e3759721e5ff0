use crate::error::{Error, Result};

/// Outer profile `F` of a radial Hölder function; all have `|F'| <= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Identity,
    Tanh,
    Sin,
}

impl Profile {
    fn eval(self, s: f64) -> (f64, f64, f64) {
        match self {
            Profile::Identity => (s, 1.0, 0.0),
            Profile::Tanh => {
                let t = s.tanh();
                (t, 1.0 - t * t, -2.0 * t * (1.0 - t * t))
            }
            Profile::Sin => (s.sin(), s.cos(), -s.sin()),
        }
    }

    pub fn lipschitz(self) -> f64 {
        1.0
    }
}

/// Test functions on `R^N` with closed-form derivatives where they exist.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(tag = "test", rename_all = "snake_case")]
pub enum TestFunction {
    /// `exp(-|x|²/2)`.
    SmoothGauss,
    /// `(1 - |x|)⁺`.
    LipschitzBump,
    /// `F(|x|^{β/2})`, `β/2`-Hölder at the origin.
    HolderRadial { profile: Profile, beta: f64 },
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

impl TestFunction {
    pub fn holder_radial(profile: Profile, beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta <= 2.0) {
            return Err(Error::InvalidArgument(format!("Hölder parameter β = {beta} outside (0, 2]")));
        }
        Ok(TestFunction::HolderRadial { profile, beta })
    }

    pub fn name(&self) -> &'static str {
        match self {
            TestFunction::SmoothGauss => "smooth_gauss",
            TestFunction::LipschitzBump => "lipschitz_bump",
            TestFunction::HolderRadial { .. } => "holder_radial",
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        let r = norm(x);
        match *self {
            TestFunction::SmoothGauss => (-0.5 * r * r).exp(),
            TestFunction::LipschitzBump => (1.0 - r).max(0.0),
            TestFunction::HolderRadial { profile, beta } => profile.eval(r.powf(beta / 2.0)).0,
        }
    }

    /// Gradient, `None` where the function is not differentiable.
    pub fn gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let r = norm(x);
        match *self {
            TestFunction::SmoothGauss => {
                let u = self.value(x);
                Some(x.iter().map(|&v| -v * u).collect())
            }
            TestFunction::LipschitzBump => {
                if r == 0.0 || r == 1.0 {
                    None
                } else if r > 1.0 {
                    Some(vec![0.0; x.len()])
                } else {
                    Some(x.iter().map(|&v| -v / r).collect())
                }
            }
            TestFunction::HolderRadial { profile, beta } => {
                if r == 0.0 {
                    return None;
                }
                let g = beta / 2.0;
                let d = profile.eval(r.powf(g)).1 * g * r.powf(g - 1.0);
                Some(x.iter().map(|&v| d * v / r).collect())
            }
        }
    }

    /// Hessian (row-major), `None` where the function is not twice
    /// differentiable.
    pub fn hessian(&self, x: &[f64]) -> Option<Vec<Vec<f64>>> {
        let n = x.len();
        let r = norm(x);
        let radial = |g1: f64, g2: f64| -> Vec<Vec<f64>> {
            // g2 x̂x̂ᵀ + (g1/r)(I - x̂x̂ᵀ)
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            let p = x[i] * x[j] / (r * r);
                            let id = if i == j { 1.0 } else { 0.0 };
                            g2 * p + g1 / r * (id - p)
                        })
                        .collect()
                })
                .collect()
        };
        match *self {
            TestFunction::SmoothGauss => {
                let u = self.value(x);
                Some((0..n).map(|i| (0..n).map(|j| (x[i] * x[j] - if i == j { 1.0 } else { 0.0 }) * u).collect()).collect())
            }
            TestFunction::LipschitzBump => {
                if r == 0.0 || r == 1.0 {
                    None
                } else if r > 1.0 {
                    Some(vec![vec![0.0; n]; n])
                } else {
                    Some(radial(-1.0, 0.0))
                }
            }
            TestFunction::HolderRadial { profile, beta } => {
                if r == 0.0 {
                    return None;
                }
                let g = beta / 2.0;
                let (_, f1, f2) = profile.eval(r.powf(g));
                let g1 = f1 * g * r.powf(g - 1.0);
                let g2 = f2 * g * g * r.powf(2.0 * g - 2.0) + f1 * g * (g - 1.0) * r.powf(g - 2.0);
                Some(radial(g1, g2))
            }
        }
    }

    /// Hölder exponent and a constant `C` with `|u(x) - u(y)| <= C |x-y|^γ`.
    pub fn holder(&self) -> (f64, f64) {
        match *self {
            // |∇u| <= e^{-1/2}
            TestFunction::SmoothGauss => (1.0, (-0.5f64).exp()),
            TestFunction::LipschitzBump => (1.0, 1.0),
            TestFunction::HolderRadial { profile, beta } => (beta / 2.0, profile.lipschitz()),
        }
    }

    /// Whether the function is `C²` on all of `R^N`.
    pub fn is_c2(&self) -> bool {
        matches!(self, TestFunction::SmoothGauss)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_gradient(f: &TestFunction, x: &[f64]) -> Vec<f64> {
        let h = 1e-6;
        (0..x.len())
            .map(|i| {
                let mut a = x.to_vec();
                let mut b = x.to_vec();
                a[i] += h;
                b[i] -= h;
                (f.value(&a) - f.value(&b)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn gradients_match_finite_differences() {
        let fs = [
            TestFunction::SmoothGauss,
            TestFunction::LipschitzBump,
            TestFunction::holder_radial(Profile::Tanh, 0.5).unwrap(),
            TestFunction::holder_radial(Profile::Sin, 1.5).unwrap(),
        ];
        let x = [0.3, -0.4];
        for f in &fs {
            let g = f.gradient(&x).unwrap();
            let fd = fd_gradient(f, &x);
            for i in 0..2 {
                assert!((g[i] - fd[i]).abs() < 1e-7, "{}", f.name());
            }
        }
    }

    #[test]
    fn hessians_match_finite_differences() {
        let fs = [TestFunction::SmoothGauss, TestFunction::holder_radial(Profile::Tanh, 0.5).unwrap()];
        let x = [0.7, 0.2, -0.1];
        let h = 1e-5;
        for f in &fs {
            let hess = f.hessian(&x).unwrap();
            for j in 0..3 {
                let mut a = x.to_vec();
                let mut b = x.to_vec();
                a[j] += h;
                b[j] -= h;
                let (ga, gb) = (f.gradient(&a).unwrap(), f.gradient(&b).unwrap());
                for i in 0..3 {
                    let fd = (ga[i] - gb[i]) / (2.0 * h);
                    assert!((hess[i][j] - fd).abs() < 1e-6 * (1.0 + fd.abs()), "{} ({i},{j})", f.name());
                }
            }
        }
    }

    #[test]
    fn holder_radial_values() {
        let f = TestFunction::holder_radial(Profile::Identity, 0.5).unwrap();
        assert!((f.value(&[16.0]) - 2.0).abs() < 1e-15);
        assert_eq!(f.value(&[0.0]), 0.0);
        assert!(f.gradient(&[0.0]).is_none());
        assert_eq!(f.holder(), (0.25, 1.0));
        assert!(TestFunction::holder_radial(Profile::Identity, 2.5).is_err());
    }
}
