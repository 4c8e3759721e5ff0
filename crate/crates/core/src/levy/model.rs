use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

use super::quad::radial_integral;

/// Surface area of the unit sphere `S^{N-1}` (2 for `N = 1`).
pub fn sphere_area(dim: usize) -> f64 {
    let n = dim as f64;
    2.0 * std::f64::consts::PI.powf(n / 2.0) / libm::tgamma(n / 2.0)
}

/// Normalising constant `A(N, -α)` of the rotation-invariant `α`-stable
/// Lévy density `A |h|^{-N-α}` whose exponent is `|ξ|^α`.
pub fn stable_constant(dim: usize, alpha: f64) -> f64 {
    let n = dim as f64;
    alpha * libm::tgamma((n + alpha) / 2.0)
        / (2f64.powf(1.0 - alpha) * std::f64::consts::PI.powf(n / 2.0) * libm::tgamma(1.0 - alpha / 2.0))
}

/// A radial Lévy density `f(|h|)`.
#[derive(Clone)]
pub enum RadialDensity {
    /// Knots `(r_i, f_i)` with `r` increasing and `f > 0`; log-log linear in
    /// between, extended below `r_0` with the first segment's power law and
    /// zero beyond the last knot.
    Tabulated { r: Vec<f64>, f: Vec<f64> },
    /// Arbitrary callable; `tail_ok` asserts `∫_1^∞ f(r) r^{N-1} dr < ∞`.
    Function { f: Arc<dyn Fn(f64) -> f64 + Send + Sync>, tail_ok: bool },
}

impl fmt::Debug for RadialDensity {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadialDensity::Tabulated { r, .. } => write!(fm, "Tabulated({} knots)", r.len()),
            RadialDensity::Function { tail_ok, .. } => write!(fm, "Function(tail_ok = {tail_ok})"),
        }
    }
}

impl RadialDensity {
    pub fn tabulated(r: Vec<f64>, f: Vec<f64>) -> Result<Self> {
        if r.len() != f.len() {
            return Err(Error::Shape { expected: r.len(), got: f.len() });
        }
        if r.len() < 2 {
            return Err(Error::InvalidModel("radial density needs at least two knots".into()));
        }
        if !r.windows(2).all(|w| w[0] < w[1]) || !(r[0] > 0.0) {
            return Err(Error::InvalidModel("knot radii must be positive and strictly increasing".into()));
        }
        if !f.iter().all(|&v| v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidModel("knot densities must be positive and finite".into()));
        }
        Ok(RadialDensity::Tabulated { r, f })
    }

    pub fn eval(&self, radius: f64) -> f64 {
        match self {
            RadialDensity::Function { f, .. } => f(radius),
            RadialDensity::Tabulated { r, f } => {
                let n = r.len();
                if radius > r[n - 1] {
                    return 0.0;
                }
                let i = r.partition_point(|&k| k <= radius).clamp(1, n - 1);
                let (r0, r1) = (r[i - 1].ln(), r[i].ln());
                let (f0, f1) = (f[i - 1].ln(), f[i].ln());
                let slope = (f1 - f0) / (r1 - r0);
                (f0 + slope * (radius.ln() - r0)).exp()
            }
        }
    }

    /// Largest radius with non-zero density, if bounded.
    pub fn support_end(&self) -> Option<f64> {
        match self {
            RadialDensity::Tabulated { r, .. } => r.last().copied(),
            RadialDensity::Function { .. } => None,
        }
    }
}

#[derive(Debug, Clone)]
pub enum LevySpec {
    Stable { alpha: f64 },
    Radial { density: RadialDensity },
}

/// Symmetric pure-jump Lévy process on `R^N` with a rotation-invariant Lévy
/// measure `ν(dh) = f(|h|) dh`.
#[derive(Debug, Clone)]
pub struct LevyModel {
    dim: usize,
    spec: LevySpec,
    a_const: Option<f64>,
}

impl LevyModel {
    pub fn stable(dim: usize, alpha: f64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidModel("dimension must be at least 1".into()));
        }
        if !(alpha > 0.0 && alpha < 2.0) {
            return Err(Error::InvalidModel(format!("stability index {alpha} outside (0, 2)")));
        }
        Ok(Self { dim, spec: LevySpec::Stable { alpha }, a_const: Some(stable_constant(dim, alpha)) })
    }

    /// The Cauchy process on the line.
    pub fn cauchy() -> Self {
        Self::stable(1, 1.0).expect("valid parameters")
    }

    /// Radial model; checks `∫(|h|² ∧ 1) ν(dh) < ∞` by quadrature.
    pub fn radial(dim: usize, density: RadialDensity) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidModel("dimension must be at least 1".into()));
        }
        if let RadialDensity::Function { tail_ok: false, .. } = density {
            return Err(Error::InvalidModel("radial density must satisfy the tail integrability condition".into()));
        }
        let model = Self { dim, spec: LevySpec::Radial { density }, a_const: None };
        let near = model.small_jump_error(1.0)?;
        let far = model.tail_mass(1.0)?;
        if !(near.is_finite() && far.is_finite()) {
            return Err(Error::InvalidModel("Lévy measure is not integrable against |h|² ∧ 1".into()));
        }
        Ok(model)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spec(&self) -> &LevySpec {
        &self.spec
    }

    pub fn alpha(&self) -> Option<f64> {
        match self.spec {
            LevySpec::Stable { alpha } => Some(alpha),
            LevySpec::Radial { .. } => None,
        }
    }

    pub fn a_const(&self) -> Option<f64> {
        self.a_const
    }

    /// Radial density without argument checks (internal hot path).
    pub(crate) fn density_unchecked(&self, r: f64) -> f64 {
        match &self.spec {
            LevySpec::Stable { alpha } => self.a_const.expect("stable constant") * r.powf(-(self.dim as f64) - alpha),
            LevySpec::Radial { density } => density.eval(r),
        }
    }

    /// Radial Lévy density at `r > 0`.
    pub fn levy_density(&self, r: f64) -> Result<f64> {
        if !(r > 0.0) {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {r}")));
        }
        Ok(self.density_unchecked(r))
    }

    /// Density of `|h|` under `ν`: `S_{N-1} f(r) r^{N-1}`.
    pub(crate) fn radial_measure(&self, r: f64) -> f64 {
        sphere_area(self.dim) * self.density_unchecked(r) * r.powi(self.dim as i32 - 1)
    }

    pub(crate) fn support_end(&self) -> Option<f64> {
        match &self.spec {
            LevySpec::Stable { .. } => None,
            LevySpec::Radial { density } => density.support_end(),
        }
    }

    /// `λ(ε) = ν({|h| > ε})`.
    pub fn tail_mass(&self, eps: f64) -> Result<f64> {
        check_eps(eps)?;
        let area = sphere_area(self.dim);
        let dim = self.dim as i32;
        let v = radial_integral(
            |r| self.density_unchecked(r) * r.powi(dim - 1),
            eps,
            self.support_end().unwrap_or(f64::INFINITY),
            &[1.0],
            1e-13,
            1e-11,
        )?;
        Ok(area * v.value)
    }

    /// Closed form of `λ(ε)` when available (stable case).
    pub fn tail_mass_exact(&self, eps: f64) -> Option<f64> {
        let alpha = self.alpha()?;
        Some(sphere_area(self.dim) * self.a_const? * eps.powf(-alpha) / alpha)
    }

    /// `σ²(ε) = ∫_{|h| < ε} |h|² ν(dh)`, the variance rate of the dropped
    /// small jumps.
    pub fn small_jump_error(&self, eps: f64) -> Result<f64> {
        check_eps(eps)?;
        let area = sphere_area(self.dim);
        let dim = self.dim as i32;
        let hi = self.support_end().map_or(eps, |s| s.min(eps));
        let v = radial_integral(|r| self.density_unchecked(r) * r.powi(dim + 1), 0.0, hi, &[], 1e-15, 1e-11)?;
        Ok(area * v.value)
    }

    pub fn small_jump_error_exact(&self, eps: f64) -> Option<f64> {
        let alpha = self.alpha()?;
        Some(sphere_area(self.dim) * self.a_const? * eps.powf(2.0 - alpha) / (2.0 - alpha))
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("cutoff must be positive and finite, got {eps}")))
    }
}

/// How small jumps are handled when sampling: jumps with `|h| <= epsilon` are
/// dropped, or replaced by a Brownian motion of matching covariance when
/// `compensate` is set.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TruncationPolicy {
    pub epsilon: f64,
    #[serde(default)]
    pub compensate: bool,
    /// Brownian steps per unit time when compensating.
    #[serde(default = "default_bm_steps")]
    pub bm_steps: usize,
}

fn default_bm_steps() -> usize {
    256
}

impl TruncationPolicy {
    pub fn drop_small(epsilon: f64) -> Self {
        Self { epsilon, compensate: false, bm_steps: default_bm_steps() }
    }

    pub fn compensated(epsilon: f64, bm_steps: usize) -> Self {
        Self { epsilon, compensate: true, bm_steps }
    }

    pub fn validate(&self) -> Result<()> {
        check_eps(self.epsilon)?;
        if self.compensate && self.bm_steps == 0 {
            return Err(Error::InvalidArgument("compensation needs at least one Brownian step".into()));
        }
        Ok(())
    }
}
