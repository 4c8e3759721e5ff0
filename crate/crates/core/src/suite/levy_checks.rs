use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::calculus::{
    correction_sum, ito_formula_rhs, state_increments, transform_increments, Increments, StateMap, Transform, WeightMode,
};
use crate::config::{Backend, Indicator, ItoMode};
use crate::error::{Error, Result};
use crate::levy::{
    char_exponent, char_exponent_quadrature, kernel_integral, GridCache, LevyModel, LevySampler, Point, TestFunction, TruncationPolicy,
};
use crate::path::PathSample;
use crate::trace::{accumulate, TraceKind};

use super::{par_indexed, Ctx, ResidualReport, Summary};

pub const DEFAULT_EPSILON: f64 = 1e-3;
pub const CHAR_TOL: f64 = 1e-6;
/// Algebraic identities on simulated jump paths.
const PATHWISE_TOL: f64 = 1e-9;

/// Compensator caches are tabulated in `s = asinh(|x| / ε)` up to this
/// radius: resolution `ε` near the origin, logarithmic further out.
const CACHE_RADIUS: f64 = 1e4;
const CACHE_CELLS: usize = 2000;
const CACHE_ABS_TOL: f64 = 1e-9;
const CACHE_REL_TOL: f64 = 1e-7;
/// Radial grid for the Hessian bound of the truncation budget.
const BUDGET_RADIUS: f64 = 10.0;
const BUDGET_POINTS: usize = 2000;

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn on_axis(dim: usize, r: f64) -> Point {
    let mut x = vec![0.0; dim];
    x[0] = r;
    x
}

/// Starting points alternate between `0` and `e_1`.
fn start(dim: usize, p: usize) -> Point {
    on_axis(dim, (p % 2) as f64)
}

fn epsilon(ctx: &Ctx<'_>) -> f64 {
    ctx.spec.epsilon.unwrap_or(DEFAULT_EPSILON)
}

fn sample_paths<T: Send>(
    ctx: &Ctx<'_>,
    sampler: &LevySampler,
    dim: usize,
    f: impl Fn(&PathSample<Point>) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    par_indexed(ctx.paths(), |p| {
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.path_seed(0, p));
        let path = sampler.sample_path(&start(dim, p), ctx.horizon(), &mut rng)?;
        f(&path)
    })
}

/// `x ↦ ∫_{|h|>ε} (ψ(x+h) - ψ(x)) ν(dh)` for a radial `ψ`, tabulated in
/// `|x|` (the model is rotation invariant, so the result is radial too).
struct RadialCompensator<F: Fn(f64) -> Result<f64> + Sync> {
    cache: GridCache<F>,
    eps: f64,
}

fn radial_compensator<'a>(
    model: &'a LevyModel,
    psi: impl Fn(&[f64]) -> f64 + Sync + 'a,
    eps: f64,
) -> Result<RadialCompensator<impl Fn(f64) -> Result<f64> + Sync + 'a>> {
    let dim = model.dim();
    let f = move |s: f64| {
        let r = eps * s.sinh();
        kernel_integral(model, |x: &[f64], y: &[f64]| psi(y) - psi(x), &on_axis(dim, r), eps).map(|v| v.value)
    };
    let hi = (CACHE_RADIUS / eps).asinh();
    Ok(RadialCompensator { cache: GridCache::build(f, 0.0, hi, CACHE_CELLS, CACHE_ABS_TOL, CACHE_REL_TOL)?, eps })
}

impl<F: Fn(f64) -> Result<f64> + Sync> RadialCompensator<F> {
    fn at(&self, x: &[f64]) -> Result<f64> {
        self.cache.eval((norm(x) / self.eps).asinh())
    }

    /// `∫_0^T G(X_s) ds` along a path.
    fn integral(&self, path: &PathSample<Point>) -> Result<f64> {
        let tr = crate::trace::try_accumulate(path, TraceKind::ZeroEnergy, |x| self.at(x), |_, _, _| Ok(0.0), |_| Ok(0.0))?;
        Ok(tr.terminal())
    }
}

fn test_u(ctx: &Ctx<'_>) -> Result<TestFunction> {
    let name = ctx.spec.u.first().ok_or_else(|| Error::InvalidArgument("check needs `u`".into()))?;
    ctx.test_fn(name)
}

/// Martingale part of `u(X)` on drop-small paths: `Σ Δu - ∫ N_ε φ_u(X_s) ds`.
pub fn fukushima(ctx: &Ctx<'_>) -> Result<ResidualReport> {
    let model = ctx.levy()?;
    let u = test_u(ctx)?;
    let eps = epsilon(ctx);
    let sampler = LevySampler::new(model, TruncationPolicy::drop_small(eps))?;
    let comp = radial_compensator(model, move |x: &[f64]| u.value(x), eps)?;
    let rows = sample_paths(ctx, &sampler, model.dim(), |path| {
        let jumps = accumulate(path, TraceKind::RawSum, |_| 0.0, |x, y, _| u.value(y) - u.value(x), |_| 0.0).terminal();
        let n = comp.integral(path)?;
        let m = jumps - n;
        let lhs = u.value(path.last_state()) - u.value(&path.x0);
        Ok((m, (lhs - m - n).abs()))
    })?;
    let samples: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let mut report = ResidualReport::statistical(ctx.spec, Backend::Levy, &samples);
    let algebraic = Summary::of(&rows.iter().map(|r| r.1).collect::<Vec<_>>()).max_abs;
    report.pass &= algebraic <= PATHWISE_TOL;
    report.detail("epsilon", eps);
    report.detail("sigma2", sampler.sigma2());
    report.detail("pathwise_max", algebraic);
    report.detail("cache_direct_fraction", comp.cache.direct_fraction());
    Ok(report)
}

fn hessian_sup(transform: Transform, u: &TestFunction, dim: usize) -> Result<f64> {
    let mut sup = 0.0f64;
    for i in 0..=BUDGET_POINTS {
        let x = on_axis(dim, BUDGET_RADIUS * i as f64 / BUDGET_POINTS as f64);
        let (g, h) = match (u.gradient(&x), u.hessian(&x)) {
            (Some(g), Some(h)) => (g, h),
            _ => return Err(Error::Unsupported(format!("`{}` is not C²", u.name()))),
        };
        let v = [u.value(&x)];
        let d1 = transform.gradient(&v)[0];
        let d2 = transform.hessian(&v)[0][0];
        let mut fro = 0.0;
        for a in 0..dim {
            for b in 0..dim {
                let e = d2 * g[a] * g[b] + d1 * h[a][b];
                fro += e * e;
            }
        }
        sup = sup.max(fro.sqrt());
    }
    Ok(sup)
}

/// `T · ½σ²(ε) · sup ‖Hess(Φ∘u)‖_F`: a bound on the drift of the dropped
/// small jumps.
fn truncation_budget(model: &LevyModel, horizon: f64, eps: f64, hess: f64) -> Result<f64> {
    let sigma2 = match model.small_jump_error_exact(eps) {
        Some(v) => v,
        None => model.small_jump_error(eps)?,
    };
    Ok(horizon * 0.5 * sigma2 * hess)
}

pub fn ito_formula(ctx: &Ctx<'_>) -> Result<ResidualReport> {
    let model = ctx.levy()?;
    let u = test_u(ctx)?;
    let transform = ctx.spec.transform.unwrap_or(Transform::Square);
    if transform.arity() != 1 {
        return Err(Error::Unsupported("Lévy Itô checks take a one-argument Φ".into()));
    }
    let eps = epsilon(ctx);
    let uf = move |x: &Point| u.value(x);
    let parts: Vec<&(dyn Fn(&Point) -> f64 + Sync)> = vec![&uf];
    let umap = StateMap::new(parts);
    let mode = ctx.spec.mode.unwrap_or(ItoMode::Ito);
    if mode == ItoMode::Continuous {
        return continuous(ctx, model, transform, &umap, eps);
    }
    let weight = if mode == ItoMode::Ito { WeightMode::Ito } else { WeightMode::Stratonovich };
    let sampler = LevySampler::new(model, TruncationPolicy::drop_small(eps))?;
    let comp = radial_compensator(model, move |x: &[f64]| transform.value(&[u.value(x)]), eps)?;
    let rows = sample_paths(ctx, &sampler, model.dim(), |path| {
        let a = state_increments(|x: Option<&Point>| x.map_or(0.0, |x| u.value(x)), path);
        let lhs = transform_increments(transform, &umap, path);
        let (rhs, _) = ito_formula_rhs(transform, &umap, &[a], path, weight)?;
        Ok((rhs.terminal() - comp.integral(path)?, lhs.sup_distance(&rhs)))
    })?;
    let samples: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let mut report = ResidualReport::statistical(ctx.spec, Backend::Levy, &samples);
    let algebraic = Summary::of(&rows.iter().map(|r| r.1).collect::<Vec<_>>()).max_abs;
    let hess = hessian_sup(transform, &u, model.dim())?;
    let budget = truncation_budget(model, ctx.horizon(), eps, hess)?;
    let budget_half = truncation_budget(model, ctx.horizon(), 0.5 * eps, hess)?;
    report.pass &= algebraic <= PATHWISE_TOL && budget_half < budget;
    report.detail("epsilon", eps);
    report.detail("pathwise_max", algebraic);
    report.detail("budget", budget);
    report.detail("budget_half", budget_half);
    report.detail("cache_direct_fraction", comp.cache.direct_fraction());
    Ok(report)
}

/// Chain rule on the continuous part: with small jumps replaced by a
/// Brownian motion, the midpoint correction over continuous increments
/// vanishes in the mesh limit while the Itô-form one does not.
fn continuous(ctx: &Ctx<'_>, model: &LevyModel, transform: Transform, u: &StateMap<'_, Point>, eps: f64) -> Result<ResidualReport> {
    let steps = ctx.spec.bm_steps.unwrap_or(256);
    let sampler = LevySampler::new(model, TruncationPolicy::compensated(eps, steps))?;
    let rows = sample_paths(ctx, &sampler, model.dim(), |path| {
        let strat = correction_sum(transform, u, path, WeightMode::Stratonovich, Increments::Continuous).terminal();
        let ito = correction_sum(transform, u, path, WeightMode::Ito, Increments::Continuous).terminal();
        Ok((strat, ito))
    })?;
    let samples: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let mut report = ResidualReport::statistical(ctx.spec, Backend::Levy, &samples);
    report.detail("epsilon", eps);
    report.detail("sigma2", sampler.sigma2());
    report.detail("ito_form_mean", Summary::of(&rows.iter().map(|r| r.1).collect::<Vec<_>>()).mean);
    Ok(report)
}

pub fn levy_system(ctx: &Ctx<'_>) -> Result<ResidualReport> {
    let model = ctx.levy()?;
    let threshold = ctx.spec.threshold.unwrap_or(1.0);
    let eps = ctx.spec.epsilon.unwrap_or(threshold);
    if eps > threshold {
        return Err(Error::InvalidArgument(format!("cutoff {eps} above the indicator threshold {threshold}")));
    }
    let indicator = ctx.spec.indicator.unwrap_or(Indicator::Tail);
    let psi = move |h: &[f64]| -> f64 {
        if norm(h) <= threshold {
            return 0.0;
        }
        match indicator {
            Indicator::Tail => 1.0,
            Indicator::Odd => h[0].signum(),
        }
    };
    let dim = model.dim();
    // translation invariance: Nψ is the same at every point
    let n_psi =
        kernel_integral(model, |x: &[f64], y: &[f64]| psi(&y.iter().zip(x).map(|(a, b)| a - b).collect::<Vec<_>>()), &vec![0.0; dim], eps)?
            .value;
    let t = ctx.horizon();
    let sampler = LevySampler::new(model, TruncationPolicy::drop_small(eps))?;
    let samples = sample_paths(ctx, &sampler, dim, |path| {
        let sum =
            accumulate(path, TraceKind::RawSum, |_| 0.0, |x, y, _| psi(&y.iter().zip(x).map(|(a, b)| a - b).collect::<Vec<_>>()), |_| 0.0);
        Ok(sum.terminal() - t * n_psi)
    })?;
    let mut report = ResidualReport::statistical(ctx.spec, Backend::Levy, &samples);
    report.detail("n_psi", n_psi);
    report.detail("expected", t * n_psi);
    report.detail("mc_mean", t * n_psi + report.mean_resid);
    if indicator == Indicator::Tail {
        if let Some(exact) = model.tail_mass_exact(threshold) {
            report.detail("n_psi_exact", exact);
        }
    }
    Ok(report)
}

/// Quadrature of the characteristic exponent against its closed form, on
/// the first axis and the diagonal.
pub fn char_exponent_check(ctx: &Ctx<'_>) -> Result<ResidualReport> {
    let model = ctx.levy()?;
    let dim = model.dim();
    let radii = ctx.spec.xi.clone().unwrap_or_else(|| vec![0.5, 1.0, 2.0, 5.0]);
    let diag = vec![1.0 / (dim as f64).sqrt(); dim];
    let dirs = if dim > 1 { vec![on_axis(dim, 1.0), diag] } else { vec![on_axis(dim, 1.0)] };
    let mut res = Vec::new();
    for dir in &dirs {
        for &r in &radii {
            let xi: Vec<f64> = dir.iter().map(|d| d * r).collect();
            let quad = char_exponent_quadrature(model, &xi, 0.0)?.value;
            let reference = match model.alpha() {
                Some(_) => char_exponent(model, &xi)?,
                // no closed form: compare against the axis value (isotropy)
                None => char_exponent_quadrature(model, &on_axis(dim, r), 0.0)?.value,
            };
            res.push(quad - reference);
        }
    }
    Ok(ResidualReport::pathwise(ctx.spec, Backend::Levy, ctx.tolerance(CHAR_TOL), res.len(), &res))
}
