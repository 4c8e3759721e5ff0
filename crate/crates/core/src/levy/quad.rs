//! Quadrature against rotation-invariant Lévy measures.
//!
//! Radial integrals run in `s = ln r` over decade panels. The unbounded ends
//! (`r → 0`, `r → ∞`) are walked one decade at a time and closed with a
//! geometric remainder once the per-decade ratio has settled, which is exact
//! for power laws; a ratio stuck at or above one is reported as divergence.

use crate::error::{Error, Result};
use crate::quad::{integrate, Integral};

use super::model::{sphere_area, LevyModel};

const MAX_DECADES: usize = 80;
const DIVERGENCE_RUN: usize = 6;

fn log_panel<G: Fn(f64) -> f64>(g: &G, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<Integral> {
    integrate(
        |s| {
            let r = s.exp();
            g(r) * r
        },
        a.ln(),
        b.ln(),
        abs_tol,
        rel_tol,
    )
}

/// `∫_lo^hi g(r) dr` for `0 <= lo < hi <= ∞`, with extra interior
/// breakpoints (ignored when outside the range).
pub fn radial_integral<G: Fn(f64) -> f64>(g: G, lo: f64, hi: f64, breakpoints: &[f64], abs_tol: f64, rel_tol: f64) -> Result<Integral> {
    if !(lo >= 0.0 && hi > lo) {
        if hi == lo {
            return Ok(Integral::ZERO);
        }
        return Err(Error::InvalidArgument(format!("bad radial range [{lo}, {hi}]")));
    }
    let mut pts: Vec<f64> = breakpoints.iter().copied().filter(|&p| p > lo && p < hi && p.is_finite()).collect();
    if lo > 0.0 {
        pts.push(lo);
    }
    if hi.is_finite() {
        pts.push(hi);
    }
    if pts.is_empty() {
        pts.push(1.0);
    }
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    // split long stretches into decades
    let mut knots = vec![pts[0]];
    for &p in &pts[1..] {
        let last = *knots.last().expect("non-empty");
        let decades = (p / last).log10().ceil().max(1.0) as usize;
        let step = (p / last).powf(1.0 / decades as f64);
        for i in 1..decades {
            knots.push(last * step.powi(i as i32));
        }
        knots.push(p);
    }
    let mut total = Integral::ZERO;
    for w in knots.windows(2) {
        total = total + log_panel(&g, w[0], w[1], abs_tol / knots.len() as f64, rel_tol)?;
    }
    if lo == 0.0 {
        total = total + tail_walk(&g, knots[0], false, total.value, abs_tol, rel_tol)?;
    }
    if hi.is_infinite() {
        total = total + tail_walk(&g, *knots.last().expect("non-empty"), true, total.value, abs_tol, rel_tol)?;
    }
    Ok(total)
}

fn tail_walk<G: Fn(f64) -> f64>(g: &G, start: f64, upward: bool, base: f64, abs_tol: f64, rel_tol: f64) -> Result<Integral> {
    let factor: f64 = if upward { 10.0 } else { 0.1 };
    let mut edge = start;
    let mut partial = Integral::ZERO;
    let mut prev_chunk: Option<f64> = None;
    let mut prev_ratio: Option<f64> = None;
    let mut prev_extrap: Option<f64> = None;
    let mut growing = 0usize;
    for _ in 0..MAX_DECADES {
        let next = edge * factor;
        if !(next > 0.0 && next.is_finite()) {
            break;
        }
        let (a, b) = if upward { (edge, next) } else { (next, edge) };
        let chunk = log_panel(g, a, b, abs_tol * 1e-3, rel_tol * 1e-2)?;
        partial = partial + chunk;
        edge = next;
        let target = abs_tol.max(rel_tol * (base + partial.value).abs());
        if chunk.value.abs() <= 1e-3 * target && prev_chunk.is_some_and(|c: f64| c.abs() <= 1e-2 * target) {
            return Ok(partial);
        }
        if let Some(c) = prev_chunk {
            let ratio = if c != 0.0 { chunk.value / c } else { f64::INFINITY };
            if ratio.abs() >= 1.0 {
                growing += 1;
                if growing >= DIVERGENCE_RUN {
                    return Err(Error::Divergent(format!(
                        "radial integrand does not decay towards r = {}",
                        if upward { "infinity" } else { "0" }
                    )));
                }
            } else {
                growing = 0;
                let remainder = chunk.value * ratio / (1.0 - ratio);
                let extrap = partial.value + remainder;
                if let (Some(pe), Some(pr)) = (prev_extrap, prev_ratio) {
                    let err = (extrap - pe).abs() + (ratio - pr).abs() * remainder.abs();
                    if err <= target && ratio >= 0.0 {
                        return Ok(Integral { value: extrap, error: partial.error + err });
                    }
                }
                prev_extrap = Some(extrap);
            }
            prev_ratio = Some(ratio);
        }
        prev_chunk = Some(chunk.value);
    }
    Err(Error::Quadrature { estimate: base + partial.value, achieved: f64::NAN, requested: abs_tol.max(rel_tol * base.abs()) })
}

/// `∫_{S^{N-1}} g(θ) dσ(θ)` by nested quadrature in hyperspherical
/// coordinates; exact two-point sum for `N = 1`.
pub fn sphere_integral<G: Fn(&[f64]) -> f64>(dim: usize, g: &G, rel_tol: f64) -> Result<f64> {
    let mut dir = vec![0.0; dim];
    sphere_rec(dim, 0, 1.0, &mut dir, g, rel_tol)
}

fn sphere_rec<G: Fn(&[f64]) -> f64>(dim: usize, k: usize, scale: f64, dir: &mut Vec<f64>, g: &G, rel_tol: f64) -> Result<f64> {
    let left = dim - k;
    if left == 1 {
        dir[k] = scale;
        let a = g(dir);
        dir[k] = -scale;
        let b = g(dir);
        return Ok(a + b);
    }
    if left == 2 {
        return integrate(
            |t| {
                dir[k] = scale * t.cos();
                dir[k + 1] = scale * t.sin();
                g(dir)
            },
            0.0,
            2.0 * std::f64::consts::PI,
            1e-15,
            rel_tol,
        )
        .map(|v| v.value);
    }
    let power = (left - 2) as i32;
    let dir_cell = std::cell::RefCell::new(std::mem::take(dir));
    let mut failure = None;
    let r = integrate(
        |t| {
            let mut d = dir_cell.borrow_mut();
            d[k] = scale * t.cos();
            let inner = sphere_rec(dim, k + 1, scale * t.sin(), &mut d, g, rel_tol);
            match inner {
                Ok(v) => v * t.sin().powi(power),
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        },
        0.0,
        std::f64::consts::PI,
        1e-15,
        rel_tol,
    );
    *dir = dir_cell.into_inner();
    if let Some(e) = failure {
        return Err(e);
    }
    r.map(|v| v.value)
}

/// Relative tolerance of kernel quadratures.
pub const KERNEL_RTOL: f64 = 1e-8;

/// `∫_{|h| > eps} ψ(x, x + h) ν(dh)` (use `eps = 0` for the full kernel).
/// `ψ` must vanish on the diagonal and be `O(|h|²)` after symmetrisation
/// near `0`; a non-decaying integrand is reported as divergent.
pub fn kernel_integral<P: Fn(&[f64], &[f64]) -> f64>(model: &LevyModel, psi: P, x: &[f64], eps: f64) -> Result<Integral> {
    let dim = model.dim();
    if x.len() != dim {
        return Err(Error::Shape { expected: dim, got: x.len() });
    }
    let norm_x = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let hi = model.support_end().unwrap_or(f64::INFINITY);
    if eps >= hi {
        return Ok(Integral::ZERO);
    }
    let failure = std::cell::Cell::new(false);
    let radial = |r: f64| -> f64 {
        let ang = sphere_integral(
            dim,
            &|theta: &[f64]| {
                let y: Vec<f64> = x.iter().zip(theta).map(|(&xi, &ti)| xi + r * ti).collect();
                psi(x, &y)
            },
            1e-11,
        );
        match ang {
            Ok(a) => a * model.density_unchecked(r) * r.powi(dim as i32 - 1),
            Err(_) => {
                failure.set(true);
                0.0
            }
        }
    };
    let mut bps = vec![1.0];
    if norm_x > 0.0 {
        bps.push(norm_x);
    }
    let v = radial_integral(radial, eps, hi, &bps, 1e-13, KERNEL_RTOL)?;
    if failure.get() || !v.value.is_finite() {
        return Err(Error::Quadrature { estimate: v.value, achieved: f64::NAN, requested: KERNEL_RTOL });
    }
    Ok(v)
}

/// `∫_{S^{N-1}} (1 - cos(s θ_1)) dσ(θ)`, computed without cancellation.
fn sphere_one_minus_cos(dim: usize, s: f64) -> f64 {
    let n = dim as f64;
    let area = sphere_area(dim);
    if s < 0.05 {
        let s2 = s * s;
        let m2 = 1.0 / n;
        let m4 = 3.0 / (n * (n + 2.0));
        let m6 = 15.0 / (n * (n + 2.0) * (n + 4.0));
        let m8 = 105.0 / (n * (n + 2.0) * (n + 4.0) * (n + 6.0));
        return area * (s2 * m2 / 2.0 - s2 * s2 * m4 / 24.0 + s2 * s2 * s2 * m6 / 720.0 - s2 * s2 * s2 * s2 * m8 / 40320.0);
    }
    area - sphere_cos(dim, s)
}

/// `∫_{S^{N-1}} cos(s θ_1) dσ(θ)`.
fn sphere_cos(dim: usize, s: f64) -> f64 {
    use std::f64::consts::PI;
    match dim {
        1 => 2.0 * s.cos(),
        2 => 2.0 * PI * libm::j0(s),
        3 => 4.0 * PI * if s == 0.0 { 1.0 } else { s.sin() / s },
        _ => {
            let power = (dim - 2) as i32;
            let inner = sphere_area(dim - 1);
            integrate(|t: f64| t.sin().powi(power) * (s * t.cos()).cos(), 0.0, PI, 1e-15, 1e-13)
                .map(|v| inner * v.value)
                .unwrap_or(f64::NAN)
        }
    }
}

const CHAR_PERIODS: f64 = 4.0;
const CHAR_PANELS: usize = 48;

/// `∫_{|h| > eps} (1 - cos⟨ξ, h⟩) ν(dh)` by quadrature. The oscillatory
/// far field is summed over half periods with repeated averaging of the
/// partial sums.
pub fn char_exponent_quadrature(model: &LevyModel, xi: &[f64], eps: f64) -> Result<Integral> {
    let dim = model.dim();
    if xi.len() != dim {
        return Err(Error::Shape { expected: dim, got: xi.len() });
    }
    let rho = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    if rho == 0.0 {
        return Ok(Integral::ZERO);
    }
    let end = model.support_end().unwrap_or(f64::INFINITY);
    let radial = |r: f64| model.density_unchecked(r) * r.powi(dim as i32 - 1);
    let r0 = (2.0 * std::f64::consts::PI * CHAR_PERIODS / rho).max(eps);
    let near = radial_integral(|r| radial(r) * sphere_one_minus_cos(dim, rho * r), eps, r0.min(end), &[1.0 / rho, 1.0], 1e-14, 1e-11)?;
    if r0 >= end {
        return Ok(near);
    }
    // far field: ∫_{r0}^∞ (S - cos-average) f r^{N-1} dr = S·tail - oscillatory part
    let tail = sphere_area(dim) * radial_integral(radial, r0, end, &[], 1e-15, 1e-12)?.value;
    let half = std::f64::consts::PI / rho;
    let mut sums = Vec::with_capacity(CHAR_PANELS);
    let mut acc = 0.0;
    let mut err = 0.0;
    for j in 0..CHAR_PANELS {
        let a = r0 + j as f64 * half;
        if a >= end {
            sums.push(acc);
            continue;
        }
        let b = (a + half).min(end);
        let p = integrate(|r| radial(r) * sphere_cos(dim, rho * r), a, b, 1e-16, 1e-12)?;
        acc += p.value;
        err += p.error;
        sums.push(acc);
    }
    // repeated averaging of consecutive partial sums (Euler-type acceleration)
    let mut level = sums;
    let mut last_delta = f64::INFINITY;
    while level.len() > 2 {
        let next: Vec<f64> = level.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
        last_delta = (next[next.len() - 1] - level[level.len() - 1]).abs();
        level = next;
        if level.len() <= CHAR_PANELS / 2 {
            break;
        }
    }
    let osc = *level.last().expect("panels");
    let value = near.value + tail - osc;
    let error = near.error + err + last_delta.min(1.0);
    if error > KERNEL_RTOL.max(1e-6 * value.abs()) * value.abs().max(1.0) {
        return Err(Error::Quadrature { estimate: value, achieved: error, requested: KERNEL_RTOL * value.abs() });
    }
    Ok(Integral { value, error })
}

/// Characteristic exponent `ψ(ξ)` with `E e^{i⟨ξ, X_t - X_0⟩} = e^{-tψ(ξ)}`:
/// closed form `|ξ|^α` for stable models, quadrature otherwise.
pub fn char_exponent(model: &LevyModel, xi: &[f64]) -> Result<f64> {
    if xi.len() != model.dim() {
        return Err(Error::Shape { expected: model.dim(), got: xi.len() });
    }
    match model.alpha() {
        Some(alpha) => Ok(xi.iter().map(|v| v * v).sum::<f64>().sqrt().powf(alpha)),
        None => char_exponent_quadrature(model, xi, 0.0).map(|v| v.value),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn radial_integral_power_law_tails() {
        // ∫_0^1 r^{-0.5} dr = 2, ∫_1^∞ r^{-2} dr = 1
        let a = radial_integral(|r: f64| r.powf(-0.5), 0.0, 1.0, &[], 1e-14, 1e-12).unwrap();
        assert!((a.value - 2.0).abs() < 1e-11, "{}", a.value);
        let b = radial_integral(|r: f64| r.powi(-2), 1.0, f64::INFINITY, &[], 1e-14, 1e-12).unwrap();
        assert!((b.value - 1.0).abs() < 1e-11, "{}", b.value);
        let c = radial_integral(|r: f64| r.powf(-1.5), 0.0, 1.0, &[], 1e-14, 1e-12);
        assert!(matches!(c, Err(Error::Divergent(_))));
    }

    #[test]
    fn sphere_integral_of_constant_is_area() {
        for dim in 1..=4 {
            let v = sphere_integral(dim, &|_| 1.0, 1e-12).unwrap();
            assert!((v - sphere_area(dim)).abs() < 1e-10, "dim {dim}");
        }
        // ∫_{S^2} θ_3² = 4π/3
        let v = sphere_integral(3, &|t| t[2] * t[2], 1e-12).unwrap();
        assert!((v - 4.0 * PI / 3.0).abs() < 1e-10);
    }

    #[test]
    fn cauchy_tail_indicator() {
        let m = LevyModel::cauchy();
        let v = kernel_integral(&m, |x, y| if (y[0] - x[0]).abs() > 1.0 { 1.0 } else { 0.0 }, &[0.3], 0.0).unwrap();
        assert!((v.value - 2.0 / PI).abs() < 1e-9, "{}", v.value);
    }

    #[test]
    fn odd_kernel_integrates_to_zero() {
        let m = LevyModel::stable(2, 0.8).unwrap();
        let v = kernel_integral(&m, |x, y| (y[0] - x[0]).tanh(), &[0.0, 0.0], 0.0).unwrap();
        assert!(v.value.abs() < 1e-9);
    }

    #[test]
    fn cauchy_char_exponent_by_quadrature() {
        let m = LevyModel::cauchy();
        for xi in [0.5, 1.0, 3.0] {
            let v = char_exponent_quadrature(&m, &[xi], 0.0).unwrap();
            assert!((v.value - xi).abs() < 1e-6, "ξ = {xi}: {}", v.value);
        }
        assert_eq!(char_exponent(&m, &[2.0]).unwrap(), 2.0);
        assert_eq!(char_exponent(&m, &[0.0]).unwrap(), 0.0);
    }

    #[test]
    fn stable_char_exponent_in_higher_dimensions() {
        for (dim, alpha) in [(2, 1.5), (3, 0.7)] {
            let m = LevyModel::stable(dim, alpha).unwrap();
            let mut xi = vec![0.0; dim];
            xi[0] = 1.3;
            let v = char_exponent_quadrature(&m, &xi, 0.0).unwrap();
            assert!((v.value - 1.3f64.powf(alpha)).abs() < 1e-6, "dim {dim}: {}", v.value);
        }
    }
}
