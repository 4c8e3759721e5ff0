use crate::error::{Error, Result};
use crate::path::PathSample;
use crate::scalar::Scalar;
use crate::trace::{accumulate, try_accumulate, AfTrace, TraceKind};

use super::compensator::{CompensatorEvaluator, JumpMap};

/// Agreement required between the two Stratonovich routes, relative to the
/// size of the traces involved.
pub const STRATONOVICH_ROUTE_TOL: f64 = 1e-12;

/// Breakpoints of `m` together with the event times and lifetime of `path`.
fn merged_times<S: Clone, T: Scalar>(m: &AfTrace<T>, path: &PathSample<S, T>) -> Vec<T> {
    let mut ts: Vec<T> = m.times().to_vec();
    ts.extend(path.events.iter().map(|e| e.time));
    if path.killed && path.zeta <= path.horizon {
        ts.push(path.zeta);
    }
    ts.push(path.horizon);
    ts.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    ts.dedup();
    ts
}

fn weigh<S, T: Scalar, F: Fn(&S) -> T>(f: &F, x: Option<&S>) -> T {
    x.map_or_else(T::zero, f)
}

/// Integral of `m` against piecewise-constant weights: `cont(a)` on each
/// open interval starting at breakpoint `a`, `jump(b)` on the jump at `b`.
fn weighted<S: Clone, T: Scalar>(
    m: &AfTrace<T>,
    path: &PathSample<S, T>,
    kind: TraceKind,
    mut cont: impl FnMut(T) -> T,
    mut jump: impl FnMut(T) -> T,
) -> AfTrace<T> {
    let times = merged_times(m, path);
    let mut values = vec![T::zero()];
    let mut left = vec![T::zero()];
    let mut acc = T::zero();
    for w in times.windows(2) {
        let (a, b) = (w[0], w[1]);
        acc = acc + cont(a) * (m.eval_left(b) - m.eval(a));
        left.push(acc);
        acc = acc + jump(b) * m.jump_at(b);
        values.push(acc);
    }
    AfTrace::from_parts(kind, times, values, left)
}

/// `∫_0^t f(X_{s-}) dM_s`, exact along the path. `f` is a state function;
/// the cemetery value is zero by convention.
pub fn ito_integral<S: Clone, T: Scalar, F: Fn(&S) -> T>(f: F, m: &AfTrace<T>, path: &PathSample<S, T>) -> AfTrace<T> {
    weighted(m, path, m.kind, |a| weigh(&f, path.state_at(a)), |b| weigh(&f, path.state_before(b)))
}

/// `Σ_ℓ f(X_{ℓt/n}) (M_{(ℓ+1)t/n} - M_{ℓt/n})`, interpolated inside each
/// cell as `f(X_{ℓt/n})(M_s - M_{ℓt/n})`.
pub fn riemann_approx<S: Clone, T: Scalar, F: Fn(&S) -> T>(f: F, m: &AfTrace<T>, path: &PathSample<S, T>, n: usize) -> Result<AfTrace<T>> {
    if n == 0 {
        return Err(Error::InvalidArgument("mesh must have at least one cell".into()));
    }
    let t = path.horizon;
    let grid: Vec<T> = (0..=n).map(|l| t * T::of(l as f64) / T::of(n as f64)).collect();
    let mut times = merged_times(m, path);
    times.extend_from_slice(&grid);
    times.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    times.dedup();
    let mut values = vec![T::zero()];
    let mut left = vec![T::zero()];
    let mut acc = T::zero();
    let mut cell = 0usize;
    for w in times.windows(2) {
        let (a, b) = (w[0], w[1]);
        while cell + 1 < n && grid[cell + 1] <= a {
            cell += 1;
        }
        let weight = weigh(&f, path.state_at(grid[cell]));
        acc = acc + weight * (m.eval_left(b) - m.eval(a));
        left.push(acc);
        acc = acc + weight * m.jump_at(b);
        values.push(acc);
    }
    Ok(AfTrace::from_parts(m.kind, times, values, left))
}

/// `[M, N]_t = Σ_{s<=t} ΔM_s ΔN_s`, plus the covariation of the continuous
/// parts when supplied (zero on chains).
pub fn square_bracket<T: Scalar>(m: &AfTrace<T>, n: &AfTrace<T>, continuous: Option<&AfTrace<T>>) -> AfTrace<T> {
    let mut times: Vec<T> = m.times().iter().chain(n.times()).copied().collect();
    times.sort_by(|a, b| a.partial_cmp(b).expect("finite times"));
    times.dedup();
    let mut values = Vec::with_capacity(times.len());
    let mut left = Vec::with_capacity(times.len());
    let mut acc = T::zero();
    for &t in &times {
        left.push(acc);
        acc = acc + m.jump_at(t) * n.jump_at(t);
        values.push(acc);
    }
    let jumps = AfTrace::from_parts(TraceKind::Bracket, times, values, left);
    match continuous {
        Some(c) => AfTrace::linear_combination(TraceKind::Bracket, &[(T::one(), &jumps), (T::one(), c)]),
        None => jumps,
    }
}

/// `⟨M_φ, M_ψ⟩_t = ∫_0^t N(φψ)(X_s) ds`.
pub fn angle_bracket<S: Clone, E: CompensatorEvaluator<S> + ?Sized>(
    ev: &E,
    phi: &dyn JumpMap<S, f64>,
    psi: &dyn JumpMap<S, f64>,
    path: &PathSample<S, f64>,
) -> Result<AfTrace<f64>> {
    try_accumulate(path, TraceKind::Bracket, |x| ev.contract(phi, psi, x), |_, _, _| Ok(0.0), |_| Ok(0.0))
}

/// `f(X_t) - f(X_0)` as a trace, with `value(None)` used in the cemetery.
pub fn state_increments<S: Clone, T: Scalar, V: Fn(Option<&S>) -> T>(value: V, path: &PathSample<S, T>) -> AfTrace<T> {
    accumulate(path, TraceKind::RawSum, |_| T::zero(), |x, y, _| value(Some(y)) - value(Some(x)), |x| value(None) - value(Some(x)))
}

/// Midpoint route: `f(X_{s-})` on continuous increments and
/// `½(f(X_s) + f(X_{s-}))` on jumps.
pub fn stratonovich_midpoint<S: Clone, T: Scalar, F: Fn(&S) -> T>(f: F, m: &AfTrace<T>, path: &PathSample<S, T>) -> AfTrace<T> {
    weighted(
        m,
        path,
        m.kind,
        |a| weigh(&f, path.state_at(a)),
        |b| T::half() * (weigh(&f, path.state_at(b)) + weigh(&f, path.state_before(b))),
    )
}

/// Fisk–Stratonovich integral `∫ f(X_s) ∘ dM_s = (f * M)_t + ½[f(X), M]_t`.
/// Computed by that definition and by the midpoint route; the two must
/// agree.
pub fn stratonovich_integral<S: Clone, T: Scalar, F: Fn(&S) -> T + Copy>(
    f: F,
    m: &AfTrace<T>,
    path: &PathSample<S, T>,
) -> Result<AfTrace<T>> {
    let ito = ito_integral(f, m, path);
    let fx = state_increments(|x: Option<&S>| weigh(&f, x), path);
    let bracket = square_bracket(&fx, m, None);
    let by_definition = AfTrace::linear_combination(m.kind, &[(T::one(), &ito), (T::half(), &bracket)]);
    let by_midpoint = stratonovich_midpoint(f, m, path);
    let gap = by_definition.sup_distance(&by_midpoint).to_f64_lossy();
    let scale = 1.0 + by_definition.sup_norm().to_f64_lossy() + m.sup_norm().to_f64_lossy();
    if gap > STRATONOVICH_ROUTE_TOL * scale {
        return Err(Error::InvalidArgument(format!("Stratonovich routes disagree by {gap:e}")));
    }
    Ok(by_definition)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{maf_trace, ChainModel, JumpFunction};
    use crate::path::Event;

    fn path() -> PathSample<usize> {
        PathSample {
            x0: 0,
            events: vec![Event::jump(0.25, 1), Event::jump(0.5, 2), Event::jump(0.9, 1)],
            zeta: 1.2,
            killed: true,
            horizon: 2.0,
        }
    }

    fn m() -> AfTrace<f64> {
        let model = ChainModel::reference_r3();
        maf_trace(&model, &JumpFunction::fukushima(&[0.0, 1.0, 2.0]), &path(), None)
    }

    #[test]
    fn unit_integrand_returns_integrator() {
        let m = m();
        let i = ito_integral(|_: &usize| 1.0, &m, &path());
        assert!(i.sup_distance(&m) < 1e-15);
    }

    #[test]
    fn hand_computed_ito_sum() {
        // jumps of M^u: +1 at .25 (0→1), +1 at .5 (1→2), -1 at .9 (2→1), -1 at 1.2 (kill from 1)
        // compensator rates -Lu: state 0: -1, 1: 0.5, 2: 0.5
        let f = [1.0, 0.0, 1.0];
        let i = ito_integral(|&x: &usize| f[x], &m(), &path());
        let expected = 1.0 * (-0.25) + 1.0 + 0.0 + 0.0 + 1.0 * 0.5 * 0.4 + (-1.0) + 0.0;
        assert!((i.terminal() - expected).abs() < 1e-14, "{}", i.terminal());
    }

    #[test]
    fn riemann_with_single_cell() {
        let f = [1.0, 0.0, 1.0];
        let r = riemann_approx(|&x: &usize| f[x], &m(), &path(), 1).unwrap();
        assert!((r.terminal() - m().terminal()).abs() < 1e-15);
        let g = riemann_approx(|_: &usize| 1.0, &m(), &path(), 7).unwrap();
        assert!(g.sup_distance(&m()) < 1e-14);
    }

    #[test]
    fn bracket_of_pure_jump_martingale() {
        let m = m();
        let b = square_bracket(&m, &m, None);
        assert!((b.terminal() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn stratonovich_routes_agree_and_gap_is_half_bracket() {
        let f = [0.3, -1.0, 2.0];
        let fx = |&x: &usize| f[x];
        let s = stratonovich_integral(fx, &m(), &path()).unwrap();
        let i = ito_integral(fx, &m(), &path());
        let inc = state_increments(|x: Option<&usize>| x.map_or(0.0, |&x| f[x]), &path());
        let gap = AfTrace::linear_combination(TraceKind::RawSum, &[(1.0, &s), (-1.0, &i), (-0.5, &square_bracket(&inc, &m(), None))]);
        assert!(gap.sup_norm() < 1e-14);
        let c = stratonovich_integral(|_: &usize| 2.0, &m(), &path()).unwrap();
        // constant on states: only the killing jump sees f(∂) = 0
        let ci = ito_integral(|_: &usize| 2.0, &m(), &path());
        assert!((c.terminal() - ci.terminal() - 1.0).abs() < 1e-14);
    }
}
