//! Additive functionals evaluated along one path.
//!
//! Every functional this crate produces is affine between consecutive
//! breakpoints (integrands are piecewise constant in time) and may jump at a
//! breakpoint, so a trace stores the right value and the left limit at each
//! breakpoint and nothing else.

use std::io::Write;

use crate::path::{PathSample, Transition};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TraceKind {
    Martingale,
    ZeroEnergy,
    Bracket,
    Dirichlet,
    RawSum,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AfTrace<T> {
    pub kind: TraceKind,
    times: Vec<T>,
    values: Vec<T>,
    left: Vec<T>,
}

impl<T: Scalar> AfTrace<T> {
    /// Builds a trace from raw breakpoint data. `times` must be
    /// non-decreasing and start at zero.
    pub fn from_parts(kind: TraceKind, times: Vec<T>, values: Vec<T>, left: Vec<T>) -> Self {
        assert_eq!(times.len(), values.len());
        assert_eq!(times.len(), left.len());
        Self { kind, times, values, left }
    }

    pub fn zero(kind: TraceKind, horizon: T) -> Self {
        Self::from_parts(kind, vec![T::zero(), horizon], vec![T::zero(); 2], vec![T::zero(); 2])
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn left_limits(&self) -> &[T] {
        &self.left
    }

    pub fn horizon(&self) -> T {
        *self.times.last().expect("trace has breakpoints")
    }

    pub fn terminal(&self) -> T {
        *self.values.last().expect("trace has breakpoints")
    }

    pub fn with_kind(mut self, kind: TraceKind) -> Self {
        self.kind = kind;
        self
    }

    fn segment_of(&self, t: T) -> usize {
        // last i with times[i] <= t
        self.times.partition_point(|&s| s <= t).saturating_sub(1)
    }

    /// Value at `t` (right-continuous).
    pub fn eval(&self, t: T) -> T {
        let i = self.segment_of(t);
        if i + 1 >= self.times.len() || t <= self.times[i] {
            return self.values[i];
        }
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let w = (t - t0) / (t1 - t0);
        self.values[i] + (self.left[i + 1] - self.values[i]) * w
    }

    /// Left limit at `t`.
    pub fn eval_left(&self, t: T) -> T {
        let i = self.times.partition_point(|&s| s < t);
        if i < self.times.len() && self.times[i] == t {
            return self.left[i];
        }
        self.eval(t)
    }

    pub fn jump_at(&self, t: T) -> T {
        self.eval(t) - self.eval_left(t)
    }

    fn merged_times(&self, other: &Self) -> Vec<T> {
        let mut ts: Vec<T> = self.times.iter().chain(other.times.iter()).copied().collect();
        ts.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
        ts.dedup();
        ts
    }

    /// `Σ cᵢ · traceᵢ` on the union of breakpoints.
    pub fn linear_combination(kind: TraceKind, terms: &[(T, &AfTrace<T>)]) -> Self {
        let mut times: Vec<T> = Vec::new();
        for (_, tr) in terms {
            times.extend_from_slice(&tr.times);
        }
        times.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
        times.dedup();
        if times.is_empty() {
            times.push(T::zero());
        }
        let values = times.iter().map(|&t| terms.iter().map(|(c, tr)| *c * tr.eval(t)).sum()).collect();
        let left = times.iter().map(|&t| terms.iter().map(|(c, tr)| *c * tr.eval_left(t)).sum()).collect();
        Self { kind, times, values, left }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self::linear_combination(self.kind, &[(T::one(), self), (T::one(), other)])
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self::linear_combination(self.kind, &[(T::one(), self), (-T::one(), other)])
    }

    pub fn scale(&self, c: T) -> Self {
        Self {
            kind: self.kind,
            times: self.times.clone(),
            values: self.values.iter().map(|&v| v * c).collect(),
            left: self.left.iter().map(|&v| v * c).collect(),
        }
    }

    /// Sup-norm distance over `[0, horizon]`, attained at a breakpoint value
    /// or left limit since both traces are piecewise affine.
    pub fn sup_distance(&self, other: &Self) -> T {
        self.merged_times(other)
            .into_iter()
            .map(|t| (self.eval(t) - other.eval(t)).abs().max((self.eval_left(t) - other.eval_left(t)).abs()))
            .fold(T::zero(), T::max)
    }

    pub fn sup_norm(&self) -> T {
        self.values.iter().chain(self.left.iter()).fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Writes `t,value,left_limit` rows.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "t,value,left_limit")?;
        for i in 0..self.times.len() {
            writeln!(w, "{},{},{}", self.times[i], self.values[i], self.left[i])?;
        }
        Ok(())
    }
}

/// Walks a path and accumulates `∫ rate(X_s) ds + Σ jump(X_{s-}, X_s)`,
/// with the killing transition contributing `kill(X_{ζ-})`. The cemetery
/// has zero rate.
pub fn accumulate<S, T, R, J, K>(path: &PathSample<S, T>, kind: TraceKind, mut rate: R, mut jump: J, mut kill: K) -> AfTrace<T>
where
    S: Clone,
    T: Scalar,
    R: FnMut(&S) -> T,
    J: FnMut(&S, &S, bool) -> T,
    K: FnMut(&S) -> T,
{
    let never = try_accumulate::<S, T, std::convert::Infallible, _, _, _>(
        path,
        kind,
        |x| Ok(rate(x)),
        |x, y, c| Ok(jump(x, y, c)),
        |x| Ok(kill(x)),
    );
    match never {
        Ok(t) => t,
        Err(e) => match e {},
    }
}

/// Fallible form of [`accumulate`]; stops at the first error.
pub fn try_accumulate<S, T, E, R, J, K>(
    path: &PathSample<S, T>,
    kind: TraceKind,
    mut rate: R,
    mut jump: J,
    mut kill: K,
) -> Result<AfTrace<T>, E>
where
    S: Clone,
    T: Scalar,
    R: FnMut(&S) -> Result<T, E>,
    J: FnMut(&S, &S, bool) -> Result<T, E>,
    K: FnMut(&S) -> Result<T, E>,
{
    let segments = path.segments();
    let mut times = Vec::with_capacity(segments.len() + 1);
    let mut values = Vec::with_capacity(segments.len() + 1);
    let mut left = Vec::with_capacity(segments.len() + 1);
    times.push(T::zero());
    values.push(T::zero());
    left.push(T::zero());
    let mut acc = T::zero();
    for (seg, tr) in segments {
        let r = match seg.state {
            Some(x) => rate(x)?,
            None => T::zero(),
        };
        acc = acc + r * (seg.end - seg.start);
        let before = acc;
        match tr {
            Some(Transition::Move { from, to, continuous }) => acc = acc + jump(from, to, continuous)?,
            Some(Transition::Kill { from }) => acc = acc + kill(from)?,
            None => {}
        }
        if seg.end > *times.last().expect("non-empty") {
            times.push(seg.end);
            values.push(acc);
            left.push(before);
        } else {
            // zero-length segment (event at time 0 is invalid, kill at horizon is not)
            *values.last_mut().expect("non-empty") = acc;
        }
    }
    Ok(AfTrace { kind, times, values, left })
}
