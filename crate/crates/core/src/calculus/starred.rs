use crate::error::{Error, Result};
use crate::path::{PathSample, Transition};
use crate::trace::{AfTrace, TraceKind};

/// Weight attached to each jump in a starred sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Weight {
    /// `f(X_{s-})`.
    Left,
    /// `½(f(X_s) + f(X_{s-}))`.
    Midpoint,
    /// `1`.
    None,
}

/// Truncation levels `ℓ_k = 2^k`, `k = k_min..=k_max`. A level is stable
/// once the jumps it still excludes carry total weight at most
/// `delta_stab`, which bounds the sup-distance to every finer level.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TruncationSchedule {
    pub k_min: i32,
    pub k_max: i32,
    pub delta_stab: f64,
}

impl Default for TruncationSchedule {
    fn default() -> Self {
        Self { k_min: 1, k_max: 40, delta_stab: 1e-12 }
    }
}

impl TruncationSchedule {
    pub fn new(k_min: i32, k_max: i32, delta_stab: f64) -> Result<Self> {
        let s = Self { k_min, k_max, delta_stab };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_max < self.k_min {
            return Err(Error::InvalidArgument("truncation levels must increase".into()));
        }
        if !(self.delta_stab > 0.0) {
            return Err(Error::InvalidArgument("stabilisation tolerance must be positive".into()));
        }
        Ok(())
    }

    pub fn levels(&self) -> Vec<f64> {
        (self.k_min..=self.k_max).map(|k| 2f64.powi(k)).collect()
    }
}

/// One row of a convergence table.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct LevelRow {
    pub k: i32,
    pub level: f64,
    /// Sup-norm change from the previous level (`None` at the first).
    pub delta: Option<f64>,
    pub terminal: f64,
    pub jumps_kept: usize,
    /// `Σ |w φ|` over the jumps still below the cut.
    pub excluded: f64,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ConvergenceReport {
    pub rows: Vec<LevelRow>,
    pub converged: bool,
    /// Index into `rows` of the first level from which the sum is stable.
    pub first_stable: Option<usize>,
    pub delta_stab: f64,
}

impl ConvergenceReport {
    pub fn first_stable_level(&self) -> Option<f64> {
        self.first_stable.map(|i| self.rows[i].level)
    }

    /// Rows up to and including the first stable level (all rows when the
    /// sum did not stabilise).
    pub fn table(&self) -> &[LevelRow] {
        match self.first_stable {
            Some(i) => &self.rows[..=i],
            None => &self.rows,
        }
    }
}

/// `Σ*_{s<=t} w(s) φ(X_{s-}, X_s)` truncated to `|threshold| > 1/ℓ_k` for
/// each level of the schedule (threshold defaults to `|φ|`). Only genuine
/// jumps count: continuous increments and the killing transition are
/// excluded. Returns the trace at the first stable level, or the last
/// level's trace with `converged = false`.
pub fn starred_sum<S, F, P>(
    weight: Weight,
    f: F,
    phi: P,
    threshold: Option<&dyn Fn(&S, &S) -> f64>,
    path: &PathSample<S, f64>,
    schedule: &TruncationSchedule,
) -> Result<(AfTrace<f64>, ConvergenceReport)>
where
    S: Clone,
    F: Fn(&S) -> f64,
    P: Fn(&S, &S) -> f64,
{
    schedule.validate()?;
    // weighted jump values and thresholds, once
    let mut jumps: Vec<(f64, f64, f64)> = Vec::new();
    for (seg, tr) in path.segments() {
        if let Some(Transition::Move { from, to, continuous: false }) = tr {
            let v = phi(from, to);
            let th = threshold.map_or(v.abs(), |g| g(from, to).abs());
            let w = match weight {
                Weight::Left => f(from),
                Weight::Midpoint => 0.5 * (f(from) + f(to)),
                Weight::None => 1.0,
            };
            jumps.push((seg.end, w * v, th));
        }
    }
    let build = |level: f64| -> (AfTrace<f64>, usize, f64) {
        let cut = 1.0 / level;
        let mut times = vec![0.0];
        let mut values = vec![0.0];
        let mut left = vec![0.0];
        let mut acc = 0.0;
        let mut kept = 0;
        let mut excluded = 0.0;
        for &(t, v, th) in &jumps {
            if th > cut {
                left.push(acc);
                acc += v;
                values.push(acc);
                times.push(t);
                kept += 1;
            } else {
                excluded += v.abs();
            }
        }
        if *times.last().expect("non-empty") < path.horizon {
            times.push(path.horizon);
            values.push(acc);
            left.push(acc);
        }
        (AfTrace::from_parts(TraceKind::RawSum, times, values, left), kept, excluded)
    };
    let mut rows = Vec::new();
    let mut traces: Vec<AfTrace<f64>> = Vec::new();
    let mut first_stable = None;
    for (i, level) in schedule.levels().into_iter().enumerate() {
        let (tr, kept, excluded) = build(level);
        let delta = traces.last().map(|prev| prev.sup_distance(&tr));
        rows.push(LevelRow { k: schedule.k_min + i as i32, level, delta, terminal: tr.terminal(), jumps_kept: kept, excluded });
        traces.push(tr);
        if excluded <= schedule.delta_stab {
            first_stable = Some(i);
            break;
        }
    }
    let converged = first_stable.is_some();
    let pick = first_stable.unwrap_or(traces.len() - 1);
    let trace = traces.swap_remove(pick);
    Ok((trace, ConvergenceReport { rows, converged, first_stable, delta_stab: schedule.delta_stab }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::Event;

    fn path() -> PathSample<usize> {
        PathSample {
            x0: 0,
            events: vec![Event::jump(0.2, 1), Event::jump(0.4, 2), Event::jump(0.6, 0)],
            zeta: f64::INFINITY,
            killed: false,
            horizon: 1.0,
        }
    }

    #[test]
    fn chain_sum_converges_at_first_level() {
        let u = [0.0, 1.0, 3.0];
        let (tr, rep) =
            starred_sum(Weight::None, |_| 1.0, |&x: &usize, &y: &usize| u[y] - u[x], None, &path(), &TruncationSchedule::default())
                .unwrap();
        assert!(rep.converged);
        assert_eq!(rep.first_stable, Some(0));
        assert_eq!(rep.table().len(), 1);
        assert_eq!(tr.terminal(), 0.0);
        assert_eq!(tr.eval(0.5), 3.0);
    }

    #[test]
    fn small_jumps_enter_at_higher_levels() {
        let u = [0.0, 0.01, 3.0];
        let sched = TruncationSchedule::default();
        let (tr, rep) =
            starred_sum(Weight::Left, |&x: &usize| (x + 1) as f64, |&x: &usize, &y: &usize| u[y] - u[x], None, &path(), &sched).unwrap();
        assert!(rep.converged);
        // 1/ℓ < 0.01 first at ℓ = 128 = 2^7
        assert_eq!(rep.first_stable_level(), Some(128.0));
        assert_eq!(rep.table().len(), 7);
        assert!(rep.rows[..6].iter().all(|r| (r.excluded - 0.01).abs() < 1e-15));
        assert!((tr.terminal() - (0.01 * 1.0 + 2.99 * 2.0 - 3.0 * 3.0)).abs() < 1e-14);
    }

    #[test]
    fn non_convergence_is_reported() {
        let u = [0.0, 1e-30, 3.0];
        let sched = TruncationSchedule::new(1, 5, 1e-40).unwrap();
        let (_, rep) = starred_sum(Weight::None, |_| 1.0, |&x: &usize, &y: &usize| u[y] - u[x], None, &path(), &sched).unwrap();
        assert!(!rep.converged);
        assert_eq!(rep.rows.len(), 5);
        assert_eq!(rep.table().len(), 5);
        // negligible jumps below the tolerance do not block stability
        let sched = TruncationSchedule::new(1, 5, 1e-20).unwrap();
        let (_, rep) = starred_sum(Weight::None, |_| 1.0, |&x: &usize, &y: &usize| u[y] - u[x], None, &path(), &sched).unwrap();
        assert_eq!(rep.first_stable, Some(0));
        assert!(TruncationSchedule::new(3, 1, 1.0).is_err());
    }
}
