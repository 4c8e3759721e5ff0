//! Right-continuous, left-limited sample paths with finitely many events.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A change of state at `time`. `continuous` marks increments of a
/// discretised continuous component (Brownian compensation of small jumps);
/// genuine jumps have it unset.
#[derive(Debug, Clone, PartialEq)]
pub struct Event<S, T> {
    pub time: T,
    pub state: S,
    pub continuous: bool,
}

impl<S, T> Event<S, T> {
    pub fn jump(time: T, state: S) -> Self {
        Self { time, state, continuous: false }
    }
}

/// One simulated trajectory on `[0, horizon]`.
///
/// The state is piecewise constant between events. When `killed` is set the
/// process sits in the cemetery on `[zeta, horizon]`; otherwise `zeta` is
/// `+inf` (censored at the horizon).
#[derive(Debug, Clone, PartialEq)]
pub struct PathSample<S, T = f64> {
    pub x0: S,
    pub events: Vec<Event<S, T>>,
    pub zeta: T,
    pub killed: bool,
    pub horizon: T,
}

/// A maximal interval `[start, end)` on which the path sits in `state`
/// (`None` for the cemetery).
#[derive(Debug, Clone, Copy)]
pub struct Segment<'a, S, T> {
    pub start: T,
    pub end: T,
    pub state: Option<&'a S>,
}

/// The transition at the right end of a segment.
#[derive(Debug, Clone, Copy)]
pub enum Transition<'a, S> {
    Move { from: &'a S, to: &'a S, continuous: bool },
    Kill { from: &'a S },
}

impl<S: Clone, T: Scalar> PathSample<S, T> {
    pub fn constant(x0: S, horizon: T) -> Self {
        Self { x0, events: Vec::new(), zeta: T::infinity(), killed: false, horizon }
    }

    /// Checks ordering of event times and the lifetime bookkeeping.
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > T::zero()) {
            return Err(Error::InvalidArgument("horizon must be positive".into()));
        }
        let stop = self.alive_until();
        let mut prev = T::zero();
        for (i, e) in self.events.iter().enumerate() {
            if !(e.time > prev) {
                return Err(Error::InvalidArgument(format!("event {i} at {} not after {}", e.time, prev)));
            }
            if !(e.time < stop) {
                return Err(Error::InvalidArgument(format!("event {i} at {} beyond {}", e.time, stop)));
            }
            prev = e.time;
        }
        if self.killed && self.zeta > self.horizon {
            return Err(Error::InvalidArgument("killed path with lifetime beyond horizon".into()));
        }
        if !self.killed && self.zeta.is_finite() {
            return Err(Error::InvalidArgument("censored path must carry zeta = +inf".into()));
        }
        Ok(())
    }

    /// `min(zeta, horizon)`.
    pub fn alive_until(&self) -> T {
        if self.killed {
            self.zeta.min(self.horizon)
        } else {
            self.horizon
        }
    }

    /// State just before the lifetime (or the final state when censored).
    pub fn last_state(&self) -> &S {
        self.events.last().map(|e| &e.state).unwrap_or(&self.x0)
    }

    pub fn jump_count(&self) -> usize {
        self.events.iter().filter(|e| !e.continuous).count()
    }

    /// Segments covering `[0, horizon]` in order, each paired with the
    /// transition that ends it (none for the final segment).
    pub fn segments(&self) -> Vec<(Segment<'_, S, T>, Option<Transition<'_, S>>)> {
        let mut out = Vec::with_capacity(self.events.len() + 2);
        let mut start = T::zero();
        let mut state = &self.x0;
        for e in &self.events {
            out.push((
                Segment { start, end: e.time, state: Some(state) },
                Some(Transition::Move { from: state, to: &e.state, continuous: e.continuous }),
            ));
            start = e.time;
            state = &e.state;
        }
        if self.killed {
            out.push((Segment { start, end: self.zeta, state: Some(state) }, Some(Transition::Kill { from: state })));
            if self.zeta < self.horizon {
                out.push((Segment { start: self.zeta, end: self.horizon, state: None }, None));
            }
        } else {
            out.push((Segment { start, end: self.horizon, state: Some(state) }, None));
        }
        out
    }

    /// State at time `t` (right-continuous); `None` in the cemetery.
    pub fn state_at(&self, t: T) -> Option<&S> {
        if self.killed && t >= self.zeta {
            return None;
        }
        let idx = self.events.partition_point(|e| e.time <= t);
        Some(if idx == 0 { &self.x0 } else { &self.events[idx - 1].state })
    }

    /// Left limit `X_{t-}`.
    pub fn state_before(&self, t: T) -> Option<&S> {
        if self.killed && t > self.zeta {
            return None;
        }
        let idx = self.events.partition_point(|e| e.time < t);
        Some(if idx == 0 { &self.x0 } else { &self.events[idx - 1].state })
    }

    /// The path restricted to `[0, t]`.
    pub fn truncate(&self, t: T) -> Self {
        let events = self.events.iter().filter(|e| e.time < t).cloned().collect();
        let killed = self.killed && self.zeta <= t;
        Self { x0: self.x0.clone(), events, zeta: if killed { self.zeta } else { T::infinity() }, killed, horizon: t }
    }

    /// The shifted path `s ↦ X_{t+s}` on `[0, horizon - t]`.
    pub fn shifted(&self, t: T) -> Option<Self> {
        let x0 = self.state_at(t)?.clone();
        let events = self
            .events
            .iter()
            .filter(|e| e.time > t)
            .map(|e| Event { time: e.time - t, state: e.state.clone(), continuous: e.continuous })
            .collect();
        let killed = self.killed;
        let zeta = if killed { self.zeta - t } else { T::infinity() };
        Some(Self { x0, events, zeta, killed, horizon: self.horizon - t })
    }

    /// Concatenation: `self` on `[0, h1]` followed by `next` started from the
    /// final state of `self`. Fails when `self` was killed or the start
    /// states disagree.
    pub fn splice(&self, next: &Self) -> Result<Self>
    where
        S: PartialEq,
    {
        if self.killed {
            return Err(Error::InvalidArgument("cannot extend a killed path".into()));
        }
        if self.last_state() != &next.x0 {
            return Err(Error::InvalidArgument("splice start state does not match".into()));
        }
        let h = self.horizon;
        let mut events = self.events.clone();
        events.extend(next.events.iter().map(|e| Event { time: e.time + h, state: e.state.clone(), continuous: e.continuous }));
        Ok(Self {
            x0: self.x0.clone(),
            events,
            zeta: if next.killed { next.zeta + h } else { T::infinity() },
            killed: next.killed,
            horizon: h + next.horizon,
        })
    }

    /// Time reversal `s ↦ X_{(t-s)-}` on `[0, t]`. Only defined while the
    /// path is alive on `[0, t]`.
    pub fn reversed(&self, t: T) -> Result<Self> {
        if self.killed && self.zeta <= t {
            return Err(Error::InvalidArgument("time reversal needs t < zeta".into()));
        }
        let inside: Vec<&Event<S, T>> = self.events.iter().filter(|e| e.time < t).collect();
        let x0 = inside.last().map(|e| e.state.clone()).unwrap_or_else(|| self.x0.clone());
        let mut events = Vec::with_capacity(inside.len());
        for (i, e) in inside.iter().enumerate().rev() {
            let before = if i == 0 { self.x0.clone() } else { inside[i - 1].state.clone() };
            events.push(Event { time: t - e.time, state: before, continuous: e.continuous });
        }
        Ok(Self { x0, events, zeta: T::infinity(), killed: false, horizon: t })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PathSample<usize> {
        PathSample { x0: 0, events: vec![Event::jump(0.3, 1), Event::jump(0.7, 2)], zeta: 1.2, killed: true, horizon: 2.0 }
    }

    #[test]
    fn segments_cover_horizon_with_cemetery_tail() {
        let p = sample();
        p.validate().unwrap();
        let segs = p.segments();
        assert_eq!(segs.len(), 4);
        assert!(matches!(segs[2].1, Some(Transition::Kill { from: &2 })));
        assert!(segs[3].0.state.is_none());
        assert_eq!(segs[3].0.end, 2.0);
    }

    #[test]
    fn state_lookup_is_right_continuous() {
        let p = sample();
        assert_eq!(p.state_at(0.3), Some(&1));
        assert_eq!(p.state_before(0.3), Some(&0));
        assert_eq!(p.state_at(1.2), None);
        assert_eq!(p.state_before(1.2), Some(&2));
    }

    #[test]
    fn reversal_swaps_jump_direction() {
        let p = PathSample {
            x0: 0usize,
            events: vec![Event::jump(0.25, 1), Event::jump(0.5, 2)],
            zeta: f64::INFINITY,
            killed: false,
            horizon: 1.0,
        };
        let r = p.reversed(1.0).unwrap();
        assert_eq!(r.x0, 2);
        assert_eq!(r.events, vec![Event::jump(0.5, 1), Event::jump(0.75, 0)]);
        assert_eq!(r.reversed(1.0).unwrap(), p);
    }

    #[test]
    fn splice_then_shift_roundtrips() {
        let a = PathSample { x0: 0usize, events: vec![Event::jump(0.5, 1)], zeta: f64::INFINITY, killed: false, horizon: 1.0 };
        let b = PathSample { x0: 1usize, events: vec![Event::jump(0.25, 2)], zeta: 0.75, killed: true, horizon: 1.0 };
        let c = a.splice(&b).unwrap();
        c.validate().unwrap();
        assert_eq!(c.zeta, 1.75);
        assert_eq!(c.shifted(1.0).unwrap(), b);
        assert_eq!(c.truncate(1.0), a);
    }

    #[test]
    fn validate_rejects_unsorted_events() {
        let p = PathSample {
            x0: 0usize,
            events: vec![Event::jump(0.5, 1), Event::jump(0.4, 2)],
            zeta: f64::INFINITY,
            killed: false,
            horizon: 1.0,
        };
        assert!(p.validate().is_err());
    }
}
