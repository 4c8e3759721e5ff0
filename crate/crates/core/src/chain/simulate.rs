use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::{Error, Result};
use crate::path::{Event, PathSample};
use crate::scalar::Scalar;

use super::ChainModel;

/// Simulates one path on `[0, horizon]` by competing exponential clocks.
/// Deterministic in `seed`.
pub fn simulate_chain_path<T: Scalar>(model: &ChainModel<T>, x0: usize, horizon: T, seed: u64) -> Result<PathSample<usize, T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    simulate_chain_path_with(model, x0, horizon, &mut rng)
}

pub fn simulate_chain_path_with<T: Scalar, R: Rng + ?Sized>(
    model: &ChainModel<T>,
    x0: usize,
    horizon: T,
    rng: &mut R,
) -> Result<PathSample<usize, T>> {
    let n = model.len();
    if x0 >= n {
        return Err(Error::InvalidArgument(format!("initial state {x0} out of range 0..{n}")));
    }
    if !(horizon > T::zero()) {
        return Err(Error::InvalidArgument("horizon must be positive".into()));
    }
    let horizon_f = horizon.to_f64_lossy();
    let mut events = Vec::new();
    let mut x = x0;
    let mut t = 0.0f64;
    loop {
        let rate = model.exit_rate(x).to_f64_lossy();
        if rate <= 0.0 {
            break;
        }
        let hold: f64 = Exp1.sample(rng);
        t += hold / rate;
        if t >= horizon_f {
            break;
        }
        let time = T::of(t);
        // Rounding to a narrower scalar may collapse distinct times.
        if events.last().is_some_and(|e: &Event<usize, T>| !(time > e.time)) || !(time > T::zero()) || !(time < horizon) {
            continue;
        }
        let mut pick = rng.random::<f64>() * rate;
        let mut next = None;
        for y in 0..n {
            let q = model.q()[(x, y)].to_f64_lossy();
            if q > 0.0 && pick < q {
                next = Some(y);
                break;
            }
            pick -= q;
        }
        if next.is_none() && model.k()[x] == T::zero() {
            // rounding pushed the draw past the last positive rate
            next = (0..n).rev().find(|&y| model.q()[(x, y)] > T::zero());
        }
        match next {
            Some(y) => {
                events.push(Event::jump(time, y));
                x = y;
            }
            None => return Ok(PathSample { x0, events, zeta: time, killed: true, horizon }),
        }
    }
    Ok(PathSample { x0, events, zeta: T::infinity(), killed: false, horizon })
}

/// Draws an index with probability proportional to `weights`.
pub fn sample_state<T: Scalar, R: Rng + ?Sized>(weights: &[T], rng: &mut R) -> usize {
    let total: f64 = weights.iter().map(|w| w.to_f64_lossy()).sum();
    let mut pick = rng.random::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        let w = w.to_f64_lossy();
        if pick < w {
            return i;
        }
        pick -= w;
    }
    weights.len() - 1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;

    #[test]
    fn absorbing_chain_has_no_events() {
        let m: ChainModel<f64> = ChainModel::new(vec![1.0, 1.0], Matrix::zeros(2, 2), vec![0.0, 0.0]).unwrap();
        let p = simulate_chain_path(&m, 1, 5.0, 7).unwrap();
        assert!(p.events.is_empty());
        assert!(!p.killed);
        assert!(p.zeta.is_infinite());
    }

    #[test]
    fn deterministic_in_seed() {
        let m = ChainModel::<f64>::reference_r3();
        let a = simulate_chain_path(&m, 0, 10.0, 42).unwrap();
        let b = simulate_chain_path(&m, 0, 10.0, 42).unwrap();
        assert_eq!(a, b);
        a.validate().unwrap();
        assert_ne!(a, simulate_chain_path(&m, 0, 10.0, 43).unwrap());
    }

    #[test]
    fn transitions_follow_rate_matrix() {
        let m = ChainModel::<f64>::reference_r3();
        for seed in 0..200 {
            let p = simulate_chain_path(&m, 0, 5.0, seed).unwrap();
            p.validate().unwrap();
            let mut x = p.x0;
            for e in &p.events {
                assert!(m.q()[(x, e.state)] > 0.0);
                x = e.state;
            }
            if p.killed {
                assert_eq!(x, 1, "only state 1 has killing");
            }
        }
    }

    #[test]
    fn f32_paths_are_valid() {
        let m = ChainModel::<f32>::reference_r3();
        let p = simulate_chain_path(&m, 2, 50.0f32, 3).unwrap();
        p.validate().unwrap();
    }
}
