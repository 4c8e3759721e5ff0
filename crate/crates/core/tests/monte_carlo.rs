//! Distributional checks of the samplers. Every test uses a fixed seed and a
//! three-standard-error acceptance band.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use jumpcalc::chain::{maf_trace, semigroup_apply, simulate_chain_path_with, ChainModel, JumpFunction};
use jumpcalc::levy::{char_exponent_quadrature, LevyModel, LevySampler, TruncationPolicy};

fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn within(xs: &[f64], target: f64) {
    let (mean, se) = mean_and_se(xs);
    assert!((mean - target).abs() <= 3.0 * se, "mean {mean} vs {target} (se {se})");
}

#[test]
fn holding_times_are_exponential() {
    let model = ChainModel::<f64>::reference_r3();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    // state 1 leaves at rate q(1,0) + q(1,2) + k(1) = 2.5
    let holds: Vec<f64> = (0..20_000)
        .map(|_| {
            let p = simulate_chain_path_with(&model, 1, 50.0, &mut rng).unwrap();
            p.events.first().map(|e| e.time).unwrap_or(p.zeta)
        })
        .collect();
    within(&holds, 1.0 / 2.5);
}

#[test]
fn killing_probability_matches_semigroup() {
    let model = ChainModel::<f64>::reference_r3();
    let t = 1.5;
    let survive = semigroup_apply(&model, t, &[1.0, 1.0, 1.0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (x0, &alive) in survive.iter().enumerate() {
        let killed: Vec<f64> = (0..20_000)
            .map(|_| {
                let p = simulate_chain_path_with(&model, x0, t, &mut rng).unwrap();
                if p.killed && p.zeta <= t {
                    1.0
                } else {
                    0.0
                }
            })
            .collect();
        within(&killed, 1.0 - alive);
    }
}

#[test]
fn martingale_part_has_zero_mean() {
    let model = ChainModel::<f64>::reference_r3();
    let phi = JumpFunction::fukushima(&[0.0, 1.0, 2.0]);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let terminal: Vec<f64> = (0..20_000)
        .map(|i| {
            let p = simulate_chain_path_with(&model, i % 3, 1.0, &mut rng).unwrap();
            maf_trace(&model, &phi, &p, None).terminal()
        })
        .collect();
    within(&terminal, 0.0);
}

#[test]
fn cauchy_large_jump_count() {
    let sampler = LevySampler::new(&LevyModel::cauchy(), TruncationPolicy::drop_small(0.05)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let counts: Vec<f64> = (0..40_000)
        .map(|_| {
            let p = sampler.sample_path(&[0.0], 1.0, &mut rng).unwrap();
            let mut prev = 0.0;
            let mut n = 0;
            for e in &p.events {
                if (e.state[0] - prev).abs() > 1.0 {
                    n += 1;
                }
                prev = e.state[0];
            }
            n as f64
        })
        .collect();
    within(&counts, 2.0 / std::f64::consts::PI);
}

#[test]
fn truncated_characteristic_function() {
    let model = LevyModel::stable(2, 1.5).unwrap();
    let eps = 0.05;
    let sampler = LevySampler::new(&model, TruncationPolicy::drop_small(eps)).unwrap();
    let t = 0.7;
    let xi = [0.8, -0.5];
    let psi = char_exponent_quadrature(&model, &xi, eps).unwrap().value;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cos: Vec<f64> = (0..40_000)
        .map(|_| {
            let p = sampler.sample_path(&[0.0, 0.0], t, &mut rng).unwrap();
            let x = p.last_state();
            (xi[0] * x[0] + xi[1] * x[1]).cos()
        })
        .collect();
    within(&cos, (-t * psi).exp());
}

#[test]
fn stable_self_similarity() {
    // cutting at ε on [0,1] and at t^{1/α}ε on [0,t] keeps the scaling exact:
    // compare P(|X_t| ≤ t^{1/α}) with P(|X_1| ≤ 1)
    let alpha = 1.5;
    let t: f64 = 3.0;
    let scale = t.powf(1.0 / alpha);
    let model = LevyModel::stable(2, alpha).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut inside = |t: f64, eps: f64, r: f64| -> Vec<f64> {
        let sampler = LevySampler::new(&model, TruncationPolicy::drop_small(eps)).unwrap();
        (0..20_000)
            .map(|_| {
                let p = sampler.sample_path(&[0.0, 0.0], t, &mut rng).unwrap();
                let x = p.last_state();
                if x[0].hypot(x[1]) <= r {
                    1.0
                } else {
                    0.0
                }
            })
            .collect()
    };
    let (a, sa) = mean_and_se(&inside(1.0, 0.05, 1.0));
    let (b, sb) = mean_and_se(&inside(t, 0.05 * scale, scale));
    assert!((a - b).abs() <= 3.0 * sa.hypot(sb), "{a} vs {b}");
    assert!(a > 0.1 && a < 0.9);
}
