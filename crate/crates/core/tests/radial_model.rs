use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use jumpcalc::levy::{char_exponent, kernel_integral, LevyModel, LevySampler, RadialDensity, TruncationPolicy};

const C: f64 = 1.0 / std::f64::consts::PI;

/// The Cauchy density `r^{-2}/π` cut off beyond `r = 10`. A pure power law
/// is exact under log-log interpolation.
fn cut_cauchy() -> LevyModel {
    let density = RadialDensity::tabulated(vec![1e-3, 1.0, 10.0], vec![C * 1e6, C, C / 100.0]).unwrap();
    LevyModel::radial(1, density).unwrap()
}

#[test]
fn tail_mass_of_truncated_power_law() {
    let model = cut_cauchy();
    for eps in [0.01, 0.1, 1.0] {
        let exact = 2.0 * C * (1.0 / eps - 0.1);
        let got = model.tail_mass(eps).unwrap();
        assert!((got - exact).abs() < 1e-8 * exact, "eps {eps}: {got} vs {exact}");
    }
    assert!(model.tail_mass_exact(0.1).is_none());
}

#[test]
fn sampled_jumps_respect_support() {
    let model = cut_cauchy();
    let sampler = LevySampler::new(&model, TruncationPolicy::drop_small(0.05)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut big = 0usize;
    let n = 50_000;
    for _ in 0..n {
        let h = sampler.sample_jump(&mut rng)[0].abs();
        assert!(h > 0.05 * (1.0 - 1e-9) && h <= 10.0 * (1.0 + 1e-9), "jump {h}");
        if h > 1.0 {
            big += 1;
        }
    }
    // P(|h| > 1 | |h| > ε) = (1 - 0.1) / (1/ε - 0.1)
    let p = 0.9 / (20.0 - 0.1);
    let se = (p * (1.0 - p) / n as f64).sqrt();
    assert!((big as f64 / n as f64 - p).abs() < 3.0 * se);
}

#[test]
fn kernel_and_exponent_are_finite() {
    let model = cut_cauchy();
    let psi = char_exponent(&model, &[1.0]).unwrap();
    // the missing far tail only lowers the exponent, by at most twice its mass
    assert!(psi < 1.0 && psi > 1.0 - 4.0 * C * 0.1, "{psi}");
    let k = kernel_integral(&model, |x, y| (y[0] - x[0]).abs().min(1.0), &[0.3], 1e-3).unwrap();
    assert!(k.value.is_finite() && k.value > 0.0);
}
