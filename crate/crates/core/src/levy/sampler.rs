use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::path::{Event, PathSample};
use crate::quad::integrate;

use super::model::{LevyModel, LevySpec, TruncationPolicy};
use super::Point;

/// Knots of the radial inverse-CDF table.
pub const DEFAULT_KNOTS: usize = 4096;

/// Monotone piecewise-cubic Hermite interpolant (Fritsch–Carlson slopes).
#[derive(Debug, Clone)]
pub struct MonotoneCubic {
    x: Vec<f64>,
    y: Vec<f64>,
    d: Vec<f64>,
}

impl MonotoneCubic {
    pub fn new(x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n != y.len() || n < 2 {
            return Err(Error::InvalidArgument("interpolation needs at least two matching knots".into()));
        }
        if !x.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidArgument("interpolation abscissae must increase strictly".into()));
        }
        let delta: Vec<f64> = (0..n - 1).map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i])).collect();
        let mut d = vec![0.0; n];
        d[0] = delta[0];
        d[n - 1] = delta[n - 2];
        for i in 1..n - 1 {
            d[i] = if delta[i - 1] * delta[i] <= 0.0 {
                0.0
            } else {
                // weighted harmonic mean keeps the interpolant monotone
                let (h0, h1) = (x[i] - x[i - 1], x[i + 1] - x[i]);
                let (w1, w2) = (2.0 * h1 + h0, h1 + 2.0 * h0);
                (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i])
            };
        }
        Ok(Self { x, y, d })
    }

    pub fn eval(&self, t: f64) -> f64 {
        let n = self.x.len();
        if t <= self.x[0] {
            return self.y[0];
        }
        if t >= self.x[n - 1] {
            return self.y[n - 1];
        }
        let i = self.x.partition_point(|&k| k <= t) - 1;
        let h = self.x[i + 1] - self.x[i];
        let s = (t - self.x[i]) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        h00 * self.y[i] + h10 * h * self.d[i] + h01 * self.y[i + 1] + h11 * h * self.d[i + 1]
    }
}

#[derive(Debug, Clone)]
enum RadialSampler {
    /// `r = ε U^{-1/α}`, exact for the stable tail.
    Pareto { eps: f64, alpha: f64 },
    /// `ln r` as a monotone function of the restricted CDF.
    Table(MonotoneCubic),
}

/// Compound-Poisson sampler for the jumps above `ε`, optionally with a
/// Brownian substitute for the small ones.
#[derive(Debug, Clone)]
pub struct LevySampler {
    dim: usize,
    policy: TruncationPolicy,
    rate: f64,
    sigma2: f64,
    radial: RadialSampler,
}

impl LevySampler {
    pub fn new(model: &LevyModel, policy: TruncationPolicy) -> Result<Self> {
        Self::with_knots(model, policy, DEFAULT_KNOTS)
    }

    pub fn with_knots(model: &LevyModel, policy: TruncationPolicy, knots: usize) -> Result<Self> {
        policy.validate()?;
        let eps = policy.epsilon;
        let rate = match model.tail_mass_exact(eps) {
            Some(v) => v,
            None => model.tail_mass(eps)?,
        };
        if !(rate > 0.0) {
            return Err(Error::InvalidArgument(format!("no jumps larger than ε = {eps}: λ(ε) = 0")));
        }
        let sigma2 = match model.small_jump_error_exact(eps) {
            Some(v) => v,
            None => model.small_jump_error(eps)?,
        };
        let radial = match model.spec() {
            LevySpec::Stable { alpha } => RadialSampler::Pareto { eps, alpha: *alpha },
            LevySpec::Radial { .. } => RadialSampler::Table(radial_table(model, eps, rate, knots.max(8))?),
        };
        Ok(Self { dim: model.dim(), policy, rate, sigma2, radial })
    }

    /// `λ(ε)`.
    pub fn rate(&self) -> f64 {
        self.rate
    }

    /// `σ²(ε)`.
    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn policy(&self) -> &TruncationPolicy {
        &self.policy
    }

    /// One jump `h` with `|h| > ε` from the normalised restricted measure.
    pub fn sample_jump<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        let u: f64 = 1.0 - rng.random::<f64>();
        let r = match &self.radial {
            RadialSampler::Pareto { eps, alpha } => eps * u.powf(-1.0 / alpha),
            RadialSampler::Table(inv) => inv.eval(1.0 - u).exp(),
        };
        let mut dir = self.direction(rng);
        for v in &mut dir {
            *v *= r;
        }
        dir
    }

    fn direction<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        if self.dim == 1 {
            return vec![if rng.random::<bool>() { 1.0 } else { -1.0 }];
        }
        loop {
            let g: Vec<f64> = (0..self.dim).map(|_| StandardNormal.sample(rng)).collect();
            let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            if n > 1e-300 {
                return g.into_iter().map(|v| v / n).collect();
            }
        }
    }

    pub fn sample_path<R: Rng + ?Sized>(&self, x0: &[f64], horizon: f64, rng: &mut R) -> Result<PathSample<Point>> {
        if x0.len() != self.dim {
            return Err(Error::Shape { expected: self.dim, got: x0.len() });
        }
        if !(horizon > 0.0) {
            return Err(Error::InvalidArgument("horizon must be positive".into()));
        }
        // jumps first, then (optionally) the Brownian grid, merged by time
        let mut jumps: Vec<(f64, Point)> = Vec::new();
        let mut t = 0.0;
        loop {
            let gap: f64 = Exp1.sample(rng);
            t += gap / self.rate;
            if t >= horizon {
                break;
            }
            jumps.push((t, self.sample_jump(rng)));
        }
        let mut moves: Vec<(f64, Point, bool)> = jumps.into_iter().map(|(t, h)| (t, h, false)).collect();
        if self.policy.compensate && self.sigma2 > 0.0 {
            let dt = 1.0 / self.policy.bm_steps as f64;
            let sd = (self.sigma2 / self.dim as f64 * dt).sqrt();
            let mut k = 1usize;
            let mut bm = Vec::new();
            while (k as f64) * dt < horizon {
                let h: Point = (0..self.dim)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(rng);
                        sd * z
                    })
                    .collect();
                bm.push((k as f64 * dt, h, true));
                k += 1;
            }
            moves.extend(bm);
            moves.sort_by(|a, b| a.0.total_cmp(&b.0));
        }
        let mut events: Vec<Event<Point, f64>> = Vec::with_capacity(moves.len());
        let mut x = x0.to_vec();
        for (time, h, continuous) in moves {
            for (xi, hi) in x.iter_mut().zip(&h) {
                *xi += hi;
            }
            match events.last_mut() {
                // simultaneous jump and grid step: merge into one genuine jump
                Some(last) if last.time == time => {
                    last.state = x.clone();
                    last.continuous &= continuous;
                }
                _ => events.push(Event { time, state: x.clone(), continuous }),
            }
        }
        Ok(PathSample { x0: x0.to_vec(), events, zeta: f64::INFINITY, killed: false, horizon })
    }
}

fn radial_table(model: &LevyModel, eps: f64, rate: f64, knots: usize) -> Result<MonotoneCubic> {
    // outer radius: support end, or where the remaining tail is negligible
    let r_max = match model.support_end() {
        Some(e) => e,
        None => {
            let mut r = eps * 10.0;
            while model.tail_mass(r)? > 1e-14 * rate {
                r *= 10.0;
                if r > 1e200 {
                    return Err(Error::InvalidModel("Lévy tail does not decay".into()));
                }
            }
            r
        }
    };
    let ln_lo = eps.ln();
    let step = (r_max.ln() - ln_lo) / (knots - 1) as f64;
    let radii: Vec<f64> = (0..knots).map(|i| (ln_lo + step * i as f64).exp()).collect();
    let mut cdf = Vec::with_capacity(knots);
    let mut lnr = Vec::with_capacity(knots);
    let mut acc = 0.0;
    cdf.push(0.0);
    lnr.push(ln_lo);
    for w in radii.windows(2) {
        let piece = integrate(
            |s: f64| {
                let r = s.exp();
                model.radial_measure(r) * r
            },
            w[0].ln(),
            w[1].ln(),
            1e-16,
            1e-12,
        )?;
        acc += piece.value;
        let f = acc / rate;
        if f > *cdf.last().expect("non-empty") {
            cdf.push(f);
            lnr.push(w[1].ln());
        }
    }
    // close the table at F = 1
    if *cdf.last().expect("non-empty") < 1.0 {
        cdf.push(1.0);
        lnr.push(r_max.ln());
    }
    MonotoneCubic::new(cdf, lnr)
}

/// Samples one truncated path; deterministic in `seed`.
pub fn sample_levy_path(model: &LevyModel, x0: &[f64], horizon: f64, policy: TruncationPolicy, seed: u64) -> Result<PathSample<Point>> {
    let sampler = LevySampler::new(model, policy)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sampler.sample_path(x0, horizon, &mut rng)
}

/// Event log `t,h_1,…,h_N,continuous` with the displacement of each event.
pub fn write_event_log<W: Write>(path: &PathSample<Point>, mut w: W) -> std::io::Result<()> {
    let dim = path.x0.len();
    let header: Vec<String> = (1..=dim).map(|i| format!("h_{i}")).collect();
    writeln!(w, "t,{},continuous", header.join(","))?;
    let mut prev = &path.x0;
    for e in &path.events {
        let h: Vec<String> = e.state.iter().zip(prev).map(|(a, b)| format!("{}", a - b)).collect();
        writeln!(w, "{},{},{}", e.time, h.join(","), e.continuous)?;
        prev = &e.state;
    }
    Ok(())
}
