//! The identity suite: every check runs one identity over configured models,
//! functions and path ensembles and reports residual statistics.
//!
//! Randomness flows from the root seed through per-check streams keyed by
//! the check name, then per-instance and per-path substreams, so adding or
//! reordering checks never changes another check's paths. Paths are
//! simulated in parallel and reduced in index order, so reports do not
//! depend on the worker count.

mod chain_checks;
mod levy_checks;
mod report;
mod tables;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::calculus::LevelRow;
use crate::chain::{build_form, build_form_unchecked, ChainModel, FormMatrices, JumpFunction};
use crate::config::{Backend, CheckKind, CheckSpec, FunctionSpec, JumpChoice, Model, RunConfig};
use crate::error::{Error, Result};
use crate::levy::{LevyModel, TestFunction};
use crate::scalar::pairwise_sum;

pub use report::{csv_row, write_csv, write_json, CSV_HEADER};
pub use tables::{emit_tables, riemann_errors, sigma_eps_table, starred_table, Table, TableKind};

/// Statistical checks pass when `|z|` is at most this.
pub const Z_LIMIT: f64 = 3.0;

/// Result of one check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub name: String,
    pub check: CheckKind,
    pub backend: Backend,
    pub n_paths: usize,
    /// Largest path-wise (or instance-wise) residual.
    pub max_resid: f64,
    /// Mean residual; for statistical checks the signed sample mean.
    pub mean_resid: f64,
    pub stderr: Option<f64>,
    pub z: Option<f64>,
    pub pass: bool,
    pub seconds: Option<f64>,
    pub tolerance: f64,
    pub details: BTreeMap<String, f64>,
    /// Σ* truncation levels of a representative path.
    pub convergence: Option<Vec<LevelRow>>,
    pub error: Option<String>,
}

impl ResidualReport {
    fn blank(spec: &CheckSpec, backend: Backend, tolerance: f64) -> Self {
        Self {
            name: spec.name.clone(),
            check: spec.check,
            backend,
            n_paths: 0,
            max_resid: 0.0,
            mean_resid: 0.0,
            stderr: None,
            z: None,
            pass: false,
            seconds: None,
            tolerance,
            details: BTreeMap::new(),
            convergence: None,
            error: None,
        }
    }

    /// Path-wise rule: pass iff every residual is within `tolerance`.
    fn pathwise(spec: &CheckSpec, backend: Backend, tolerance: f64, n_paths: usize, residuals: &[f64]) -> Self {
        let mut r = Self::blank(spec, backend, tolerance);
        let s = Summary::of(residuals);
        r.n_paths = n_paths;
        r.max_resid = s.max_abs;
        r.mean_resid = s.mean;
        r.stderr = s.stderr;
        r.pass = s.max_abs <= tolerance && residuals.iter().all(|v| v.is_finite());
        r
    }

    /// Statistical rule: pass iff `|mean / stderr| <= Z_LIMIT`. A zero
    /// standard error passes only with a zero mean.
    fn statistical(spec: &CheckSpec, backend: Backend, samples: &[f64]) -> Self {
        let mut r = Self::blank(spec, backend, Z_LIMIT);
        let s = Summary::of(samples);
        r.n_paths = samples.len();
        r.max_resid = s.max_abs;
        r.mean_resid = s.mean;
        r.stderr = s.stderr;
        r.z = s.z();
        r.pass = r.z.is_some_and(|z| z.abs() <= Z_LIMIT);
        r
    }

    fn detail(&mut self, key: &str, value: f64) {
        self.details.insert(key.into(), value);
    }
}

/// Max-abs, mean and standard error of a sample, reduced in a fixed order.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Summary {
    pub max_abs: f64,
    pub mean: f64,
    pub stderr: Option<f64>,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Self {
        if xs.is_empty() {
            return Self { max_abs: 0.0, mean: 0.0, stderr: None };
        }
        let n = xs.len() as f64;
        let mean = pairwise_sum(xs) / n;
        let max_abs = xs.iter().fold(0.0f64, |m, v| if v.is_nan() { f64::NAN } else { m.max(v.abs()) });
        let stderr = (xs.len() > 1).then(|| {
            let dev: Vec<f64> = xs.iter().map(|v| (v - mean) * (v - mean)).collect();
            (pairwise_sum(&dev) / (n - 1.0) / n).sqrt()
        });
        Self { max_abs, mean, stderr }
    }

    pub fn z(&self) -> Option<f64> {
        match self.stderr {
            Some(se) if se > 0.0 => Some(self.mean / se),
            Some(_) if self.mean == 0.0 => Some(0.0),
            _ => None,
        }
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xCBF2_9CE4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3))
}

/// Seed of the named stream under `root`.
pub fn stream_seed(root: u64, namespace: &str) -> u64 {
    splitmix64(root ^ fnv1a(namespace))
}

/// The `index`-th substream of `seed`.
pub fn substream(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index.wrapping_add(0x5851_F42D_4C95_7F2D)))
}

pub(crate) const PURPOSE_MODEL: u64 = 1;
pub(crate) const PURPOSE_FUNCTION: u64 = 2;
const PURPOSE_JUMP: u64 = 3;
const PURPOSE_PATHS: u64 = 4;

/// Runs `f` on `0..n` in parallel and returns the results in index order;
/// the first error by index wins.
pub(crate) fn par_indexed<T: Send>(n: usize, f: impl Fn(usize) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    let out: Vec<Result<T>> = (0..n).into_par_iter().map(f).collect();
    out.into_iter().collect()
}

/// Everything a check needs: its spec, the resolved model and seeds.
pub(crate) struct Ctx<'a> {
    pub cfg: &'a RunConfig,
    pub spec: &'a CheckSpec,
    pub model: &'a Model,
    stream: u64,
}

impl<'a> Ctx<'a> {
    fn new(cfg: &'a RunConfig, spec: &'a CheckSpec) -> Result<Self> {
        let model = cfg.models.get(&spec.model).ok_or_else(|| Error::InvalidArgument(format!("unknown model `{}`", spec.model)))?;
        let stream = match spec.seed {
            Some(s) => splitmix64(cfg.seed ^ splitmix64(s)),
            None => stream_seed(cfg.seed, &spec.name),
        };
        Ok(Self { cfg, spec, model, stream })
    }

    pub fn paths(&self) -> usize {
        self.spec.paths.unwrap_or(self.cfg.defaults.paths)
    }

    pub fn horizon(&self) -> f64 {
        self.spec.horizon.unwrap_or(self.cfg.defaults.horizon)
    }

    pub fn instances(&self) -> usize {
        self.spec.instances.unwrap_or(1)
    }

    pub fn tolerance(&self, default: f64) -> f64 {
        self.spec.tolerance.unwrap_or(default)
    }

    fn instance_seed(&self, instance: usize) -> u64 {
        substream(self.stream, instance as u64)
    }

    pub fn rng(&self, instance: usize, purpose: u64, salt: &str) -> ChaCha8Rng {
        let s = substream(substream(self.instance_seed(instance), purpose), fnv1a(salt));
        ChaCha8Rng::seed_from_u64(s)
    }

    pub fn path_seed(&self, instance: usize, index: usize) -> u64 {
        substream(substream(self.instance_seed(instance), PURPOSE_PATHS), index as u64)
    }

    /// The chain of an instance: the configured one, or a fresh random draw.
    pub fn chain(&self, instance: usize) -> Result<ChainModel<f64>> {
        match self.model {
            Model::Chain(c) => Ok(c.clone()),
            Model::RandomChain { states, killing } => {
                let mut rng = self.rng(instance, PURPOSE_MODEL, "");
                Ok(ChainModel::random_symmetric(*states, *killing, &mut rng))
            }
            Model::Levy(_) => Err(Error::Unsupported("chain check on a Lévy model".into())),
        }
    }

    pub fn form(&self, model: &ChainModel<f64>) -> Result<FormMatrices<f64>> {
        if self.cfg.strict {
            build_form(model)
        } else {
            Ok(build_form_unchecked(model))
        }
    }

    /// Values of a named chain function on `n` states.
    pub fn values(&self, name: &str, n: usize, instance: usize) -> Result<Vec<f64>> {
        match self.cfg.functions.get(name) {
            Some(FunctionSpec::Values { values }) => Ok(crate::chain::interior_values(values, n)?.to_vec()),
            Some(FunctionSpec::Random { random }) => {
                let mut rng = self.rng(instance, PURPOSE_FUNCTION, name);
                Ok((0..n).map(|_| rng.random_range(random.lo..random.hi)).collect())
            }
            Some(FunctionSpec::Test(_)) => Err(Error::Unsupported(format!("`{name}` is a test function on R^N, not a chain function"))),
            None => Err(Error::InvalidArgument(format!("unknown function `{name}`"))),
        }
    }

    pub fn opt_values(&self, name: Option<&String>, n: usize, instance: usize) -> Result<Option<Vec<f64>>> {
        name.map(|f| self.values(f, n, instance)).transpose()
    }

    pub fn u_values(&self, n: usize, instance: usize) -> Result<Vec<Vec<f64>>> {
        self.spec.u.iter().map(|name| self.values(name, n, instance)).collect()
    }

    /// A random jump function on `E_∂ × E_∂` for `model`, optionally with a
    /// zero column at the cemetery.
    pub fn random_jump(&self, model: &ChainModel<f64>, instance: usize, salt: &str, zero_boundary: bool) -> JumpFunction<f64> {
        let mut rng = self.rng(instance, PURPOSE_JUMP, salt);
        let n = model.len();
        let body: Vec<f64> = (0..n * n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let boundary: Vec<f64> = (0..n).map(|_| if zero_boundary { 0.0 } else { rng.random_range(-1.0..1.0) }).collect();
        JumpFunction::from_fn(n, |x, y| if x == y { 0.0 } else { body[x * n + y] }, |x| boundary[x])
    }

    /// The jump function of the check's MAF: `φ_u` or a random one.
    pub fn jump(&self, model: &ChainModel<f64>, instance: usize) -> Result<JumpFunction<f64>> {
        match self.spec.jump.unwrap_or(JumpChoice::Fukushima) {
            JumpChoice::Random => Ok(self.random_jump(model, instance, "phi", false)),
            JumpChoice::Fukushima => {
                let u = self.u_values(model.len(), instance)?;
                let first = u.first().ok_or_else(|| Error::InvalidArgument("check needs `u`".into()))?;
                Ok(JumpFunction::fukushima(first))
            }
        }
    }

    pub fn levy(&self) -> Result<&'a LevyModel> {
        match self.model {
            Model::Levy(l) => Ok(l),
            _ => Err(Error::Unsupported("Lévy check on a chain model".into())),
        }
    }

    pub fn test_fn(&self, name: &str) -> Result<TestFunction> {
        match self.cfg.functions.get(name) {
            Some(FunctionSpec::Test(t)) => Ok(*t),
            Some(_) => Err(Error::Unsupported(format!("`{name}` is a chain function"))),
            None => Err(Error::InvalidArgument(format!("unknown function `{name}`"))),
        }
    }
}

fn dispatch(ctx: &Ctx<'_>) -> Result<ResidualReport> {
    use chain_checks as c;
    use levy_checks as l;
    let backend = ctx.model.backend();
    match (ctx.spec.check, backend) {
        (CheckKind::Fukushima, Backend::Chain) => c::fukushima(ctx),
        (CheckKind::Fukushima, Backend::Levy) => l::fukushima(ctx),
        (CheckKind::ItoFormula, Backend::Chain) => c::ito_formula(ctx),
        (CheckKind::ItoFormula, Backend::Levy) => l::ito_formula(ctx),
        (CheckKind::LevySystem, Backend::Chain) => c::levy_system(ctx),
        (CheckKind::LevySystem, Backend::Levy) => l::levy_system(ctx),
        (CheckKind::CharExponent, Backend::Levy) => l::char_exponent_check(ctx),
        (CheckKind::LeibnizIbp, Backend::Chain) => c::leibniz_ibp(ctx),
        (CheckKind::NakaoRoutes, Backend::Chain) => c::nakao_routes(ctx),
        (CheckKind::GammaKZero, Backend::Chain) => c::gamma_k_zero(ctx),
        (CheckKind::NakaoDual, Backend::Chain) => c::nakao_dual(ctx),
        (CheckKind::EnergyIdentity, Backend::Chain) => c::energy_identity(ctx),
        (CheckKind::OddAf, Backend::Chain) => c::odd_af(ctx),
        (CheckKind::Associativity, Backend::Chain) => c::associativity(ctx),
        (CheckKind::JumpRepresentation, Backend::Chain) => c::jump_representation(ctx),
        (CheckKind::Riemann, Backend::Chain) => c::riemann(ctx),
        (check, b) => Err(Error::Unsupported(format!("check `{}` on the {} backend", check.name(), b.name()))),
    }
}

/// Runs one check. Errors and panics become a failed report carrying the
/// message; they never propagate.
pub fn run_check(cfg: &RunConfig, spec: &CheckSpec, record_timings: bool) -> ResidualReport {
    let start = Instant::now();
    let backend = cfg.models.get(&spec.model).map_or(Backend::Chain, Model::backend);
    let outcome = catch_unwind(AssertUnwindSafe(|| Ctx::new(cfg, spec).and_then(|ctx| dispatch(&ctx))));
    let mut report = match outcome {
        Ok(Ok(r)) => r,
        Ok(Err(e)) => {
            let mut r = ResidualReport::blank(spec, backend, spec.tolerance.unwrap_or(f64::NAN));
            r.error = Some(e.to_string());
            r
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "check panicked".into());
            let mut r = ResidualReport::blank(spec, backend, spec.tolerance.unwrap_or(f64::NAN));
            r.error = Some(msg);
            r
        }
    };
    if record_timings {
        report.seconds = Some(start.elapsed().as_secs_f64());
    }
    report
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub record_timings: bool,
    /// Run only the checks with these names (all when empty).
    pub only: Vec<String>,
}

/// Runs the suite in order, handing each report to `sink` as soon as it is
/// ready (so partial results survive an interrupted run).
pub fn run_suite(cfg: &RunConfig, opts: &RunOptions, mut sink: impl FnMut(&ResidualReport)) -> Vec<ResidualReport> {
    let mut out = Vec::new();
    for spec in &cfg.suite {
        if !opts.only.is_empty() && !opts.only.contains(&spec.name) {
            continue;
        }
        let r = run_check(cfg, spec, opts.record_timings);
        sink(&r);
        out.push(r);
    }
    out
}
