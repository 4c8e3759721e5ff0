//! Per-level and per-mesh tables for external plotting.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::calculus::{jump_representation, starred_sum, TruncationSchedule, Weight, WeightMode};
use crate::chain::simulate_chain_path_with;
use crate::config::{CheckKind, FunctionSpec, Model, RunConfig};
use crate::error::{Error, Result};
use crate::levy::{LevyModel, LevySampler, Point, TestFunction, TruncationPolicy};

use super::report::{num, opt};
use super::{stream_seed, Ctx, Summary};

/// Cutoffs of the σ(ε) table.
const SIGMA_EPS: [f64; 3] = [0.1, 0.05, 0.025];
/// Cutoff of the Lévy path in the starred table.
const STARRED_EPS: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    SigmaEps,
    Riemann,
    Starred,
}

impl TableKind {
    pub const ALL: [TableKind; 3] = [TableKind::SigmaEps, TableKind::Riemann, TableKind::Starred];

    pub fn name(self) -> &'static str {
        match self {
            TableKind::SigmaEps => "sigma-eps",
            TableKind::Riemann => "riemann",
            TableKind::Starred => "starred",
        }
    }
}

impl fmt::Display for TableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TableKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TableKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown table `{s}` (expected sigma-eps, riemann or starred)")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", self.header.join(","))?;
        for row in &self.rows {
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    /// Column by header name, parsed as numbers (blank cells are `None`).
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let i = self.header.iter().position(|h| *h == name)?;
        Some(self.rows.iter().map(|r| r[i].parse().ok()).collect())
    }
}

fn first_levy(cfg: &RunConfig) -> Result<(&str, &LevyModel)> {
    cfg.models
        .iter()
        .find_map(|(name, m)| match m {
            Model::Levy(l) => Some((name.as_str(), l)),
            _ => None,
        })
        .ok_or_else(|| Error::InvalidArgument("no Lévy model in the configuration".into()))
}

/// `σ²(ε)` by quadrature and closed form, with the tail mass `λ(ε)`.
pub fn sigma_eps_table(cfg: &RunConfig) -> Result<Table> {
    let (name, model) = first_levy(cfg)?;
    let mut rows = Vec::new();
    for eps in SIGMA_EPS {
        rows.push(vec![
            name.to_string(),
            num(eps),
            num(model.small_jump_error(eps)?),
            opt(model.small_jump_error_exact(eps)),
            num(model.tail_mass(eps)?),
            opt(model.tail_mass_exact(eps)),
        ]);
    }
    Ok(Table { header: vec!["model", "epsilon", "sigma2", "sigma2_exact", "tail_mass", "tail_mass_exact"], rows })
}

/// Riemann-sum errors of the first `riemann` check: per mesh, the mean,
/// standard error and maximum over its paths.
pub fn riemann_errors(cfg: &RunConfig) -> Result<Table> {
    let spec = cfg
        .suite
        .iter()
        .find(|s| s.check == CheckKind::Riemann)
        .ok_or_else(|| Error::InvalidArgument("no riemann check in the suite".into()))?;
    let ctx = Ctx::new(cfg, spec)?;
    let (meshes, rows) = super::chain_checks::riemann_errors(&ctx)?;
    let mut out = Vec::new();
    for (k, n) in meshes.iter().enumerate() {
        let s = Summary::of(&rows.iter().map(|r| r[k]).collect::<Vec<_>>());
        out.push(vec![spec.name.clone(), n.to_string(), num(s.mean), opt(s.stderr), num(s.max_abs)]);
    }
    Ok(Table { header: vec!["check", "mesh", "mean_err", "stderr", "max_err"], rows: out })
}

fn levy_test_function(cfg: &RunConfig) -> TestFunction {
    cfg.functions
        .values()
        .find_map(|f| match f {
            FunctionSpec::Test(t) => Some(*t),
            _ => None,
        })
        .unwrap_or(TestFunction::SmoothGauss)
}

/// Σ* truncation levels: the chain path of the first `jump_representation`
/// check (finitely many jumps, stable from the first level) and a
/// drop-small Lévy path, whose small jumps enter level by level.
pub fn starred_table(cfg: &RunConfig) -> Result<Table> {
    let spec = cfg
        .suite
        .iter()
        .find(|s| s.check == CheckKind::JumpRepresentation)
        .ok_or_else(|| Error::InvalidArgument("no jump_representation check in the suite".into()))?;
    let schedule = TruncationSchedule::default();
    let ctx = Ctx::new(cfg, spec)?;
    let model = ctx.chain(0)?;
    let phi = ctx.jump(&model, 0)?;
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.path_seed(0, 0));
    let path = simulate_chain_path_with(&model, 0, ctx.horizon(), &mut rng)?;
    let (_, chain_conv) = jump_representation(&path, &phi, WeightMode::Ito, |_: &usize| 1.0, None, &schedule)?;

    let (name, levy) = first_levy(cfg)?;
    let u = levy_test_function(cfg);
    let sampler = LevySampler::new(levy, TruncationPolicy::drop_small(STARRED_EPS))?;
    let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(cfg.seed, "tables/starred"));
    let lpath = sampler.sample_path(&vec![0.0; levy.dim()], cfg.defaults.horizon, &mut rng)?;
    let (_, levy_conv) =
        starred_sum(Weight::None, |_: &Point| 1.0, |x: &Point, y: &Point| u.value(y) - u.value(x), None, &lpath, &schedule)?;

    let mut rows = Vec::new();
    for (source, conv) in [(spec.name.as_str(), &chain_conv), (name, &levy_conv)] {
        for r in conv.table() {
            rows.push(vec![
                source.to_string(),
                r.k.to_string(),
                num(r.level),
                opt(r.delta),
                num(r.terminal),
                r.jumps_kept.to_string(),
                num(r.excluded),
                conv.converged.to_string(),
            ]);
        }
    }
    Ok(Table { header: vec!["source", "k", "level", "delta", "terminal", "jumps_kept", "excluded", "converged"], rows })
}

pub fn emit_tables(cfg: &RunConfig, kind: TableKind) -> Result<Table> {
    match kind {
        TableKind::SigmaEps => sigma_eps_table(cfg),
        TableKind::Riemann => riemann_errors(cfg),
        TableKind::Starred => starred_table(cfg),
    }
}
