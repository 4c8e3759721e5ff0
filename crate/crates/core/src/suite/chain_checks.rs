use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::calculus::{
    angle_bracket, correction_sum, ito_formula_rhs, ito_integral, jump_representation as represent, riemann_approx, square_bracket,
    stratonovich_integral, transform_increments, ChainCompensator, Increments, StateMap, Transform, TruncationSchedule, WeightMode,
};
use crate::chain::{
    dirichlet_trace, energy, function_trace, gamma_rhs, gamma_solve, integrated_semigroup_apply, maf_trace, nakao_integral_rate,
    rate_integral, sample_state, simulate_chain_path_with, ChainModel, DirichletVariant, FormMatrices, JumpFunction, NakaoRoute,
};
use crate::config::{Backend, ItoMode, JumpChoice};
use crate::error::{Error, Result};
use crate::path::PathSample;
use crate::quad::extrapolate_to_zero;
use crate::scalar::pairwise_sum;
use crate::trace::{AfTrace, TraceKind};

use super::{par_indexed, Ctx, ResidualReport, Summary};

pub const PATHWISE_TOL: f64 = 1e-9;
pub const ROUTE_TOL: f64 = 1e-10;
pub const MATRIX_TOL: f64 = 1e-12;
pub const DUAL_TOL: f64 = 1e-6;

/// Time nodes of the dual characterisation, halving from 0.2.
const DUAL_NODES: usize = 6;
const ENERGY_RANDOM_U: usize = 20;

type ChainPath = PathSample<usize, f64>;

/// Simulates the `p`-th path of an instance from `start(p, rng)`.
fn simulate(ctx: &Ctx<'_>, model: &ChainModel<f64>, instance: usize, p: usize, stationary: bool) -> Result<ChainPath> {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.path_seed(instance, p));
    let x0 = if stationary { sample_state(&model.stationary_law(), &mut rng) } else { p % model.len() };
    simulate_chain_path_with(model, x0, ctx.horizon(), &mut rng)
}

/// Runs `f` on every path of every instance and collects the results in
/// (instance, path) order.
fn each_path<P, T>(
    ctx: &Ctx<'_>,
    stationary: bool,
    prepare: impl Fn(usize, &ChainModel<f64>) -> Result<P>,
    f: impl Fn(&P, &ChainPath) -> Result<T> + Sync,
) -> Result<Vec<T>>
where
    P: Sync,
    T: Send,
{
    let mut out = Vec::new();
    for i in 0..ctx.instances() {
        let model = ctx.chain(i)?;
        let prepared = prepare(i, &model)?;
        let rows = par_indexed(ctx.paths(), |p| {
            let path = simulate(ctx, &model, i, p, stationary)?;
            f(&prepared, &path)
        })?;
        out.extend(rows);
    }
    Ok(out)
}

fn pathwise(ctx: &Ctx<'_>, tolerance: f64, residuals: &[f64]) -> ResidualReport {
    ResidualReport::pathwise(ctx.spec, Backend::Chain, tolerance, residuals.len(), residuals)
}

fn fukushima_jump(u: &[f64]) -> JumpFunction<f64> {
    JumpFunction::fukushima(u)
}

/// `A^u = M^u + N^u` as traces, from precomputed compensator and `Γ` rates.
struct Decomposition {
    phi: JumpFunction<f64>,
    gamma_rate: Vec<f64>,
}

impl Decomposition {
    fn new(model: &ChainModel<f64>, form: &FormMatrices<f64>, phi: JumpFunction<f64>) -> Result<Self> {
        let gamma_rate = gamma_solve(model, form, &phi)?.rate;
        Ok(Self { phi, gamma_rate })
    }

    fn maf(&self, model: &ChainModel<f64>, path: &ChainPath) -> AfTrace<f64> {
        maf_trace(model, &self.phi, path, None)
    }

    fn nakao(&self, path: &ChainPath) -> AfTrace<f64> {
        rate_integral(&self.gamma_rate, path, TraceKind::ZeroEnergy)
    }

    fn dirichlet(&self, model: &ChainModel<f64>, path: &ChainPath) -> AfTrace<f64> {
        self.maf(model, path).add(&self.nakao(path)).with_kind(TraceKind::Dirichlet)
    }
}

pub fn fukushima(ctx: &Ctx<'_>) -> Result<ResidualReport> {
    struct Prep {
        model: ChainModel<f64>,
        u: Vec<f64>,
        dec: Decomposition,
    }
    let res = each_path(
        ctx,
        false,
        |i, model| {
            let form = ctx.form(model)?;
            let u = ctx.values(&ctx.spec.u[0], model.len(), i)?;
            let dec = Decomposition::new(model, &form, fukushima_jump(&u))?;
            Ok(Prep { model: model.clone(), u, dec })
        },
        |p, path| {
            let lhs = function_trace(&p.u, path);
            Ok(lhs.sup_distance(&p.dec.dirichlet(&p.model, path)))
        },
    )?;
    Ok(pathwise(ctx, ctx.tolerance(PATHWISE_TOL), &res))
}

fn weight_mode(ctx: &Ctx<'_>) -> Result<WeightMode> {
    match ctx.spec.mode.unwrap_or(ItoMode::Ito) {
        ItoMode::Ito => Ok(WeightMode::Ito),
        ItoMode::Stratonovich => Ok(WeightMode::Stratonovich),
        ItoMode::Continuous => Err(Error::Unsupported("continuous mode needs a backend with a continuous part".into())),
    }
}

fn state_fns(values: &[Vec<f64>]) -> Vec<impl Fn(&usize) -> f64 + Sync + '_> {
    values.iter().map(|u| move |x: &usize| u[*x]).collect()
}

pub fn ito_formula(ctx: &Ctx<'_>) -> Result<ResidualReport> {
    let transform = ctx.spec.transform.unwrap_or(Transform::Square);
    let mode = weight_mode(ctx)?;
    struct Prep {
        model: ChainModel<f64>,
        u: Vec<Vec<f64>>,
        decs: Vec<Decomposition>,
    }
    let res = each_path(
        ctx,
        false,
        |i, model| {
            let form = ctx.form(model)?;
            let u = ctx.u_values(model.len(), i)?;
            let decs = u.iter().map(|uk| Decomposition::new(model, &form, fukushima_jump(uk))).collect::<Result<_>>()?;
            Ok(Prep { model: model.clone(), u, decs })
        },
        |p, path| {
            let fns = state_fns(&p.u);
            let parts: Vec<&(dyn Fn(&usize) -> f64 + Sync)> = fns.iter().map(|f| f as &(dyn Fn(&usize) -> f64 + Sync)).collect();
            let u = StateMap::new(parts);
            let a: Vec<AfTrace<f64>> = p.decs.iter().map(|d| d.dirichlet(&p.model, path)).collect();
            let lhs = transform_increments(transform, &u, path);
            let (rhs, _) = ito_formula_rhs(transform, &u, &a, path, mode)?;
            Ok(lhs.sup_distance(&rhs))
        },
    )?;
    Ok(pathwise(ctx, ctx.tolerance(PATHWISE_TOL), &res))
}

pub fn leibniz_ibp(ctx: &Ctx<'_>) -> Result<ResidualReport> {
    let v_name = ctx.spec.v.as_ref().ok_or_else(|| Error::InvalidArgument("check needs `v`".into()))?;
    struct Prep {
        model: ChainModel<f64>,
        u: Vec<f64>,
        v: Vec<f64>,
        du: Decomposition,
        dv: Decomposition,
        duv: Decomposition,
        // Stieltjes densities of ∫u dΓ(M^v) and ∫v dΓ(M^u)
        u_dgv: Vec<f64>,
        v_dgu: Vec<f64>,
    }
    let rows = each_path(
        ctx,
        false,
        |i, model| {
            let form = ctx.form(model)?;
            let n = model.len();
            let u = ctx.values(&ctx.spec.u[0], n, i)?;
            let v = ctx.values(v_name, n, i)?;
            let uv: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a * b).collect();
            let (pu, pv) = (fukushima_jump(&u), fukushima_jump(&v));
            let u_dgv = nakao_integral_rate(model, &form, &u, &pv, NakaoRoute::Stieltjes)?;
            let v_dgu = nakao_integral_rate(model, &form, &v, &pu, NakaoRoute::Stieltjes)?;
            Ok(Prep {
                model: model.clone(),
                du: Decomposition::new(model, &form, pu)?,
                dv: Decomposition::new(model, &form, pv)?,
                duv: Decomposition::new(model, &form, fukushima_jump(&uv))?,
                u,
                v,
                u_dgv,
                v_dgu,
            })
        },
        |p, path| {
            let uf = |x: &usize| p.u[*x];
            let vf = |x: &usize| p.v[*x];
            let (mu, mv, muv) = (p.du.maf(&p.model, path), p.dv.maf(&p.model, path), p.duv.maf(&p.model, path));
            let ev = ChainCompensator { model: &p.model };
            let angle = angle_bracket(&ev, &p.du.phi, &p.dv.phi, path)?;
            let square = square_bracket(&mu, &mv, None);
            // (i) M^{uv} = ∫u₋ dM^v + ∫v₋ dM^u + [M^u, M^v] - ⟨M^u, M^v⟩
            let product = AfTrace::linear_combination(
                TraceKind::Martingale,
                &[(1.0, &ito_integral(uf, &mv, path)), (1.0, &ito_integral(vf, &mu, path)), (1.0, &square), (-1.0, &angle)],
            );
            let r1 = muv.sup_distance(&product);
            // (ii) Γ(M^{uv}) = ∫u dΓ(M^v) + ∫v dΓ(M^u) + ⟨M^u, M^v⟩
            let gamma = AfTrace::linear_combination(
                TraceKind::ZeroEnergy,
                &[
                    (1.0, &rate_integral(&p.u_dgv, path, TraceKind::ZeroEnergy)),
                    (1.0, &rate_integral(&p.v_dgu, path, TraceKind::ZeroEnergy)),
                    (1.0, &angle),
                ],
            );
            let r2 = p.duv.nakao(path).sup_distance(&gamma);
            // (iii) uv(X_t) - uv(X_0) = ∫u ∘ dA^v + ∫v ∘ dA^u
            let (av, au) = (p.dv.dirichlet(&p.model, path), p.du.dirichlet(&p.model, path));
            let s_uv = stratonovich_integral(uf, &av, path)?;
            let s_vu = stratonovich_integral(vf, &au, path)?;
            let uv: Vec<f64> = p.u.iter().zip(&p.v).map(|(a, b)| a * b).collect();
            let lhs = function_trace(&uv, path);
            let r3 = lhs.sup_distance(&s_uv.add(&s_vu));
            let r3_swapped = lhs.sup_distance(&s_vu.add(&s_uv));
            Ok([r1, r2, r3, (r3 - r3_swapped).abs()])
        },
    )?;
    let worst: Vec<f64> = rows.iter().map(|r| r[0].max(r[1]).max(r[2])).collect();
    let mut report = pathwise(ctx, ctx.tolerance(ROUTE_TOL), &worst);
    for (k, key) in ["product_rule", "gamma_rule", "integration_by_parts", "swap_delta"].iter().enumerate() {
        let col: Vec<f64> = rows.iter().map(|r| r[k]).collect();
        report.detail(key, Summary::of(&col).max_abs);
    }
    Ok(report)
}

pub fn nakao_routes(ctx: &Ctx<'_>) -> Result<ResidualReport> {
    let f_name = ctx.spec.f.as_ref().ok_or_else(|| Error::InvalidArgument("check needs `f`".into()))?;
    let res = each_path(
        ctx,
        false,
        |i, model| {
            let form = ctx.form(model)?;
            let f = ctx.values(f_name, model.len(), i)?;
            let phi = ctx.jump(model, i)?;
            NakaoRoute::ALL.iter().map(|&r| nakao_integral_rate(model, &form, &f, &phi, r)).collect::<Result<Vec<_>>>()
        },
        |rates, path| {
            let mut worst = 0.0f64;
            for a in 0..rates.len() {
                for b in a + 1..rates.len() {
                    let diff: Vec<f64> = rates[a].iter().zip(&rates[b]).map(|(x, y)| x - y).collect();
                    worst = worst.max(rate_integral(&diff, path, TraceKind::ZeroEnergy).sup_norm());
                }
            }
            Ok(worst)
        },
    )?;
    Ok(pathwise(ctx, ctx.tolerance(ROUTE_TOL), &res))
}

pub fn gamma_k_zero(ctx: &Ctx<'_>) -> Result<ResidualReport> {
    let mut w_norms = Vec::new();
    let mut path_max = Vec::new();
    for i in 0..ctx.instances() {
        let model = ctx.chain(i)?;
        let form = ctx.form(&model)?;
        let phi = match ctx.spec.jump.unwrap_or(JumpChoice::Fukushima) {
            JumpChoice::Random => ctx.random_jump(&model, i, "phi", true),
            JumpChoice::Fukushima => ctx.jump(&model, i)?,
        };
        let sol = gamma_solve(&model, &form, &phi.reversal_compensator())?;
        w_norms.push(sol.w.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        let per_path = par_indexed(ctx.paths(), |p| {
            let path = simulate(ctx, &model, i, p, false)?;
            Ok(rate_integral(&sol.rate, &path, TraceKind::ZeroEnergy).sup_norm())
        })?;
        path_max.push(Summary::of(&per_path).max_abs);
    }
    let worst: Vec<f64> = w_norms.iter().zip(&path_max).map(|(a, b)| a.max(*b)).collect();
    let mut report = ResidualReport::pathwise(ctx.spec, Backend::Chain, ctx.tolerance(MATRIX_TOL), ctx.instances() * ctx.paths(), &worst);
    report.detail("gamma_sup", Summary::of(&w_norms).max_abs);
    report.detail("path_sup", Summary::of(&path_max).max_abs);
    Ok(report)
}

/// `(1/t) Σ g·m·∫_0^t P_s(Lw - w) ds`, extrapolated to `t = 0`.
fn dual_lhs(model: &ChainModel<f64>, rate: &[f64], g: &[f64]) -> Result<f64> {
    let mut ts = Vec::with_capacity(DUAL_NODES);
    let mut vs = Vec::with_capacity(DUAL_NODES);
    let mut t = 0.2;
    for _ in 0..DUAL_NODES {
        let integrated = integrated_semigroup_apply(model, t, rate)?;
        let terms: Vec<f64> = (0..model.len()).map(|x| g[x] * model.m()[x] * integrated[x]).collect();
        ts.push(t);
        vs.push(pairwise_sum(&terms) / t);
        t *= 0.5;
    }
    extrapolate_to_zero(&ts, &vs)
}

pub fn nakao_dual(ctx: &Ctx<'_>) -> Result<ResidualReport> {
    let mut res = Vec::new();
    let mut linearity = 0.0f64;
    for i in 0..ctx.instances() {
        let model = ctx.chain(i)?;
        let form = ctx.form(&model)?;
        let n = model.len();
        let mut zs = Vec::new();
        if !ctx.spec.u.is_empty() {
            zs.push(fukushima_jump(&ctx.values(&ctx.spec.u[0], n, i)?));
        }
        zs.push(ctx.random_jump(&model, i, "z", false));
        let gs: Vec<Vec<f64>> = match ctx.opt_values(ctx.spec.g.as_ref(), n, i)? {
            Some(g) => vec![g],
            None => (0..n).map(|x| (0..n).map(|y| if x == y { 1.0 } else { 0.0 }).collect()).collect(),
        };
        for z in &zs {
            let sol = gamma_solve(&model, &form, z)?;
            let b = gamma_rhs(&model, z);
            for g in &gs {
                let lhs = dual_lhs(&model, &sol.rate, g)?;
                let rhs = -g.iter().zip(&b).map(|(a, c)| a * c).sum::<f64>();
                res.push(lhs - rhs);
                let g2: Vec<f64> = g.iter().map(|v| 2.0 * v).collect();
                let lhs2 = dual_lhs(&model, &sol.rate, &g2)?;
                let rhs2 = -g2.iter().zip(&b).map(|(a, c)| a * c).sum::<f64>();
                linearity = linearity.max((lhs2 - 2.0 * lhs).abs()).max((rhs2 - 2.0 * rhs).abs());
            }
        }
    }
    let mut report = ResidualReport::pathwise(ctx.spec, Backend::Chain, ctx.tolerance(DUAL_TOL), res.len(), &res);
    report.detail("linearity", linearity);
    Ok(report)
}

pub fn levy_system(ctx: &Ctx<'_>) -> Result<ResidualReport> {
    struct Prep {
        phi: JumpFunction<f64>,
        exact: Vec<f64>,
    }
    let samples = each_path(
        ctx,
        false,
        |i, model| {
            let phi = ctx.jump(model, i)?;
            let exact = integrated_semigroup_apply(model, ctx.horizon(), &phi.kernel_apply(model))?;
            Ok(Prep { phi, exact })
        },
        |p, path| {
            let sum = crate::trace::accumulate(path, TraceKind::RawSum, |_| 0.0, |&x, &y, _| p.phi.at(x, y), |&x| p.phi.to_cemetery(x));
            Ok(sum.terminal() - p.exact[path.x0])
        },
    )?;
    Ok(ResidualReport::statistical(ctx.spec, Backend::Chain, &samples))
}

/// Battery for the energy identity: the configured `u`, constants, and
/// random functions.
pub fn energy_identity(ctx: &Ctx<'_>) -> Result<ResidualReport> {
    use rand::Rng;
    let mut res = Vec::new();
    let mut first = None;
    for i in 0..ctx.instances() {
        let model = ctx.chain(i)?;
        let form = ctx.form(&model)?;
        let n = model.len();
        let mut battery = ctx.u_values(n, i)?;
        battery.push(vec![1.0; n]);
        let mut rng = ctx.rng(i, super::PURPOSE_FUNCTION, "energy-battery");
        battery.extend((0..ENERGY_RANDOM_U).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<f64>>()));
        for u in &battery {
            let lhs = energy(&model, &fukushima_jump(u));
            let killing: f64 = u.iter().zip(&form.kappa).map(|(a, k)| a * a * k).sum();
            let rhs = form.energy(u, u) - 0.5 * killing;
            first.get_or_insert((lhs, rhs));
            res.push(lhs - rhs);
        }
    }
    let mut report = ResidualReport::pathwise(ctx.spec, Backend::Chain, ctx.tolerance(MATRIX_TOL), res.len(), &res);
    if let Some((lhs, rhs)) = first {
        report.detail("energy_lhs", lhs);
        report.detail("energy_rhs", rhs);
    }
    Ok(report)
}

pub fn odd_af(ctx: &Ctx<'_>) -> Result<ResidualReport> {
    let transform = ctx.spec.transform.unwrap_or(Transform::Cube);
    let rows = each_path(
        ctx,
        true,
        |i, model| {
            if model.has_killing() {
                return Err(Error::Unsupported("odd AF check needs a chain without killing".into()));
            }
            ctx.u_values(model.len(), i)
        },
        |u, path| {
            let fns = state_fns(u);
            let parts: Vec<&(dyn Fn(&usize) -> f64 + Sync)> = fns.iter().map(|f| f as &(dyn Fn(&usize) -> f64 + Sync)).collect();
            let u = StateMap::new(parts);
            let back = path.reversed(path.horizon)?;
            let c = |p: &ChainPath, mode| correction_sum(transform, &u, p, mode, Increments::Jumps).terminal();
            let strat = c(path, WeightMode::Stratonovich) + c(&back, WeightMode::Stratonovich);
            let ito = c(path, WeightMode::Ito) + c(&back, WeightMode::Ito);
            Ok([strat, ito])
        },
    )?;
    let strat: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let ito: Vec<f64> = rows.iter().map(|r| r[1].abs()).collect();
    let mut report = pathwise(ctx, ctx.tolerance(MATRIX_TOL), &strat);
    let s = Summary::of(&ito);
    report.detail("contrast", s.mean);
    report.detail("contrast_max", s.max_abs);
    Ok(report)
}

pub fn associativity(ctx: &Ctx<'_>) -> Result<ResidualReport> {
    let (f_name, g_name) = match (&ctx.spec.f, &ctx.spec.g) {
        (Some(f), Some(g)) => (f, g),
        _ => return Err(Error::InvalidArgument("check needs `f` and `g`".into())),
    };
    struct Prep {
        f: Vec<f64>,
        g: Vec<f64>,
        f_rate: Vec<f64>,
        g_rate: Vec<f64>,
        fg_rate: Vec<f64>,
    }
    let rows = each_path(
        ctx,
        false,
        |i, model| {
            let form = ctx.form(model)?;
            let n = model.len();
            let f = ctx.values(f_name, n, i)?;
            let g = ctx.values(g_name, n, i)?;
            let fg: Vec<f64> = f.iter().zip(&g).map(|(a, b)| a * b).collect();
            let phi = ctx.jump(model, i)?;
            let rate = |h: &[f64]| nakao_integral_rate(model, &form, h, &phi, NakaoRoute::Stieltjes);
            Ok(Prep { f_rate: rate(&f)?, g_rate: rate(&g)?, fg_rate: rate(&fg)?, f, g })
        },
        |p, path| {
            let inner_f = rate_integral(&p.f_rate, path, TraceKind::ZeroEnergy);
            let inner_g = rate_integral(&p.g_rate, path, TraceKind::ZeroEnergy);
            let nested = ito_integral(|x: &usize| p.g[*x], &inner_f, path);
            let swapped = ito_integral(|x: &usize| p.f[*x], &inner_g, path);
            let direct = rate_integral(&p.fg_rate, path, TraceKind::ZeroEnergy);
            Ok([nested.sup_distance(&direct), nested.sup_distance(&swapped)])
        },
    )?;
    let res: Vec<f64> = rows.iter().map(|r| r[0]).collect();
    let mut report = pathwise(ctx, ctx.tolerance(ROUTE_TOL), &res);
    report.detail("swap_delta", Summary::of(&rows.iter().map(|r| r[1]).collect::<Vec<_>>()).max_abs);
    Ok(report)
}

pub fn jump_representation(ctx: &Ctx<'_>) -> Result<ResidualReport> {
    let schedule = TruncationSchedule::default();
    struct Prep {
        model: ChainModel<f64>,
        form: FormMatrices<f64>,
        phi: JumpFunction<f64>,
        f: Option<Vec<f64>>,
    }
    let rows = each_path(
        ctx,
        false,
        |i, model| {
            Ok(Prep {
                model: model.clone(),
                form: ctx.form(model)?,
                phi: ctx.jump(model, i)?,
                f: ctx.opt_values(ctx.spec.f.as_ref(), model.len(), i)?,
            })
        },
        |p, path| {
            let abar = dirichlet_trace(&p.model, &p.form, &p.phi, path, DirichletVariant::Abar)?;
            let one = |_: &usize| 1.0;
            let (repr, conv) = represent(path, &p.phi, WeightMode::Ito, one, None, &schedule)?;
            let mut worst = abar.sup_distance(&repr);
            if let Some(f) = &p.f {
                let ff = |x: &usize| f[*x];
                let (ito_repr, _) = represent(path, &p.phi, WeightMode::Ito, ff, None, &schedule)?;
                worst = worst.max(ito_integral(ff, &abar, path).sup_distance(&ito_repr));
                let (strat_repr, _) = represent(path, &p.phi, WeightMode::Stratonovich, ff, None, &schedule)?;
                worst = worst.max(stratonovich_integral(ff, &abar, path)?.sup_distance(&strat_repr));
            }
            let killed = path.killed && path.zeta <= path.horizon;
            Ok((worst, killed, conv))
        },
    )?;
    let res: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let mut report = pathwise(ctx, ctx.tolerance(ROUTE_TOL), &res);
    report.detail("killed_paths", rows.iter().filter(|r| r.1).count() as f64);
    report.convergence = rows.first().map(|r| r.2.table().to_vec());
    Ok(report)
}

/// Sup-norm errors of the left-point Riemann sums at each mesh, per path.
pub(crate) fn riemann_errors(ctx: &Ctx<'_>) -> Result<(Vec<usize>, Vec<Vec<f64>>)> {
    let meshes = ctx.spec.meshes.clone().unwrap_or_else(|| vec![16, 64, 256]);
    let f_name = ctx.spec.f.as_ref().ok_or_else(|| Error::InvalidArgument("check needs `f`".into()))?;
    let rows = each_path(
        ctx,
        false,
        |i, model| {
            let u = ctx.values(&ctx.spec.u[0], model.len(), i)?;
            Ok((model.clone(), fukushima_jump(&u), ctx.values(f_name, model.len(), i)?))
        },
        |(model, phi, f), path| {
            let m = maf_trace(model, phi, path, None);
            let ff = |x: &usize| f[*x];
            let exact = ito_integral(ff, &m, path);
            meshes.iter().map(|&n| Ok(riemann_approx(ff, &m, path, n)?.sup_distance(&exact))).collect::<Result<Vec<f64>>>()
        },
    )?;
    Ok((meshes, rows))
}

/// Ensemble rule: the mean error decreases strictly from mesh to mesh and
/// the worst error at the finest mesh is below the worst at the coarsest.
/// Individual paths may be non-monotone (a jump can move between cells).
pub fn riemann(ctx: &Ctx<'_>) -> Result<ResidualReport> {
    let (meshes, rows) = riemann_errors(ctx)?;
    let cols: Vec<Summary> = (0..meshes.len()).map(|k| Summary::of(&rows.iter().map(|r| r[k]).collect::<Vec<_>>())).collect();
    let finest: Vec<f64> = rows.iter().map(|r| *r.last().expect("meshes")).collect();
    let coarsest_max = cols[0].max_abs;
    let mut report = pathwise(ctx, coarsest_max, &finest);
    let decreasing = cols.windows(2).all(|w| w[1].mean < w[0].mean);
    let non_monotone = rows.iter().filter(|r| r.windows(2).any(|w| w[1] > w[0])).count();
    report.pass = decreasing && cols.last().expect("meshes").max_abs < coarsest_max;
    for (n, c) in meshes.iter().zip(&cols) {
        report.detail(&format!("mean_err_{n}"), c.mean);
        report.detail(&format!("max_err_{n}"), c.max_abs);
    }
    report.detail("non_monotone_paths", non_monotone as f64);
    Ok(report)
}
