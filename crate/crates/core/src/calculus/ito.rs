use crate::error::{Error, Result};
use crate::path::PathSample;
use crate::trace::{accumulate, AfTrace, TraceKind};

use super::integrals::{ito_integral, state_increments, stratonovich_integral};
use super::represent::WeightMode;

/// Arguments beyond this are clipped before exponentiating.
pub const EXP_CLIP: f64 = 30.0;

/// Outer functions `Φ` for the Itô formula, with closed-form derivatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    Identity,
    Square,
    Cube,
    /// `exp(clip(x, ±EXP_CLIP))`; smooth on the unclipped range.
    ExpClipped,
    /// `x₁ x₂`.
    Product,
}

impl Transform {
    pub fn arity(self) -> usize {
        match self {
            Transform::Product => 2,
            _ => 1,
        }
    }

    fn check(self, x: &[f64]) {
        assert_eq!(x.len(), self.arity(), "wrong number of arguments for {self:?}");
    }

    pub fn value(self, x: &[f64]) -> f64 {
        self.check(x);
        match self {
            Transform::Identity => x[0],
            Transform::Square => x[0] * x[0],
            Transform::Cube => x[0] * x[0] * x[0],
            Transform::ExpClipped => x[0].clamp(-EXP_CLIP, EXP_CLIP).exp(),
            Transform::Product => x[0] * x[1],
        }
    }

    pub fn gradient(self, x: &[f64]) -> Vec<f64> {
        self.check(x);
        match self {
            Transform::Identity => vec![1.0],
            Transform::Square => vec![2.0 * x[0]],
            Transform::Cube => vec![3.0 * x[0] * x[0]],
            Transform::ExpClipped => vec![if x[0].abs() < EXP_CLIP { x[0].exp() } else { 0.0 }],
            Transform::Product => vec![x[1], x[0]],
        }
    }

    pub fn hessian(self, x: &[f64]) -> Vec<Vec<f64>> {
        self.check(x);
        match self {
            Transform::Identity => vec![vec![0.0]],
            Transform::Square => vec![vec![2.0]],
            Transform::Cube => vec![vec![6.0 * x[0]]],
            Transform::ExpClipped => vec![vec![if x[0].abs() < EXP_CLIP { x[0].exp() } else { 0.0 }]],
            Transform::Product => vec![vec![0.0, 1.0], vec![1.0, 0.0]],
        }
    }
}

/// A vector of state functions `u = (u¹, …, uᵐ)`; evaluates to zero in the
/// cemetery.
pub struct StateMap<'a, S> {
    pub parts: Vec<&'a (dyn Fn(&S) -> f64 + Sync)>,
}

impl<'a, S> StateMap<'a, S> {
    pub fn new(parts: Vec<&'a (dyn Fn(&S) -> f64 + Sync)>) -> Self {
        Self { parts }
    }

    pub fn eval(&self, x: Option<&S>) -> Vec<f64> {
        match x {
            Some(x) => self.parts.iter().map(|u| u(x)).collect(),
            None => vec![0.0; self.parts.len()],
        }
    }
}

/// Which transitions enter a correction sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Increments {
    /// Genuine jumps and the killing transition.
    Jumps,
    /// Discretised continuous increments only.
    Continuous,
}

/// `Σ [ΔΦ(u(X)) - Σ_k w_k Δu_k]` over the selected transitions, where
/// `w_k = Φ_k(u(X_{s-}))` (Itô) or the midpoint of `Φ_k(u)` across the
/// transition (Stratonovich). At the lifetime `u(∂) = 0`.
pub fn correction_sum<S: Clone>(
    transform: Transform,
    u: &StateMap<'_, S>,
    path: &PathSample<S, f64>,
    mode: WeightMode,
    which: Increments,
) -> AfTrace<f64> {
    let term = |a: Vec<f64>, b: Vec<f64>| -> f64 {
        let ga = transform.gradient(&a);
        let weights = match mode {
            WeightMode::Ito => ga,
            WeightMode::Stratonovich => {
                let gb = transform.gradient(&b);
                ga.iter().zip(&gb).map(|(p, q)| 0.5 * (p + q)).collect()
            }
        };
        let linear: f64 = weights.iter().zip(a.iter().zip(&b)).map(|(w, (p, q))| w * (q - p)).sum();
        transform.value(&b) - transform.value(&a) - linear
    };
    accumulate(
        path,
        TraceKind::RawSum,
        |_| 0.0,
        |x, y, cont| {
            if cont == (which == Increments::Continuous) {
                term(u.eval(Some(x)), u.eval(Some(y)))
            } else {
                0.0
            }
        },
        |x| if which == Increments::Jumps { term(u.eval(Some(x)), u.eval(None)) } else { 0.0 },
    )
}

/// Left side `Φ(u(X_t)) - Φ(u(X_0))` with `u(∂) = 0`.
pub fn transform_increments<S: Clone>(transform: Transform, u: &StateMap<'_, S>, path: &PathSample<S, f64>) -> AfTrace<f64> {
    state_increments(|x| transform.value(&u.eval(x)), path)
}

/// Right side `Σ_k ∫ Φ_k(u(X)) dA^{u_k} + C_t` of the Itô formula (`∘d`
/// in Stratonovich mode), given the traces `A^{u_k}`. The integrand's value
/// `Φ_k(0)` in the cemetery enters the Stratonovich killing midpoint.
pub fn ito_formula_rhs<S: Clone>(
    transform: Transform,
    u: &StateMap<'_, S>,
    a: &[AfTrace<f64>],
    path: &PathSample<S, f64>,
    mode: WeightMode,
) -> Result<(AfTrace<f64>, AfTrace<f64>)> {
    if a.len() != u.parts.len() || a.len() != transform.arity() {
        return Err(Error::Shape { expected: transform.arity(), got: a.len() });
    }
    let at_cemetery = transform.gradient(&vec![0.0; a.len()]);
    let mut terms = Vec::with_capacity(2 * a.len() + 1);
    for (k, ak) in a.iter().enumerate() {
        let g = |x: &S| transform.gradient(&u.eval(Some(x)))[k];
        let integral = match mode {
            WeightMode::Ito => ito_integral(g, ak, path),
            WeightMode::Stratonovich => {
                let g0 = at_cemetery[k];
                let shifted = |x: &S| g(x) - g0;
                let s = stratonovich_integral(shifted, ak, path)?;
                AfTrace::linear_combination(ak.kind, &[(1.0, &s), (g0, ak)])
            }
        };
        terms.push(integral);
    }
    let c = correction_sum(transform, u, path, mode, Increments::Jumps);
    let mut refs: Vec<(f64, &AfTrace<f64>)> = terms.iter().map(|t| (1.0, t)).collect();
    refs.push((1.0, &c));
    Ok((AfTrace::linear_combination(TraceKind::Dirichlet, &refs), c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_form, maf_trace, nakao_trace, simulate_chain_path, ChainModel, JumpFunction};
    use rand::{Rng, SeedableRng};

    #[test]
    fn derivatives_match_central_differences() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for t in [Transform::Identity, Transform::Square, Transform::Cube, Transform::ExpClipped, Transform::Product] {
            for _ in 0..10 {
                let x: Vec<f64> = (0..t.arity()).map(|_| rng.random_range(-2.0..2.0)).collect();
                let g = t.gradient(&x);
                let h = t.hessian(&x);
                for k in 0..x.len() {
                    let d = 1e-5;
                    let mut p = x.clone();
                    let mut m = x.clone();
                    p[k] += d;
                    m[k] -= d;
                    let fd = (t.value(&p) - t.value(&m)) / (2.0 * d);
                    assert!((fd - g[k]).abs() <= 1e-6 * g[k].abs().max(1.0), "{t:?} grad");
                    let gp = t.gradient(&p);
                    let gm = t.gradient(&m);
                    for l in 0..x.len() {
                        let fd2 = (gp[l] - gm[l]) / (2.0 * d);
                        assert!((fd2 - h[l][k]).abs() <= 1e-6 * h[l][k].abs().max(1.0), "{t:?} hess");
                    }
                }
            }
        }
    }

    #[test]
    fn identity_transform_has_no_correction() {
        let m = ChainModel::reference_r3();
        let u = [0.0, 1.0, 2.0];
        let f = |x: &usize| u[*x];
        let map = StateMap::new(vec![&f]);
        let p = simulate_chain_path(&m, 1, 4.0, 3).unwrap();
        for mode in [WeightMode::Ito, WeightMode::Stratonovich] {
            assert_eq!(correction_sum(Transform::Identity, &map, &p, mode, Increments::Jumps).sup_norm(), 0.0);
        }
    }

    #[test]
    fn square_on_r3_closes_both_modes() {
        let m = ChainModel::reference_r3();
        let form = build_form(&m).unwrap();
        let u = [0.0, 1.0, 2.0];
        let phi = JumpFunction::fukushima(&u);
        let f = |x: &usize| u[*x];
        let map = StateMap::new(vec![&f]);
        for seed in 0..50 {
            let p = simulate_chain_path(&m, (seed % 3) as usize, 3.0, seed).unwrap();
            let a = maf_trace(&m, &phi, &p, None).add(&nakao_trace(&m, &form, &phi, &p).unwrap());
            let lhs = transform_increments(Transform::Square, &map, &p);
            for mode in [WeightMode::Ito, WeightMode::Stratonovich] {
                let (rhs, _) = ito_formula_rhs(Transform::Square, &map, std::slice::from_ref(&a), &p, mode).unwrap();
                assert!(lhs.sup_distance(&rhs) < 1e-12, "seed {seed} {mode:?}");
            }
        }
    }
}
