use crate::error::Result;
use crate::path::PathSample;
use crate::trace::{AfTrace, TraceKind};

use super::compensator::JumpMap;
use super::integrals::{ito_integral, stratonovich_integral};
use super::starred::{starred_sum, ConvergenceReport, TruncationSchedule, Weight};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    Ito,
    Stratonovich,
}

/// Jump representation of `∫ f d Ā` (Itô) or `∫ f ∘ dĀ` (Stratonovich):
/// the integral against the continuous part `ac`, plus the starred sum of
/// the weighted antisymmetric part `½(φ - φ̄)` over jumps, plus the killing
/// term `w φ(X_{ζ-}, ∂)`. The killing weight is `f(X_{ζ-})` in Itô mode and
/// the midpoint `½ f(X_{ζ-})` (`f(∂) = 0`) in Stratonovich mode.
pub fn jump_representation<S, F>(
    path: &PathSample<S, f64>,
    phi: &dyn JumpMap<S, f64>,
    mode: WeightMode,
    f: F,
    ac: Option<&AfTrace<f64>>,
    schedule: &TruncationSchedule,
) -> Result<(AfTrace<f64>, ConvergenceReport)>
where
    S: Clone,
    F: Fn(&S) -> f64 + Copy,
{
    let weight = match mode {
        WeightMode::Ito => Weight::Left,
        WeightMode::Stratonovich => Weight::Midpoint,
    };
    let antisym = |x: &S, y: &S| 0.5 * (phi.jump(x, y) - phi.jump(y, x));
    let (jumps, report) = starred_sum(weight, f, antisym, None, path, schedule)?;
    let mut terms: Vec<(f64, AfTrace<f64>)> = vec![(1.0, jumps)];
    if path.killed && path.zeta <= path.horizon {
        let x = path.last_state();
        let w = match mode {
            WeightMode::Ito => f(x),
            WeightMode::Stratonovich => 0.5 * f(x),
        };
        let z = path.zeta;
        let v = w * phi.kill(x);
        let (times, values, left) = if z < path.horizon {
            (vec![0.0, z, path.horizon], vec![0.0, v, v], vec![0.0, 0.0, v])
        } else {
            (vec![0.0, z], vec![0.0, v], vec![0.0, 0.0])
        };
        terms.push((1.0, AfTrace::from_parts(TraceKind::RawSum, times, values, left)));
    }
    if let Some(ac) = ac {
        let integrated = match mode {
            WeightMode::Ito => ito_integral(f, ac, path),
            WeightMode::Stratonovich => stratonovich_integral(f, ac, path)?,
        };
        terms.push((1.0, integrated));
    }
    let refs: Vec<(f64, &AfTrace<f64>)> = terms.iter().map(|(c, t)| (*c, t)).collect();
    Ok((AfTrace::linear_combination(TraceKind::Dirichlet, &refs), report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::{build_form, dirichlet_trace, simulate_chain_path, ChainModel, DirichletVariant, JumpFunction};

    #[test]
    fn no_jump_path_returns_continuous_part() {
        let p: PathSample<usize> = PathSample::constant(0, 1.0);
        let phi = JumpFunction::fukushima(&[1.0, 2.0]);
        let ac = AfTrace::from_parts(TraceKind::Dirichlet, vec![0.0, 1.0], vec![0.0, 0.7], vec![0.0, 0.7]);
        let (tr, rep) = jump_representation(&p, &phi, WeightMode::Ito, |_| 1.0, Some(&ac), &TruncationSchedule::default()).unwrap();
        assert!(rep.converged);
        assert!(tr.sup_distance(&ac) < 1e-15);
    }

    #[test]
    fn matches_symmetrised_dirichlet_process_on_chain() {
        let m = ChainModel::reference_r3();
        let form = build_form(&m).unwrap();
        let phi = JumpFunction::from_fn(3, |x, y| (x as f64 + 1.0) * (y as f64 - 0.5), |x| 0.3 * x as f64 + 0.1);
        let mut killed = 0;
        for seed in 0..200 {
            let p = simulate_chain_path(&m, 1, 3.0, seed).unwrap();
            killed += p.killed as usize;
            let abar = dirichlet_trace(&m, &form, &phi, &p, DirichletVariant::Abar).unwrap();
            let (rep, _) = jump_representation(&p, &phi, WeightMode::Ito, |_| 1.0, None, &TruncationSchedule::default()).unwrap();
            assert!(abar.sup_distance(&rep) < 1e-10, "seed {seed}");
        }
        assert!(killed > 0);
    }
}
