use rayon::prelude::*;

use crate::error::Result;

/// Tabulates an expensive function of one variable on a uniform grid and
/// answers queries by cubic interpolation. Cells where the interpolant
/// misses the function at the cell midpoint by more than the tolerance, and
/// queries outside the grid, fall back to direct evaluation.
pub struct GridCache<F> {
    f: F,
    lo: f64,
    step: f64,
    nodes: Vec<f64>,
    direct: Vec<bool>,
}

impl<F> GridCache<F>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    pub fn build(f: F, lo: f64, hi: f64, cells: usize, abs_tol: f64, rel_tol: f64) -> Result<Self> {
        let cells = cells.max(4);
        let step = (hi - lo) / cells as f64;
        let nodes: Vec<f64> = (0..=cells).into_par_iter().map(|i| f(lo + step * i as f64).unwrap_or(f64::NAN)).collect();
        let mids: Vec<f64> = (0..cells).into_par_iter().map(|i| f(lo + step * (i as f64 + 0.5)).unwrap_or(f64::NAN)).collect();
        let mut cache = Self { f, lo, step, nodes, direct: vec![false; cells] };
        for (i, &m) in mids.iter().enumerate() {
            let approx = cache.interpolate(i, 0.5);
            if !(approx.is_finite() && m.is_finite()) || (approx - m).abs() > abs_tol + rel_tol * m.abs() {
                cache.direct[i] = true;
            }
        }
        Ok(cache)
    }

    fn interpolate(&self, cell: usize, s: f64) -> f64 {
        let n = self.nodes.len();
        // stencil of four nodes, shifted inwards at the edges
        let start = cell.saturating_sub(1).min(n - 4);
        let t = s + (cell - start) as f64;
        let y = &self.nodes[start..start + 4];
        let l0 = -(t - 1.0) * (t - 2.0) * (t - 3.0) / 6.0;
        let l1 = t * (t - 2.0) * (t - 3.0) / 2.0;
        let l2 = -t * (t - 1.0) * (t - 3.0) / 2.0;
        let l3 = t * (t - 1.0) * (t - 2.0) / 6.0;
        l0 * y[0] + l1 * y[1] + l2 * y[2] + l3 * y[3]
    }

    pub fn eval(&self, x: f64) -> Result<f64> {
        let pos = (x - self.lo) / self.step;
        if !(pos >= 0.0 && pos < self.direct.len() as f64) {
            return (self.f)(x);
        }
        let cell = pos as usize;
        if self.direct[cell] {
            return (self.f)(x);
        }
        Ok(self.interpolate(cell, pos - cell as f64))
    }

    /// Fraction of cells answered by direct evaluation.
    pub fn direct_fraction(&self) -> f64 {
        self.direct.iter().filter(|&&d| d).count() as f64 / self.direct.len() as f64
    }
}
