use serde::{Deserialize, Serialize};

use super::grid::{DensityVector, UlamGrid};
use super::model::OperatorModel;
use crate::dynamics::{OmegaPath, TrigPoly};
use crate::error::{Error, Result};
use crate::operator::model::cell_averages;
use crate::stats::{linear_fit, LinearFit};

/// Surrogate norms of one test density before and after `n` steps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormPair {
    pub n: usize,
    pub strong_before: f64,
    pub weak_before: f64,
    pub strong_after: f64,
}

/// Fitted constants of `‖Lⁿh‖_s ≤ B aⁿ ‖h‖_s + B ‖h‖_w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LasotaYorkeFit {
    pub b: f64,
    pub a: f64,
    /// Regression of `log max_h ‖Lⁿh‖_s / ‖h‖_s` on `n`.
    pub regression: LinearFit,
    /// `B(aⁿ‖h‖_s + ‖h‖_w) − ‖Lⁿh‖_s` for every pair; all nonnegative.
    pub residuals: Vec<f64>,
    pub pairs: Vec<NormPair>,
}

/// Ratios below this fraction of the initial one are treated as numerically
/// converged and left out of the rate regression.
const RATIO_FLOOR: f64 = 1e-10;

impl LasotaYorkeFit {
    /// Fit `(B, a)` to measured norm pairs. The rate comes from the
    /// regression; `B` is then the smallest constant (at least 1) for which
    /// every pair satisfies the inequality.
    pub fn from_pairs(pairs: Vec<NormPair>) -> Result<Self> {
        let mut ns: Vec<usize> = pairs.iter().map(|p| p.n).collect();
        ns.sort_unstable();
        ns.dedup();
        let worst = |n: usize| {
            pairs
                .iter()
                .filter(|p| p.n == n && p.strong_before > 0.0)
                .map(|p| p.strong_after / p.strong_before)
                .fold(0.0, f64::max)
        };
        let start = ns.first().map_or(0.0, |&n| worst(n));
        let (xs, ys): (Vec<f64>, Vec<f64>) = ns
            .iter()
            .map(|&n| (n as f64, worst(n)))
            .filter(|&(_, q)| q > RATIO_FLOOR * start && q > 0.0)
            .map(|(n, q)| (n, q.ln()))
            .unzip();
        let regression = linear_fit(&xs, &ys)
            .ok_or_else(|| Error::FitFailed("need at least two distinct step counts with nonzero strong norm".into()))?;
        let a = regression.slope.exp();
        if a >= 1.0 {
            return Err(Error::FitFailed(format!("a = {a:.6} >= 1; discretization too coarse")));
        }
        let bound = |p: &NormPair| a.powi(p.n as i32) * p.strong_before + p.weak_before;
        let b = pairs
            .iter()
            .filter(|p| bound(p) > 0.0)
            .map(|p| p.strong_after / bound(p))
            .fold(1.0, f64::max);
        let residuals = pairs.iter().map(|p| b * bound(p) - p.strong_after).collect();
        Ok(Self { b, a, regression, residuals, pairs })
    }
}

/// Oscillatory test densities `1 + ½cos(2π m·x)` for a few frequencies `m`,
/// as cell masses.
pub fn test_densities(grid: UlamGrid) -> Vec<DensityVector> {
    const FREQS: [[i64; 2]; 6] = [[1, 0], [0, 1], [1, 1], [2, -1], [3, 2], [4, 0]];
    FREQS
        .iter()
        .map(|&m| {
            let avg = cell_averages(&TrigPoly::cos(m, 0.5), grid);
            DensityVector {
                grid,
                weights: avg.iter().map(|v| (1.0 + v) / grid.cells() as f64).collect(),
            }
        })
        .collect()
}

/// Fit the Lasota–Yorke constants of the untwisted cocycle along `omega`
/// with grid total variation as the strong norm and L¹ on `coarse` as the
/// weak norm.
pub fn lasota_yorke_probe(
    model: &OperatorModel,
    omega: &OmegaPath,
    n_grid: &[usize],
    coarse: UlamGrid,
    tests: &[DensityVector],
) -> Result<LasotaYorkeFit> {
    let fine = model.grid();
    if fine.k() <= coarse.k() || !fine.refines(&coarse) {
        return Err(Error::InvalidArgument(format!(
            "fine grid {} must strictly refine coarse grid {}",
            fine.k(),
            coarse.k()
        )));
    }
    let n_max = n_grid.iter().copied().max().unwrap_or(0);
    let mut pairs = Vec::new();
    for h in tests {
        let strong_before = h.total_variation();
        let weak_before = h.aggregate(coarse)?.l1_norm();
        let mut cur = h.weights.clone();
        let mut buf = vec![0.0; fine.cells()];
        for n in 0..=n_max {
            if n > 0 {
                model.matrix(omega.symbol(n as i64 - 1)).matrix.push_forward(&cur, &mut buf);
                std::mem::swap(&mut cur, &mut buf);
            }
            if n_grid.contains(&n) {
                let strong_after = DensityVector { grid: fine, weights: cur.clone() }.total_variation();
                pairs.push(NormPair { n, strong_before, weak_before, strong_after });
            }
        }
    }
    LasotaYorkeFit::from_pairs(pairs)
}
