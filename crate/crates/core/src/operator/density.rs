use super::grid::DensityVector;
use super::model::OperatorModel;
use crate::dynamics::OmegaPath;
use crate::stats::{linear_fit, LinearFit};

/// `M_{σ⁻¹ω}ᵀ ⋯ M_{σ⁻ⁿω}ᵀ · uniform`, renormalised to mass one.
pub fn pullback(model: &OperatorModel, omega: &OmegaPath, n: usize) -> DensityVector {
    let grid = model.grid();
    let mut h = DensityVector::uniform(grid).weights;
    let mut next = vec![0.0; grid.cells()];
    for i in (1..=n as i64).rev() {
        model.matrix(omega.symbol(-i)).matrix.push_forward(&h, &mut next);
        std::mem::swap(&mut h, &mut next);
    }
    DensityVector { grid, weights: h }.normalized()
}

/// Discrete equivariant density `h⁰_ω`: the pullback of length `n_pullback`.
///
/// There is no early exit on small consecutive gaps: a single volume-preserving
/// step fixes the uniform start exactly, so a zero gap says nothing about
/// convergence.
pub fn equivariant_density(model: &OperatorModel, omega: &OmegaPath, n_pullback: usize) -> DensityVector {
    pullback(model, omega, n_pullback)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecayProfile {
    /// `(n, ‖pullback_n − pullback_{n+1}‖₁)`.
    pub gaps: Vec<(usize, f64)>,
    /// Fit of `log gap` against `n` over gaps above the rounding floor;
    /// `None` when fewer than two such gaps exist.
    pub fit: Option<LinearFit>,
}

impl DecayProfile {
    /// Fitted prefactor and rate `(D, λ)` with `gap(n) ≈ D e^{−λn}`.
    pub fn rate(&self) -> Option<(f64, f64)> {
        self.fit.map(|f| (f.intercept.exp(), -f.slope))
    }

    /// `(D, λ)` with `λ` from a regression over gaps at `n ≥ n_min` and `D`
    /// the smallest prefactor such that every such gap is `≤ D e^{−λn}`.
    pub fn envelope(&self, n_min: usize) -> Option<(f64, f64)> {
        let pts: Vec<(f64, f64)> = self
            .gaps
            .iter()
            .filter(|&&(n, g)| n >= n_min && g > GAP_FLOOR)
            .map(|&(n, g)| (n as f64, g))
            .collect();
        let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().map(|&(n, g)| (n, g.ln())).unzip();
        let lambda = -linear_fit(&xs, &ys)?.slope;
        let d = pts.iter().map(|&(n, g)| g * (lambda * n).exp()).fold(0.0, f64::max);
        Some((d, lambda))
    }
}

const GAP_FLOOR: f64 = 1e-13;

/// L¹ gaps between consecutive pullbacks for `n = 0..n_max`.
pub fn pullback_decay_profile(model: &OperatorModel, omega: &OmegaPath, n_max: usize) -> DecayProfile {
    let pulls: Vec<DensityVector> = (0..=n_max).map(|n| pullback(model, omega, n)).collect();
    let gaps: Vec<(usize, f64)> = pulls.windows(2).enumerate().map(|(n, w)| (n, w[0].l1_distance(&w[1]))).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = gaps
        .iter()
        .filter(|(_, g)| *g > GAP_FLOOR)
        .map(|&(n, g)| (n as f64, g.ln()))
        .unzip();
    let fit = if xs.len() >= 2 { linear_fit(&xs, &ys) } else { None };
    DecayProfile { gaps, fit }
}
