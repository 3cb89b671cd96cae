use num_complex::Complex64;
use rayon::prelude::*;

use super::density::equivariant_density;
use super::grid::{DensityVector, UlamGrid};
use super::ulam::{TransitionSamples, TwistedUlamMatrix, UlamMatrix, UlamOptions};
use crate::dynamics::{Observable, OmegaPath, RandomSystem, TrigPoly};
use crate::error::{Error, Result};

/// Ulam discretisation of a whole random system: one sample stream and one
/// untwisted matrix per symbol, plus the observable evaluated at every
/// sample so that twisted matrices for any `θ` are cheap to assemble.
#[derive(Debug, Clone)]
pub struct OperatorModel {
    grid: UlamGrid,
    options: UlamOptions,
    samples: Vec<TransitionSamples>,
    untwisted: Vec<UlamMatrix>,
    g_values: Vec<Vec<f64>>,
}

/// Twisted matrices of every symbol at one `θ`.
#[derive(Debug, Clone)]
pub struct TwistedCocycle {
    pub theta: Complex64,
    pub matrices: Vec<TwistedUlamMatrix>,
    /// Every weight `e^{θg}` is exactly one (`θ = 0` or `g ≡ 0`), so the
    /// matrices coincide with the untwisted ones.
    pub is_untwisted: bool,
}

impl TwistedCocycle {
    pub fn matrix(&self, symbol: usize) -> &TwistedUlamMatrix {
        &self.matrices[symbol]
    }
}

/// Per-symbol centering offsets and the fiber means left over after
/// applying them.
#[derive(Debug, Clone, PartialEq)]
pub struct Centering {
    pub offsets: Vec<f64>,
    /// Largest `|∫ g dμ_ω|` over the sampled fibers, after centering.
    pub max_fiber_mean: f64,
    pub mean_density: DensityVector,
}

/// Cell averages of a trigonometric polynomial.
pub fn cell_averages(poly: &TrigPoly, grid: UlamGrid) -> Vec<f64> {
    let side = grid.side();
    (0..grid.cells())
        .map(|c| {
            let (x0, y0) = grid.origin(c);
            poly.cell_average(x0, y0, side)
        })
        .collect()
}

impl OperatorModel {
    pub fn build(system: &RandomSystem, grid: UlamGrid, options: &UlamOptions) -> Result<Self> {
        let samples = (0..system.alphabet_size())
            .map(|a| TransitionSamples::sample(system.map(a), grid, options, a))
            .collect::<Result<Vec<_>>>()?;
        let untwisted = samples.iter().map(TransitionSamples::untwisted).collect();
        let mut model = Self {
            grid,
            options: *options,
            samples,
            untwisted,
            g_values: Vec::new(),
        };
        model.set_observable(system.observable());
        Ok(model)
    }

    pub fn grid(&self) -> UlamGrid {
        self.grid
    }

    pub fn options(&self) -> &UlamOptions {
        &self.options
    }

    pub fn alphabet_size(&self) -> usize {
        self.samples.len()
    }

    pub fn matrix(&self, symbol: usize) -> &UlamMatrix {
        &self.untwisted[symbol]
    }

    pub fn samples(&self, symbol: usize) -> &TransitionSamples {
        &self.samples[symbol]
    }

    /// `g` at the source point of every sample of `symbol`.
    pub fn g_values(&self, symbol: usize) -> &[f64] {
        &self.g_values[symbol]
    }

    pub fn set_observable(&mut self, observable: &Observable) {
        self.g_values = self
            .samples
            .par_iter()
            .map(|s| {
                let a = s.symbol();
                s.sources()
                    .iter()
                    .zip(s.images())
                    .map(|(&x, &y)| observable.eval(a, x, y))
                    .collect()
            })
            .collect();
    }

    pub fn twisted(&self, theta: Complex64) -> TwistedCocycle {
        let matrices = self
            .samples
            .iter()
            .zip(&self.g_values)
            .map(|(s, g)| s.twisted(theta, g))
            .collect();
        let is_untwisted = theta == Complex64::new(0.0, 0.0) || self.g_values.iter().flatten().all(|&g| g == 0.0);
        TwistedCocycle { theta, matrices, is_untwisted }
    }

    /// `∫ g(ω,·) dμ_ω` on the grid for a fiber with density `h` and current
    /// symbol `symbol`. The coboundary part `r − r∘T` is integrated as
    /// `⟨h, r⟩ − ⟨Mᵀh, r⟩`.
    pub fn fiber_mean(&self, observable: &Observable, symbol: usize, h: &DensityVector) -> f64 {
        let mut m = h.integrate(&cell_averages(observable.polynomial(symbol), self.grid)) - observable.offsets()[symbol];
        if let Some(r) = observable.coboundary_term() {
            let r_avg = cell_averages(r, self.grid);
            let mut pushed = vec![0.0; self.grid.cells()];
            self.untwisted[symbol].matrix.push_forward(&h.weights, &mut pushed);
            let pushed = DensityVector { grid: self.grid, weights: pushed };
            m += h.integrate(&r_avg) - pushed.integrate(&r_avg);
        }
        m
    }

    /// Fixed point of the averaged operator `Σ_a p_a M_aᵀ`, reached by
    /// `n_iter` power steps from the uniform density. This is `E[h⁰_ω]`,
    /// since `h⁰_ω` depends only on the past of `ω`.
    pub fn stationary_density(&self, probs: &[f64], n_iter: usize) -> DensityVector {
        let n = self.grid.cells();
        let mut h = DensityVector::uniform(self.grid).weights;
        let mut buf = vec![0.0; n];
        for _ in 0..n_iter {
            let mut next = vec![0.0; n];
            for (a, &p) in probs.iter().enumerate() {
                self.untwisted[a].matrix.push_forward(&h, &mut buf);
                next.iter_mut().zip(&buf).for_each(|(x, b)| *x += p * b);
            }
            h = next;
        }
        DensityVector { grid: self.grid, weights: h }.normalized()
    }

    /// Offsets `c_a` making the mean of `g` vanish against the stationary
    /// density `E[h⁰_ω]`. Since `μ_ω` depends only on the past and `g` only
    /// on `ω₀`, this zeroes `E[∫ g dμ_ω | ω₀ = a]`. The fibers at `positions`
    /// along `omega` are only used to report the remaining per-fiber means.
    pub fn centering(
        &self,
        observable: &Observable,
        omega: &OmegaPath,
        positions: &[i64],
        n_pullback: usize,
    ) -> Result<Centering> {
        if positions.is_empty() {
            return Err(Error::InvalidArgument("centering needs at least one path position".into()));
        }
        let densities: Vec<DensityVector> = positions
            .par_iter()
            .map(|&p| equivariant_density(self, &omega.shift(p), n_pullback))
            .collect();
        let mean_density = self.stationary_density(omega.distribution().probs(), n_pullback);
        let raw = observable.clone().with_offsets(vec![0.0; observable.alphabet_size()])?;
        let offsets: Vec<f64> = (0..self.alphabet_size())
            .map(|a| self.fiber_mean(&raw, a, &mean_density))
            .collect();
        let centered = raw.with_offsets(offsets.clone())?;
        let max_fiber_mean = positions
            .iter()
            .zip(&densities)
            .map(|(&p, d)| self.fiber_mean(&centered, omega.symbol(p), d).abs())
            .fold(0.0, f64::max);
        Ok(Centering { offsets, max_fiber_mean, mean_density })
    }
}
