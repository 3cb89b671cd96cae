use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::OmegaPath;
use crate::error::{Error, Result};
use crate::operator::eigen::{leading_eigenvalue, ArnoldiOptions};
use crate::operator::{test_densities, OperatorModel, TwistedCocycle, TwistedDensity};
use crate::stats::linear_fit;

pub const SLOPE_TOL: f64 = 1e-3;
pub const RADIUS_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AperiodicityRow {
    pub t: f64,
    /// Worst (largest) decay slope of `log‖M^{it,(m)} v‖₁` against `m`.
    pub slope: f64,
    /// `|leading eigenvalue|` of the twisted matrix on the constant path.
    pub radius: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AperiodicityReport {
    pub rows: Vec<AperiodicityRow>,
    /// Symbol of the constant path used for the radius.
    pub periodic_symbol: usize,
    pub n: usize,
}

impl AperiodicityReport {
    pub fn passes(&self) -> bool {
        !self.rows.is_empty() && self.rows.iter().all(|r| r.pass)
    }

    pub fn failing_t(&self) -> Vec<f64> {
        self.rows.iter().filter(|r| !r.pass).map(|r| r.t).collect()
    }

    /// `Ok` when every `t` passes, otherwise the refusal error.
    pub fn require_pass(&self) -> Result<()> {
        if self.passes() {
            Ok(())
        } else {
            Err(Error::AperiodicityFailed { failing_t: self.failing_t() })
        }
    }
}

/// Decay slope of `log‖M^{(m)} v‖₁` over `m = 1..=n` along `omega`.
fn decay_slope(cocycle: &TwistedCocycle, omega: &OmegaPath, start: &TwistedDensity, n: usize) -> Result<f64> {
    let mut h = start.weights.clone();
    let mut buf = h.clone();
    let mut log_norm = 0.0;
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for m in 1..=n {
        cocycle.matrix(omega.symbol(m as i64 - 1)).matrix.push_forward(&h, &mut buf);
        std::mem::swap(&mut h, &mut buf);
        let norm: f64 = h.iter().map(|z| z.norm()).sum();
        if !(norm > 0.0 && norm.is_finite()) {
            // the iterate vanished, which is decay faster than any fit can show
            return Ok(f64::NEG_INFINITY);
        }
        log_norm += norm.ln();
        h.iter_mut().for_each(|z| *z /= norm);
        xs.push(m as f64);
        ys.push(log_norm);
    }
    linear_fit(&xs, &ys)
        .map(|f| f.slope)
        .ok_or_else(|| Error::FitFailed("decay slope needs at least two steps".into()))
}

/// Condition (L) surrogate and periodic-path spectral radius at each `t`.
pub fn aperiodicity_diagnostic(
    model: &OperatorModel,
    omega: &OmegaPath,
    t_grid: &[f64],
    n: usize,
    periodic_symbol: usize,
    arnoldi: &ArnoldiOptions,
) -> Result<AperiodicityReport> {
    if n < 20 {
        return Err(Error::InvalidArgument(format!("need n >= 20, got {n}")));
    }
    if t_grid.iter().any(|&t| t == 0.0) {
        return Err(Error::InvalidArgument("t = 0 is not allowed in the aperiodicity grid".into()));
    }
    if periodic_symbol >= model.alphabet_size() {
        return Err(Error::InvalidArgument(format!("no symbol {periodic_symbol}")));
    }
    let grid = model.grid();
    let mut starts = vec![TwistedDensity::from_real(&crate::operator::DensityVector::uniform(grid))];
    starts.extend(test_densities(grid).iter().map(TwistedDensity::from_real));
    let rows = t_grid
        .par_iter()
        .map(|&t| {
            let cocycle = model.twisted(Complex64::new(0.0, t));
            let slope = starts
                .iter()
                .map(|v| decay_slope(&cocycle, omega, v, n))
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .fold(f64::NEG_INFINITY, f64::max);
            let m = &cocycle.matrix(periodic_symbol).matrix;
            let radius = leading_eigenvalue(grid.cells(), |x, y| m.push_forward(x, y), arnoldi)?
                .value
                .norm();
            let pass = slope < -SLOPE_TOL && radius < 1.0 - RADIUS_TOL;
            Ok(AperiodicityRow { t, slope, radius, pass })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AperiodicityReport { rows, periodic_symbol, n })
}
