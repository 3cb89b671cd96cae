use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Twist parameters: a symmetric real segment `[−θ_max, θ_max]` and an
/// imaginary segment `{it : t ∈ [t_min, t_max]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThetaGrid {
    pub theta_max: f64,
    /// Sorted, symmetric, contains 0.
    pub real: Vec<f64>,
    pub imag: Vec<f64>,
}

fn push_symmetric(v: &mut Vec<f64>, x: f64) {
    v.push(x);
    v.push(-x);
}

impl ThetaGrid {
    /// Real points at multiples of `spacing` up to `theta_max`, plus the
    /// finite-difference stencil `±h/2, ±h, ±2h`; `n_t` evenly spaced
    /// imaginary parts in `[t_min, t_max]`.
    pub fn new(theta_max: f64, spacing: f64, fd_step: f64, t_min: f64, t_max: f64, n_t: usize) -> Result<Self> {
        if !(theta_max > 0.0 && theta_max.is_finite()) {
            return Err(Error::InvalidArgument(format!("theta_max must be positive, got {theta_max}")));
        }
        if !(spacing > 0.0 && spacing <= theta_max) {
            return Err(Error::InvalidArgument(format!("theta spacing must be in (0, theta_max], got {spacing}")));
        }
        if !(fd_step > 0.0 && 2.0 * fd_step <= theta_max) {
            return Err(Error::InvalidArgument(format!(
                "finite-difference step must satisfy 0 < 2h <= theta_max, got {fd_step}"
            )));
        }
        if !(t_min.is_finite() && t_max.is_finite() && t_min <= t_max) {
            return Err(Error::InvalidArgument("t_min must not exceed t_max".into()));
        }
        let mut real = vec![0.0];
        let steps = (theta_max / spacing + 1e-9).floor() as usize;
        for i in 1..=steps {
            push_symmetric(&mut real, i as f64 * spacing);
        }
        for f in [0.5, 1.0, 2.0] {
            push_symmetric(&mut real, f * fd_step);
        }
        real.sort_by(f64::total_cmp);
        real.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        let imag = match n_t {
            0 => Vec::new(),
            1 => vec![t_min],
            n => (0..n).map(|i| t_min + (t_max - t_min) * i as f64 / (n - 1) as f64).collect(),
        };
        Ok(Self { theta_max, real, imag })
    }

    pub fn values(&self) -> Vec<Complex64> {
        self.real
            .iter()
            .map(|&t| Complex64::new(t, 0.0))
            .chain(self.imag.iter().map(|&t| Complex64::new(0.0, t)))
            .collect()
    }
}
