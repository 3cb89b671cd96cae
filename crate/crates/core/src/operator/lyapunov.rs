use rand::Rng;
use serde::{Deserialize, Serialize};

use super::model::OperatorModel;
use crate::dynamics::OmegaPath;
use crate::error::{Error, Result};
use crate::seed;

pub const MAX_EXPONENTS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovReport {
    /// Descending.
    pub exponents: Vec<f64>,
    pub n_steps: usize,
    pub reorth_period: usize,
    /// `max |QᵀQ − I|` after each re-orthonormalisation.
    pub residuals: Vec<f64>,
}

/// Relative size below which a new frame column counts as linearly dependent.
const RANK_TOL: f64 = 1e-12;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Modified Gram–Schmidt applied twice; returns `log R_ii`.
fn orthonormalize(frame: &mut [Vec<f64>], step: usize) -> Result<Vec<f64>> {
    let mut logs = Vec::with_capacity(frame.len());
    for j in 0..frame.len() {
        let (done, rest) = frame.split_at_mut(j);
        let v = &mut rest[0];
        let before = dot(v, v).sqrt();
        for _ in 0..2 {
            for q in done.iter() {
                let c = dot(q, v);
                v.iter_mut().zip(q).for_each(|(x, y)| *x -= c * y);
            }
        }
        let norm = dot(v, v).sqrt();
        if !norm.is_finite() || norm == 0.0 || norm < RANK_TOL * before {
            return Err(Error::FrameDegeneracy { step, diagonal: norm });
        }
        v.iter_mut().for_each(|x| *x /= norm);
        logs.push(norm.ln());
    }
    Ok(logs)
}

fn orthogonality_defect(frame: &[Vec<f64>]) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..frame.len() {
        for j in 0..=i {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((dot(&frame[i], &frame[j]) - target).abs());
        }
    }
    worst
}

/// Top `r` Lyapunov exponents of the push-forward cocycle `h ↦ M_{ω_i}ᵀ h`
/// along `omega`, from an orthonormal `r`-frame re-orthonormalised every
/// `reorth_period` steps.
pub fn lyapunov_spectrum(
    model: &OperatorModel,
    omega: &OmegaPath,
    n_steps: usize,
    r: usize,
    reorth_period: usize,
) -> Result<LyapunovReport> {
    if r == 0 || r > MAX_EXPONENTS {
        return Err(Error::InvalidArgument(format!("r must be in 1..={MAX_EXPONENTS}, got {r}")));
    }
    if reorth_period == 0 || n_steps < reorth_period {
        return Err(Error::InvalidArgument("n_steps must be at least reorth_period >= 1".into()));
    }
    let n = model.grid().cells();
    if r > n {
        return Err(Error::InvalidArgument("more exponents than cells".into()));
    }
    let mut rng = seed::substream(omega.seed(), 0x4c59_4150);
    // positive entries give the first column a large component along the
    // mass-carrying direction, which keeps the transient short
    let mut frame: Vec<Vec<f64>> = (0..r).map(|_| (0..n).map(|_| rng.gen::<f64>()).collect()).collect();
    orthonormalize(&mut frame, 0)?;

    let mut sums = vec![0.0; r];
    let mut residuals = Vec::new();
    let mut buf = vec![0.0; n];
    for step in 1..=n_steps {
        let m = &model.matrix(omega.symbol(step as i64 - 1)).matrix;
        for v in frame.iter_mut() {
            m.push_forward(v, &mut buf);
            std::mem::swap(v, &mut buf);
        }
        if step % reorth_period == 0 || step == n_steps {
            let logs = orthonormalize(&mut frame, step)?;
            sums.iter_mut().zip(logs).for_each(|(s, l)| *s += l);
            residuals.push(orthogonality_defect(&frame));
        }
    }
    let mut exponents: Vec<f64> = sums.iter().map(|s| s / n_steps as f64).collect();
    exponents.sort_by(|a, b| b.total_cmp(a));
    Ok(LyapunovReport { exponents, n_steps, reorth_period, residuals })
}
