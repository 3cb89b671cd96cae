use serde::{Deserialize, Serialize};

use super::moment::MomentFunction;
use crate::dynamics::{OmegaPath, RandomSystem};
use crate::error::{Error, Result};
use crate::montecarlo::{observable_orbits, SamplePlan};
use crate::stats::{batch_means, compensated_sum, Estimate};

/// Truncated autocovariance series for `Σ²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceSeries {
    /// `C(j) = ∫ g · g∘τʲ dμ` for `j = 0..=n_max`.
    pub autocovariances: Vec<f64>,
    /// `C(0) + 2 Σ_{1≤j≤m} C(j)` for `m = 0..=n_max`.
    pub cumulative: Vec<f64>,
    pub estimate: Estimate,
}

/// Monte Carlo estimate of `Σ² = C(0) + 2 Σ_{j≥1} C(j)` truncated at `n_max`,
/// sampling `(ω, x)` from the skew product: sample `i` starts on the fiber
/// `σ^{i·stride}ω`. Each orbit has length `n_max + window`, and every start
/// time in the first `window` steps contributes (the pairs are stationary
/// because `μ` is `τ`-invariant).
pub fn variance_series(
    system: &RandomSystem,
    omega: &OmegaPath,
    n_max: usize,
    window: usize,
    stride: i64,
    plan: &SamplePlan,
) -> Result<VarianceSeries> {
    if n_max == 0 || window == 0 {
        return Err(Error::InvalidArgument("n_max and window must be positive".into()));
    }
    let (orbits, _) = observable_orbits(system, omega, plan, n_max + window, stride)?;
    // per-sample estimates of each C(j) and of the truncated sum
    let per_sample: Vec<(Vec<f64>, f64)> = orbits
        .iter()
        .map(|g| {
            let c: Vec<f64> = (0..=n_max)
                .map(|j| compensated_sum((0..window).map(|i| g[i] * g[i + j])) / window as f64)
                .collect();
            let total = c[0] + 2.0 * c[1..].iter().sum::<f64>();
            (c, total)
        })
        .collect();
    let n = per_sample.len() as f64;
    let autocovariances: Vec<f64> = (0..=n_max)
        .map(|j| compensated_sum(per_sample.iter().map(|(c, _)| c[j])) / n)
        .collect();
    let mut cumulative = Vec::with_capacity(n_max + 1);
    let mut acc = autocovariances[0];
    cumulative.push(acc);
    for c in &autocovariances[1..] {
        acc += 2.0 * c;
        cumulative.push(acc);
    }
    let totals: Vec<f64> = per_sample.iter().map(|(_, t)| *t).collect();
    Ok(VarianceSeries { autocovariances, cumulative, estimate: batch_means(&totals, plan.batches) })
}

/// `Λ''(0)` from the five-point stencil at `h`, with the same stencil at
/// `h/2` reported as a Richardson-style consistency check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LambdaVariance {
    pub h: f64,
    pub value: f64,
    pub std_err: f64,
    pub half_step: f64,
    /// Richardson extrapolation `(16·half_step − value)/15`.
    pub extrapolated: f64,
}

fn stencil(mf: &MomentFunction, h: f64) -> Result<(f64, f64)> {
    let at = |t: f64| {
        mf.value_at(t)
            .ok_or_else(|| Error::GridTooCoarse(format!("theta = {t} is missing from the grid")))
    };
    let pts = [(-2.0, -1.0), (-1.0, 16.0), (0.0, -30.0), (1.0, 16.0), (2.0, -1.0)];
    let mut value = 0.0;
    let mut var = 0.0;
    for (k, w) in pts {
        let (l, e) = at(k * h)?;
        value += w * l;
        var += (w * e).powi(2);
    }
    let d = 12.0 * h * h;
    Ok((value / d, var.sqrt() / d))
}

pub fn variance_from_lambda(mf: &MomentFunction, h: f64) -> Result<LambdaVariance> {
    if !(h > 0.0) {
        return Err(Error::InvalidArgument(format!("step must be positive, got {h}")));
    }
    let (value, std_err) = stencil(mf, h)?;
    let (half_step, _) = stencil(mf, h / 2.0)?;
    Ok(LambdaVariance { h, value, std_err, half_step, extrapolated: (16.0 * half_step - value) / 15.0 })
}

/// Sample variance of `S_n / √n` with a batch-means standard error.
pub fn variance_of_sums(sums: &[f64], n: usize, batches: usize) -> Estimate {
    let scaled: Vec<f64> = sums.iter().map(|s| s * s / n as f64).collect();
    let m = crate::stats::mean(sums);
    let mut e = batch_means(&scaled, batches);
    e.value -= m * m / n as f64;
    e
}

/// Outcome of the `Σ² > 0` gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceVerdict {
    Nondegenerate,
    Degenerate,
}

pub fn degeneracy_verdict(sigma2: f64, threshold: f64) -> VarianceVerdict {
    if sigma2 < threshold {
        VarianceVerdict::Degenerate
    } else {
        VarianceVerdict::Nondegenerate
    }
}

/// `Ok` when `σ²` clears the gate, otherwise the refusal error.
pub fn require_nondegenerate(sigma2: f64, threshold: f64) -> Result<()> {
    match degeneracy_verdict(sigma2, threshold) {
        VarianceVerdict::Nondegenerate => Ok(()),
        VarianceVerdict::Degenerate => Err(Error::DegenerateVariance { sigma2, threshold }),
    }
}
