use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::plan::SamplePlan;
use super::sampling::birkhoff_sums;
use crate::dynamics::{OmegaPath, RandomSystem};
use crate::error::{Error, Result};
use crate::spectral::{require_nondegenerate, variance_of_sums, AperiodicityReport, RateFunction};
use crate::stats::Estimate;

/// Expected tail count the LDP planner asks for at the largest `n`.
pub const LDP_MIN_TAIL_COUNT: f64 = 50.0;

/// Kolmogorov–Smirnov distance between the empirical law of `xs` and `cdf`.
pub fn ks_statistic(xs: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Sample variance of `S_n/√n` at `n = plan.n`.
pub fn empirical_variance(system: &RandomSystem, omega: &OmegaPath, plan: &SamplePlan) -> Result<Estimate> {
    let s = birkhoff_sums(system, omega, plan, &[plan.n])?;
    Ok(variance_of_sums(&s.sums[0], plan.n, plan.batches))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub n: usize,
    pub n_samples: usize,
    pub sigma2: f64,
    pub ks: f64,
    pub batch_ks: Vec<f64>,
    /// Standard deviation of the batch KS values, the noise scale used when
    /// comparing KS across `n` or across paths.
    pub ks_noise: f64,
    pub sample_mean: f64,
    pub sample_variance: f64,
}

/// KS distance of `S_n/√n` from `N(0, σ²)` at every `n` in `ns`, with `σ²`
/// supplied by the spectral estimate.
pub fn verify_clt(
    system: &RandomSystem,
    omega: &OmegaPath,
    plan: &SamplePlan,
    sigma2: f64,
    degeneracy_threshold: f64,
    ns: &[usize],
) -> Result<Vec<CltReport>> {
    require_nondegenerate(sigma2, degeneracy_threshold)?;
    let normal = Normal::new(0.0, sigma2.sqrt()).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let cdf = |x: f64| normal.cdf(x);
    let samples = birkhoff_sums(system, omega, plan, ns)?;
    let bs = plan.batch_size();
    Ok(samples
        .checkpoints
        .iter()
        .zip(&samples.sums)
        .map(|(&n, sums)| {
            let z: Vec<f64> = sums.iter().map(|s| s / (n as f64).sqrt()).collect();
            let batch_ks: Vec<f64> = z.chunks(bs).map(|b| ks_statistic(b, cdf)).collect();
            CltReport {
                n,
                n_samples: z.len(),
                sigma2,
                ks: ks_statistic(&z, cdf),
                ks_noise: crate::stats::variance(&batch_ks).sqrt(),
                batch_ks,
                sample_mean: crate::stats::mean(&z),
                sample_variance: crate::stats::variance(&z),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdpCell {
    pub eps: f64,
    pub n: usize,
    pub tail_count: usize,
    /// `−(1/n) log μ̂(S_n > nε)`; `None` when no sample reached the tail.
    pub empirical_rate: Option<f64>,
    pub predicted: f64,
    pub residual: Option<f64>,
    /// `N e^{−n c(ε)}`.
    pub expected_count: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdpReport {
    pub n_samples: usize,
    pub cells: Vec<LdpCell>,
    /// Samples needed for [`LDP_MIN_TAIL_COUNT`] expected tail hits at the
    /// largest `n`, per `ε`.
    pub required_samples: Vec<f64>,
    pub planner_satisfied: bool,
}

/// Samples needed for the expected tail count at level `c` and length `n`.
pub fn ldp_required_samples(c: f64, n: usize) -> f64 {
    LDP_MIN_TAIL_COUNT * (n as f64 * c).exp()
}

/// Empirical tail decay rates against `c(ε)`. Cells with no tail hits are
/// flagged and left without a rate.
pub fn verify_ldp(
    system: &RandomSystem,
    omega: &OmegaPath,
    plan: &SamplePlan,
    eps: &[f64],
    ns: &[usize],
    rate: &RateFunction,
) -> Result<LdpReport> {
    let predicted: Vec<f64> = eps.iter().map(|&e| rate.at(e)).collect::<Result<_>>()?;
    let n_max = ns.iter().copied().max().unwrap_or(0);
    let required_samples: Vec<f64> = predicted.iter().map(|&c| ldp_required_samples(c, n_max)).collect();
    let samples = birkhoff_sums(system, omega, plan, ns)?;
    let total = plan.n_samples as f64;
    let mut cells = Vec::new();
    for (&e, &c) in eps.iter().zip(&predicted) {
        for (&n, sums) in samples.checkpoints.iter().zip(&samples.sums) {
            let threshold = n as f64 * e;
            let tail_count = sums.iter().filter(|&&s| s > threshold).count();
            let empirical_rate = (tail_count > 0).then(|| -(tail_count as f64 / total).ln() / n as f64);
            cells.push(LdpCell {
                eps: e,
                n,
                tail_count,
                empirical_rate,
                predicted: c,
                residual: empirical_rate.map(|r| r - c),
                expected_count: total * (-(n as f64) * c).exp(),
                flagged: tail_count == 0,
            });
        }
    }
    Ok(LdpReport {
        n_samples: plan.n_samples,
        planner_satisfied: required_samples.iter().all(|&r| r <= total),
        required_samples,
        cells,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LcltRow {
    pub s: f64,
    /// `Σ√n μ̂(s + S_n ∈ J)`.
    pub empirical: f64,
    /// `e^{−s²/(2nΣ²)} |J| / √(2π)`.
    pub predicted: f64,
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LcltReport {
    pub n: usize,
    pub n_samples: usize,
    pub sigma2: f64,
    pub interval: (f64, f64),
    pub rows: Vec<LcltRow>,
    pub sup_residual: f64,
    /// `sup_residual` divided by the peak prediction `|J|/√(2π)`.
    pub relative_residual: f64,
    /// Monte Carlo standard error of the row attaining the supremum, on the
    /// same relative scale.
    pub relative_std_err: f64,
}

/// Local limit check on `J = [j0, j1)` over `s_grid`. Refused unless the
/// aperiodicity diagnostic passed and `σ²` is nondegenerate, in that order.
#[allow(clippy::too_many_arguments)]
pub fn verify_lclt(
    system: &RandomSystem,
    omega: &OmegaPath,
    plan: &SamplePlan,
    interval: (f64, f64),
    s_grid: &[f64],
    sigma2: f64,
    degeneracy_threshold: f64,
    aperiodicity: &AperiodicityReport,
) -> Result<LcltReport> {
    aperiodicity.require_pass()?;
    require_nondegenerate(sigma2, degeneracy_threshold)?;
    let (j0, j1) = interval;
    if !(j1 > j0) {
        return Err(Error::InvalidArgument(format!("empty interval [{j0}, {j1})")));
    }
    let n = plan.n;
    let samples = birkhoff_sums(system, omega, plan, &[n])?;
    let mut sums = samples.sums.into_iter().next().unwrap();
    sums.sort_by(f64::total_cmp);
    let total = sums.len() as f64;
    let scale = (sigma2 * n as f64).sqrt();
    let peak = (j1 - j0) / std::f64::consts::TAU.sqrt();
    let rows: Vec<LcltRow> = s_grid
        .iter()
        .map(|&s| {
            let lo = sums.partition_point(|&x| x < j0 - s);
            let hi = sums.partition_point(|&x| x < j1 - s);
            let p = (hi - lo) as f64 / total;
            LcltRow {
                s,
                empirical: scale * p,
                predicted: peak * (-s * s / (2.0 * n as f64 * sigma2)).exp(),
                std_err: scale * (p * (1.0 - p) / total).sqrt(),
            }
        })
        .collect();
    let worst = rows
        .iter()
        .max_by(|a, b| (a.empirical - a.predicted).abs().total_cmp(&(b.empirical - b.predicted).abs()))
        .copied();
    let (sup_residual, worst_se) = worst.map_or((0.0, 0.0), |r| ((r.empirical - r.predicted).abs(), r.std_err));
    Ok(LcltReport {
        n,
        n_samples: plan.n_samples,
        sigma2,
        interval,
        rows,
        sup_residual,
        relative_residual: sup_residual / peak,
        relative_std_err: worst_se / peak,
    })
}
