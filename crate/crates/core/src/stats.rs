//! Small statistics helpers shared by the spectral and Monte-Carlo modules.

use serde::{Deserialize, Serialize};

/// A point estimate with a batch-means standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_err: f64,
}

/// Neumaier-compensated sum; the result depends only on the order of `xs`.
pub fn compensated_sum<I: IntoIterator<Item = f64>>(xs: I) -> f64 {
    let mut sum = 0.0;
    let mut c = 0.0;
    for x in xs {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            c += (sum - t) + x;
        } else {
            c += (x - t) + sum;
        }
        sum = t;
    }
    sum + c
}

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    compensated_sum(xs.iter().copied()) / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    if xs.len() < 2 {
        return 0.0;
    }
    let m = mean(xs);
    compensated_sum(xs.iter().map(|x| (x - m) * (x - m))) / (xs.len() - 1) as f64
}

/// Mean of `xs` with the standard error estimated from `batches`
/// contiguous batch means.
pub fn batch_means(xs: &[f64], batches: usize) -> Estimate {
    let value = mean(xs);
    let b = batches.max(2).min(xs.len().max(1));
    let size = xs.len() / b;
    if size == 0 {
        return Estimate { value, std_err: f64::NAN };
    }
    let means: Vec<f64> = (0..b).map(|i| mean(&xs[i * size..(i + 1) * size])).collect();
    Estimate {
        value,
        std_err: (variance(&means) / b as f64).sqrt(),
    }
}

/// Standard error of a statistic from its per-batch values.
pub fn std_err_of(batch_values: &[f64]) -> f64 {
    if batch_values.len() < 2 {
        return f64::NAN;
    }
    (variance(batch_values) / batch_values.len() as f64).sqrt()
}

/// Ordinary least squares `y ≈ intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Option<LinearFit> {
    let n = x.len();
    if n < 2 || y.len() != n {
        return None;
    }
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|v| (v - my).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(LinearFit {
        slope,
        intercept: my - slope * mx,
        r_squared,
    })
}
