use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{OmegaPath, RandomSystem};
use crate::error::{Error, Result};
use crate::montecarlo::{birkhoff_sums, SamplePlan};
use crate::operator::{OperatorModel, TwistedCocycle, TwistedDensity};
use crate::stats::{batch_means, Estimate};

/// Twisted masses below this are treated as a collapse of the cocycle.
pub const DEGENERACY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Operator,
    MonteCarlo,
}

/// Estimates of `Λ(θ)` on a real grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentFunction {
    pub theta: Vec<f64>,
    pub lambda_hat: Vec<f64>,
    pub std_err: Vec<f64>,
    pub method: Method,
    /// Grid points removed because the twisted cocycle degenerated there.
    pub dropped: Vec<f64>,
}

/// One discrete second difference of `Λ` and its noise scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondDifference {
    pub theta: f64,
    pub value: f64,
    pub std_err: f64,
}

impl MomentFunction {
    pub fn value_at(&self, theta: f64) -> Option<(f64, f64)> {
        self.theta
            .iter()
            .position(|&t| (t - theta).abs() < 1e-12)
            .map(|i| (self.lambda_hat[i], self.std_err[i]))
    }

    /// Second differences at interior nodes, scaled so that on a uniform grid
    /// they equal `Λ_{i+1} − 2Λ_i + Λ_{i−1}`.
    pub fn second_differences(&self) -> Vec<SecondDifference> {
        let (t, l, e) = (&self.theta, &self.lambda_hat, &self.std_err);
        (1..t.len().saturating_sub(1))
            .map(|i| {
                let (d0, d1) = (t[i] - t[i - 1], t[i + 1] - t[i]);
                let scale = 0.5 * (d0 + d1);
                let (a, b) = (scale / d0, scale / d1);
                SecondDifference {
                    theta: t[i],
                    value: b * (l[i + 1] - l[i]) - a * (l[i] - l[i - 1]),
                    std_err: ((b * e[i + 1]).powi(2) + ((a + b) * e[i]).powi(2) + (a * e[i - 1]).powi(2)).sqrt(),
                }
            })
            .collect()
    }

    /// Nodes where the second difference falls below `−k·std_err`, beyond
    /// the rounding error of the three values.
    pub fn convexity_violations(&self, k: f64) -> Vec<SecondDifference> {
        let scale = self.lambda_hat.iter().fold(0.0f64, |m, l| m.max(l.abs()));
        let rounding = 16.0 * f64::EPSILON * scale;
        self.second_differences()
            .into_iter()
            .filter(|d| d.value < -k * d.std_err - rounding)
            .collect()
    }
}

/// `λ^θ_ω` together with the normalised twisted density `h^θ_ω`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberEigen {
    pub lambda: Complex64,
    pub density: TwistedDensity,
}

fn degenerate(theta: Complex64, mass: Complex64) -> Error {
    Error::DegenerateTwist { re: theta.re, im: theta.im, magnitude: mass.norm() }
}

/// One step `h ↦ M^θᵀ h / λ`; returns `λ`. For an untwisted cocycle `λ = 1`
/// by mass conservation and the division only removes rounding drift.
fn twisted_step(cocycle: &TwistedCocycle, symbol: usize, h: &mut Vec<Complex64>, buf: &mut Vec<Complex64>) -> Result<Complex64> {
    cocycle.matrix(symbol).matrix.push_forward(h, buf);
    let mass: Complex64 = buf.iter().sum();
    if mass.norm() < DEGENERACY_TOL {
        return Err(degenerate(cocycle.theta, mass));
    }
    std::mem::swap(h, buf);
    h.iter_mut().for_each(|w| *w /= mass);
    Ok(if cocycle.is_untwisted { Complex64::new(1.0, 0.0) } else { mass })
}

/// Normalised twisted pullback from `σ^{−n}ω`.
fn twisted_pullback(cocycle: &TwistedCocycle, omega: &OmegaPath, n: usize, cells: usize) -> Result<Vec<Complex64>> {
    let mut h = vec![Complex64::new(1.0 / cells as f64, 0.0); cells];
    let mut buf = h.clone();
    for i in (1..=n as i64).rev() {
        twisted_step(cocycle, omega.symbol(-i), &mut h, &mut buf)?;
    }
    Ok(h)
}

/// `λ^θ_ω`: the mass of `M^θ_{ω}ᵀ h^θ_ω`, where `h^θ_ω` is the twisted
/// pullback of length `n_pullback`.
pub fn lambda_fiber_eigen(model: &OperatorModel, omega: &OmegaPath, theta: Complex64, n_pullback: usize) -> Result<FiberEigen> {
    let cocycle = model.twisted(theta);
    let grid = model.grid();
    let h = twisted_pullback(&cocycle, omega, n_pullback, grid.cells())?;
    let mut buf = vec![Complex64::new(0.0, 0.0); grid.cells()];
    cocycle.matrix(omega.symbol(0)).matrix.push_forward(&h, &mut buf);
    let mass: Complex64 = buf.iter().sum();
    if mass.norm() < DEGENERACY_TOL {
        return Err(degenerate(theta, mass));
    }
    let lambda = if cocycle.is_untwisted { Complex64::new(1.0, 0.0) } else { mass };
    Ok(FiberEigen { lambda, density: TwistedDensity { grid, weights: h } })
}

/// `log|λ^θ_{σⁱω}|` for `i < n_fibers`.
pub fn fiber_log_eigenvalues(
    model: &OperatorModel,
    omega: &OmegaPath,
    theta: Complex64,
    n_fibers: usize,
    n_pullback: usize,
) -> Result<Vec<f64>> {
    let cocycle = model.twisted(theta);
    let cells = model.grid().cells();
    let mut h = twisted_pullback(&cocycle, omega, n_pullback, cells)?;
    let mut buf = h.clone();
    (0..n_fibers as i64)
        .map(|i| twisted_step(&cocycle, omega.symbol(i), &mut h, &mut buf).map(|l| l.norm().ln()))
        .collect()
}

/// `Λ̂(θ)`, the average of `log|λ^θ|` over `n_fibers` consecutive fibers,
/// with a batch-means standard error.
pub fn lambda_theta_operator(
    model: &OperatorModel,
    omega: &OmegaPath,
    theta: Complex64,
    n_fibers: usize,
    n_pullback: usize,
    batches: usize,
) -> Result<Estimate> {
    if n_fibers < 10 {
        return Err(Error::InvalidArgument(format!("need at least 10 fibers, got {n_fibers}")));
    }
    let logs = fiber_log_eigenvalues(model, omega, theta, n_fibers, n_pullback)?;
    Ok(batch_means(&logs, batches))
}

/// `Λ̂` on a real grid, all points on the same path. Points at or beyond the
/// smallest `|θ|` where the cocycle degenerates are dropped symmetrically.
pub fn moment_function_operator(
    model: &OperatorModel,
    omega: &OmegaPath,
    thetas: &[f64],
    n_fibers: usize,
    n_pullback: usize,
    batches: usize,
) -> Result<MomentFunction> {
    let results: Vec<Result<Estimate>> = thetas
        .par_iter()
        .map(|&t| lambda_theta_operator(model, omega, Complex64::new(t, 0.0), n_fibers, n_pullback, batches))
        .collect();
    let mut cutoff = f64::INFINITY;
    for (t, r) in thetas.iter().zip(&results) {
        match r {
            Err(Error::DegenerateTwist { .. }) => cutoff = cutoff.min(t.abs()),
            Err(e) => return Err(e.clone()),
            Ok(_) => {}
        }
    }
    let mut mf = MomentFunction {
        theta: Vec::new(),
        lambda_hat: Vec::new(),
        std_err: Vec::new(),
        method: Method::Operator,
        dropped: Vec::new(),
    };
    for (&t, r) in thetas.iter().zip(results) {
        match r {
            Ok(e) if t.abs() < cutoff => {
                mf.theta.push(t);
                mf.lambda_hat.push(e.value);
                mf.std_err.push(e.std_err);
            }
            _ => mf.dropped.push(t),
        }
    }
    Ok(mf)
}

/// `(1/n) log mean e^{θ S}` over Birkhoff sums `S` of length `n`, evaluated
/// with a max shift so large `θS` cannot overflow. The standard error is the
/// delta-method error of the log-mean.
pub fn log_moment(sums: &[f64], n: usize, theta: f64) -> Estimate {
    if theta == 0.0 || sums.is_empty() {
        return Estimate { value: 0.0, std_err: 0.0 };
    }
    let shift = sums.iter().map(|s| theta * s).fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = sums.iter().map(|s| (theta * s - shift).exp()).collect();
    let m = crate::stats::mean(&w);
    let sd = crate::stats::variance(&w).sqrt();
    Estimate {
        value: (shift + m.ln()) / n as f64,
        std_err: sd / (m * (w.len() as f64).sqrt()) / n as f64,
    }
}

/// Monte Carlo `Λ(θ)` from `x ~ μ_ω` and sums of length `plan.n`.
pub fn lambda_theta_montecarlo(system: &RandomSystem, omega: &OmegaPath, theta: f64, plan: &SamplePlan) -> Result<Estimate> {
    let s = birkhoff_sums(system, omega, plan, &[plan.n])?;
    Ok(log_moment(&s.sums[0], plan.n, theta))
}

/// Monte Carlo moment function from one set of Birkhoff sums.
pub fn moment_function_montecarlo(sums: &[f64], n: usize, thetas: &[f64]) -> MomentFunction {
    let est: Vec<Estimate> = thetas.iter().map(|&t| log_moment(sums, n, t)).collect();
    MomentFunction {
        theta: thetas.to_vec(),
        lambda_hat: est.iter().map(|e| e.value).collect(),
        std_err: est.iter().map(|e| e.std_err).collect(),
        method: Method::MonteCarlo,
        dropped: Vec::new(),
    }
}
