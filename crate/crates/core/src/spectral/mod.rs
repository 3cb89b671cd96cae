//! Spectral quantities of the twisted cocycle: fiber eigenvalues `λ^θ_ω`, the
//! moment function `Λ(θ)`, the variance `Σ²`, the large deviation rate
//! function and aperiodicity diagnostics for the local limit theorem.

mod aperiodicity;
mod moment;
mod rate;
mod theta;
mod twisted_ly;
mod variance;

pub use aperiodicity::{aperiodicity_diagnostic, AperiodicityReport, AperiodicityRow, RADIUS_TOL, SLOPE_TOL};
pub use moment::{
    fiber_log_eigenvalues, lambda_fiber_eigen, lambda_theta_montecarlo, lambda_theta_operator, log_moment,
    moment_function_montecarlo, moment_function_operator, FiberEigen, Method, MomentFunction, SecondDifference,
    DEGENERACY_TOL,
};
pub use rate::{rate_function, ConvexFit, RateFunction};
pub use theta::ThetaGrid;
pub use twisted_ly::{twisted_lasota_yorke, twisted_lasota_yorke_probe, TwistedLyFit, TwistedLyReport, TwistedLyRow};
pub use variance::{
    degeneracy_verdict, require_nondegenerate, variance_from_lambda, variance_of_sums, variance_series,
    LambdaVariance, VarianceSeries, VarianceVerdict,
};
