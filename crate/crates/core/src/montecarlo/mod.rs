//! Monte Carlo sampling from the fiber measures `μ_ω` and empirical checks of
//! the limit theorems against the spectral predictions.

mod plan;
mod sampling;
mod verify;

pub use plan::SamplePlan;
pub use sampling::{birkhoff_sums, observable_orbits, sample_mu_omega, BirkhoffSamples, MuSamples};
pub use verify::{
    empirical_variance, ks_statistic, ldp_required_samples, verify_clt, verify_lclt, verify_ldp, CltReport, LcltReport,
    LcltRow, LdpCell, LdpReport, LDP_MIN_TAIL_COUNT,
};
